"""
Serializers for manifold documents.
"""

import logging

from manifold.levels import AvoidedCrossing, BareLevel, LevelManifold, QuantumLabels, intersection_field
from manifold.units import B0_TOLERANCE_G
from rest_framework import serializers

logger = logging.getLogger(__name__)


class StrictFieldsMixin:
    """Reject keys the serializer does not declare, or only warn in lax mode."""

    def to_internal_value(self, data):
        if isinstance(data, dict):
            unknown = sorted(set(data) - set(self.fields))
            if unknown:
                where = self.context.get("where", self.__class__.__name__)
                if self.context.get("lax"):
                    logger.warning("Ignoring unknown keys %s in %s", unknown, where)
                else:
                    raise serializers.ValidationError(
                        {key: "Unknown key." for key in unknown},
                        code="unknown_key",
                    )
        return super().to_internal_value(data)


class QuantumLabelsSerializer(StrictFieldsMixin, serializers.Serializer):
    """Serializer for quantum labels."""

    l = serializers.IntegerField(min_value=0)  # noqa: E741
    F_tot = serializers.IntegerField()
    m_Ftot = serializers.IntegerField()
    F = serializers.IntegerField()
    f1 = serializers.IntegerField()
    f2 = serializers.IntegerField()
    nu = serializers.IntegerField(max_value=-1)

    def validate_l(self, value: int) -> int:
        if value not in QuantumLabels.ALLOWED_PARTIAL_WAVES:
            raise serializers.ValidationError("Partial wave must be 0, 2 or 4.", code="partial_wave")
        return value


class BareLevelSerializer(StrictFieldsMixin, serializers.Serializer):
    """Serializer for bare levels."""

    id = serializers.CharField(max_length=64)
    labels = QuantumLabelsSerializer()
    energy_at_zero_mhz = serializers.FloatField(max_value=0.0)
    magnetic_moment_mhz_per_g = serializers.FloatField()

    def to_representation(self, instance: BareLevel):
        return {
            "id": instance.id,
            "labels": QuantumLabelsSerializer(instance.labels).data,
            "energy_at_zero_mhz": instance.energy_at_zero,
            "magnetic_moment_mhz_per_g": instance.magnetic_moment,
        }


class AvoidedCrossingSerializer(StrictFieldsMixin, serializers.Serializer):
    """Serializer for crossing declarations; levels are referenced by id."""

    id = serializers.CharField(max_length=64)
    lower = serializers.CharField(max_length=64)
    upper = serializers.CharField(max_length=64)
    splitting_min_mhz = serializers.FloatField()
    b0_gauss = serializers.FloatField()
    estimate = serializers.BooleanField(required=False, default=False)

    def validate_splitting_min_mhz(self, value: float) -> float:
        if not value > 0.0:
            raise serializers.ValidationError("Splitting must be positive.", code="splitting")
        return value

    def validate(self, attrs):
        if attrs["lower"] == attrs["upper"]:
            raise serializers.ValidationError(
                f"crossing {attrs['id']!r} couples level {attrs['lower']!r} to itself.",
                code="self_crossing",
            )
        return attrs

    def to_representation(self, instance: AvoidedCrossing):
        return {
            "id": instance.id,
            "lower": instance.level_lower.id,
            "upper": instance.level_upper.id,
            "splitting_min_mhz": instance.coupling_omega,
            "b0_gauss": instance.crossing_field_b0,
            "estimate": instance.estimate,
        }


class LevelManifoldSerializer(StrictFieldsMixin, serializers.Serializer):
    """Serializer for a whole manifold document."""

    levels = BareLevelSerializer(many=True)
    crossings = AvoidedCrossingSerializer(many=True)
    lifetime_ms = serializers.FloatField(required=False, allow_null=True, min_value=0.0)
    notes = serializers.CharField(required=False, allow_blank=True)

    def validate_lifetime_ms(self, value):
        if value is not None and value <= 0.0:
            raise serializers.ValidationError("Lifetime must be positive.", code="lifetime")
        return value

    def validate_levels(self, levels):
        seen = set()
        for level in levels:
            if level["id"] in seen:
                raise serializers.ValidationError(f"duplicate level id {level['id']!r}.", code="duplicate")
            seen.add(level["id"])
        return levels

    def validate(self, attrs):
        levels = {data["id"]: self._build_level(data) for data in attrs["levels"]}
        seen_ids = set()
        seen_fields = {}
        for data in attrs["crossings"]:
            crossing_id = data["id"]
            if crossing_id in seen_ids:
                raise serializers.ValidationError(
                    {"crossings": f"duplicate crossing id {crossing_id!r}."}, code="duplicate"
                )
            seen_ids.add(crossing_id)

            for role in ("lower", "upper"):
                if data[role] not in levels:
                    raise serializers.ValidationError(
                        {"crossings": f"crossing {crossing_id!r}: unknown {role} level {data[role]!r}."},
                        code="unknown_level",
                    )
            lower, upper = levels[data["lower"]], levels[data["upper"]]
            b0 = intersection_field(lower, upper)
            if b0 is None:
                raise serializers.ValidationError(
                    {"crossings": f"crossing {crossing_id!r}: levels have equal magnetic moments."},
                    code="parallel",
                )
            if abs(b0 - data["b0_gauss"]) > B0_TOLERANCE_G:
                raise serializers.ValidationError(
                    {
                        "crossings": f"crossing {crossing_id!r}: b0_gauss {data['b0_gauss']} does not match "
                        f"the level intersection at {b0!r} G."
                    },
                    code="b0_mismatch",
                )
            if data["b0_gauss"] in seen_fields:
                raise serializers.ValidationError(
                    {
                        "crossings": f"crossings {seen_fields[data['b0_gauss']]!r} and {crossing_id!r} "
                        "share the same crossing field."
                    },
                    code="b0_collision",
                )
            seen_fields[data["b0_gauss"]] = crossing_id

        attrs["level_objects"] = levels
        return attrs

    def _build_level(self, data) -> BareLevel:
        return BareLevel(
            id=data["id"],
            labels=QuantumLabels(**data["labels"]),
            energy_at_zero=data["energy_at_zero_mhz"],
            magnetic_moment=data["magnetic_moment_mhz_per_g"],
        )

    def create(self, validated_data) -> LevelManifold:
        levels = validated_data["level_objects"]
        crossings = [
            AvoidedCrossing(
                id=data["id"],
                level_lower=levels[data["lower"]],
                level_upper=levels[data["upper"]],
                coupling_omega=data["splitting_min_mhz"],
                crossing_field_b0=data["b0_gauss"],
                estimate=data.get("estimate", False),
            )
            for data in validated_data["crossings"]
        ]
        return LevelManifold(
            levels=tuple(levels.values()),
            crossings=tuple(crossings),
            lifetime_ms=validated_data.get("lifetime_ms"),
            notes=validated_data.get("notes", ""),
        )

    def to_representation(self, instance: LevelManifold):
        document = {
            "levels": [BareLevelSerializer(level).data for level in instance.levels],
            "crossings": [AvoidedCrossingSerializer(crossing).data for crossing in instance.crossings],
        }
        if instance.lifetime_ms is not None:
            document["lifetime_ms"] = instance.lifetime_ms
        if instance.notes:
            document["notes"] = instance.notes
        return document
