"""
Serializers for plan documents.
"""

from core.exceptions import PlanningError
from dynamics.atac import ABOVE, BELOW
from dynamics.state import BRANCHES
from manifold.serializers import StrictFieldsMixin
from planner.plan import ACTION_KINDS, CrossingAction, TransportPlan, build_schedule
from planner.policy import ROUTINGS, TransportPolicy
from rest_framework import serializers


class TransportPolicySerializer(StrictFieldsMixin, serializers.Serializer):
    """Serializer for planner policies; omitted fields keep their defaults."""

    jump_threshold_mhz = serializers.FloatField(required=False)
    b_rf_g = serializers.FloatField(required=False)
    atac_ramp_g_per_ms = serializers.FloatField(required=False)
    travel_ramp_g_per_ms = serializers.FloatField(required=False)
    jump_ramp_g_per_ms = serializers.FloatField(required=False)
    turn_ramp_g_per_ms = serializers.FloatField(required=False)
    blue_detuning_fraction = serializers.FloatField(required=False)
    min_blue_detuning_mhz = serializers.FloatField(required=False)
    window_margin_g = serializers.FloatField(required=False)
    jump_window_omegas = serializers.FloatField(required=False)
    rise_time_us = serializers.FloatField(required=False, allow_null=True)
    detour_clearance_g = serializers.FloatField(required=False)
    success_floor = serializers.FloatField(required=False)
    routing = serializers.ChoiceField(choices=ROUTINGS, required=False)
    adiabatic_turns = serializers.ListField(child=serializers.CharField(max_length=64), required=False)
    final_field_g = serializers.FloatField(required=False, allow_null=True)
    lifetime_ms = serializers.FloatField(required=False, allow_null=True)

    def validate(self, attrs):
        try:
            attrs["policy"] = TransportPolicy(**attrs)
        except PlanningError as exc:
            raise serializers.ValidationError(exc.message, code="policy")
        return attrs

    def create(self, validated_data) -> TransportPolicy:
        return validated_data["policy"]

    def to_representation(self, instance: TransportPolicy):
        return instance.to_dict()


class CrossingActionSerializer(StrictFieldsMixin, serializers.Serializer):
    """Serializer for one planned action."""

    crossing_id = serializers.CharField(max_length=64)
    kind = serializers.ChoiceField(choices=ACTION_KINDS)
    from_level = serializers.CharField(max_length=64)
    to_level = serializers.CharField(max_length=64)
    b_from = serializers.FloatField()
    b_to = serializers.FloatField()
    b_x = serializers.FloatField()
    ramp_speed_g_per_ms = serializers.FloatField()
    predicted_success = serializers.FloatField(min_value=0.0, max_value=1.0)
    b_rf_g = serializers.FloatField(min_value=0.0, default=0.0)
    f_rf_mhz = serializers.FloatField(allow_null=True, default=None)
    approach = serializers.ChoiceField(choices=(ABOVE, BELOW), default=ABOVE)
    start_branch = serializers.ChoiceField(choices=BRANCHES, default="upper")
    detoured = serializers.BooleanField(default=False)
    switch_off_us = serializers.FloatField(min_value=0.0, default=0.0)

    def validate_ramp_speed_g_per_ms(self, value: float) -> float:
        if not value > 0.0:
            raise serializers.ValidationError("Ramp speed must be positive.", code="ramp_speed")
        return value

    def validate(self, attrs):
        if attrs["b_from"] == attrs["b_to"]:
            raise serializers.ValidationError("Action window is empty.", code="window")
        if attrs["kind"] == "atac" and not (attrs.get("f_rf_mhz") or 0.0) > 0.0:
            raise serializers.ValidationError("ATAC needs a positive rf frequency.", code="rf")
        return attrs

    def create(self, validated_data) -> CrossingAction:
        return CrossingAction(**validated_data)

    def to_representation(self, instance: CrossingAction):
        return {name: getattr(instance, name) for name in self.fields}


class TransportPlanSerializer(StrictFieldsMixin, serializers.Serializer):
    """Serializer for plan documents.

    The schedule is not stored: it follows from the actions, the start field and
    the policy's travel settings.
    """

    start_level = serializers.CharField(max_length=64)
    goal_level = serializers.CharField(max_length=64)
    route = serializers.ListField(child=serializers.CharField(max_length=64))
    b_start_g = serializers.FloatField(allow_null=True, default=None)
    lifetime_ms = serializers.FloatField(allow_null=True, default=None)
    policy = TransportPolicySerializer()
    actions = CrossingActionSerializer(many=True)
    total_duration_ms = serializers.FloatField(read_only=True)
    survival = serializers.FloatField(read_only=True)
    breakdown = serializers.ListField(read_only=True)

    def validate_lifetime_ms(self, value):
        if value is not None and value <= 0.0:
            raise serializers.ValidationError("Lifetime must be positive.", code="lifetime")
        return value

    def validate(self, attrs):
        route = [action["crossing_id"] for action in attrs["actions"]]
        if route != attrs["route"]:
            raise serializers.ValidationError({"route": "Route does not match the actions."}, code="route")
        return attrs

    def create(self, validated_data) -> TransportPlan:
        policy = validated_data["policy"]["policy"]
        actions = [CrossingAction(**data) for data in validated_data["actions"]]
        b_start = validated_data["b_start_g"]
        return TransportPlan(
            start_level=validated_data["start_level"],
            goal_level=validated_data["goal_level"],
            route=tuple(validated_data["route"]),
            actions=tuple(actions),
            schedule=build_schedule(actions, policy, b_start),
            policy=policy,
            b_start=b_start,
            lifetime_ms=validated_data["lifetime_ms"],
        )

    def to_representation(self, instance: TransportPlan):
        return {
            "start_level": instance.start_level,
            "goal_level": instance.goal_level,
            "route": list(instance.route),
            "b_start_g": instance.b_start,
            "lifetime_ms": instance.lifetime_ms,
            "policy": TransportPolicySerializer(instance.policy).data,
            "actions": [CrossingActionSerializer(action).data for action in instance.actions],
            "total_duration_ms": instance.total_duration_ms,
            "survival": instance.survival,
            "breakdown": instance.breakdown,
        }


class ActionOutcomeSerializer(serializers.Serializer):
    """Report row comparing simulated and predicted success."""

    def to_representation(self, instance):
        return {
            "crossing_id": instance.crossing_id,
            "kind": instance.kind,
            "predicted": instance.predicted,
            "simulated": instance.simulated,
            "deviation": instance.deviation,
            "flagged": instance.flagged,
        }
