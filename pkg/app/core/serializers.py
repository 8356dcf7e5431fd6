"""
Serializers for run configurations and the run registry.
"""

from core.models import RunRecord
from dynamics.atac import ABOVE, BELOW
from dynamics.integrator import FRAME_MODES, MAX_TOLERANCE, MIN_TOLERANCE
from manifold.serializers import StrictFieldsMixin
from planner.policy import ROUTINGS
from planner.serializers import TransportPolicySerializer
from rest_framework import serializers
from spectroscopy.noise import AVERAGING_METHODS, QUADRATURE
from spectroscopy.resonance import PARABOLA, PEAK_METHODS
from spectroscopy.serializers import NoiseModelSerializer

DEFAULT_MANIFOLD = "fig1_path.cfg"

CROSSING_COMMANDS = {"simulate", "lz-fit", "scan", "ramsey"}


def _optional_float(**kwargs):
    return serializers.FloatField(required=False, allow_null=True, default=None, **kwargs)


class RunConfigSerializer(StrictFieldsMixin, serializers.Serializer):
    """Validated inputs of one run. Options a command does not use keep their defaults."""

    command = serializers.ChoiceField(choices=RunRecord.Command.choices)
    manifold = serializers.CharField(default=DEFAULT_MANIFOLD)
    lax = serializers.BooleanField(default=False)
    crossing = serializers.CharField(default="", allow_blank=True)
    seed = serializers.IntegerField(min_value=0, default=0)
    output_dir = serializers.CharField(default="", allow_blank=True)
    tolerance = _optional_float(min_value=MIN_TOLERANCE, max_value=MAX_TOLERANCE)
    frame = serializers.ChoiceField(choices=FRAME_MODES, allow_null=True, default=None)

    # simulate, lz-fit
    from_level = serializers.CharField(default="", allow_blank=True)
    brf = _optional_float(min_value=0.0)
    freq = _optional_float(min_value=0.0)
    ramp = _optional_float(min_value=0.0)
    margin = _optional_float(min_value=0.0)
    approach = serializers.ChoiceField(choices=(ABOVE, BELOW), default=ABOVE)
    rise_time_us = _optional_float(min_value=0.0)
    round_trip = serializers.BooleanField(default=False)
    brf_max = _optional_float(min_value=0.0)
    points = serializers.IntegerField(min_value=2, allow_null=True, default=None)

    # scan, ramsey, fit-hyperbola
    b_gauss = _optional_float()
    at_b0 = serializers.BooleanField(default=False)
    pulse_ms = _optional_float(min_value=0.0)
    span_mhz = serializers.FloatField(min_value=0.0, default=0.01)
    peak_method = serializers.ChoiceField(choices=PEAK_METHODS, default=PARABOLA)
    detuning_khz = serializers.FloatField(default=10.0)
    rabi_khz = serializers.FloatField(min_value=0.0, default=50.0)
    hold_max_ms = _optional_float(min_value=0.0)
    noise = NoiseModelSerializer(required=False)
    samples = serializers.IntegerField(min_value=1, allow_null=True, default=None)
    points_file = serializers.CharField(default="", allow_blank=True)
    b_values = serializers.ListField(child=serializers.FloatField(), default=list)
    averaging = serializers.ChoiceField(choices=AVERAGING_METHODS, default=QUADRATURE)

    # plan, simulate-plan
    to_level = serializers.CharField(default="", allow_blank=True)
    policy = serializers.DictField(default=dict)
    routing = serializers.ChoiceField(choices=ROUTINGS, allow_null=True, default=None)
    adiabatic_turns = serializers.ListField(child=serializers.CharField(), default=list)
    b_start = _optional_float()
    detour = serializers.BooleanField(default=True)
    plan_file = serializers.CharField(default="", allow_blank=True)
    workers = serializers.IntegerField(min_value=1, default=1)

    def validate_policy(self, value: dict) -> dict:
        serializer = TransportPolicySerializer(data=value)
        if not serializer.is_valid():
            raise serializers.ValidationError(serializer.errors)
        return value

    def validate_detuning_khz(self, value: float) -> float:
        if value == 0.0:
            raise serializers.ValidationError("Ramsey detuning must be non-zero.")
        return value

    def validate(self, attrs: dict) -> dict:
        command = attrs["command"]
        for name in ("freq", "ramp", "margin", "rise_time_us", "brf_max", "pulse_ms", "hold_max_ms"):
            if attrs[name] == 0.0:
                raise serializers.ValidationError({name: "Must be positive."})
        if command in CROSSING_COMMANDS and not attrs["crossing"]:
            raise serializers.ValidationError({"crossing": f"Required by {command}."})
        if command == "fit-hyperbola" and not (attrs["crossing"] or attrs["points_file"]):
            raise serializers.ValidationError({"crossing": "Give a crossing to simulate or a points file."})
        if command == "plan" or (command == "simulate-plan" and not attrs["plan_file"]):
            missing = [name for name in ("from_level", "to_level") if not attrs[name]]
            if missing:
                raise serializers.ValidationError({name: f"Required by {command}." for name in missing})
        if attrs["at_b0"] and attrs["b_gauss"] is not None:
            raise serializers.ValidationError({"at_b0": "Give either a field or --at-b0."})
        attrs.setdefault("noise", NoiseModelSerializer(data={}).run_validation({}))
        return attrs


class RunRecordSerializer(serializers.ModelSerializer):
    """Serializer for recorded runs."""

    class Meta:
        model = RunRecord
        fields = [
            "id",
            "command",
            "status",
            "config_hash",
            "seed",
            "config",
            "output_dir",
            "summary",
            "error",
            "wall_time_s",
            "created_at",
        ]
        read_only_fields = fields
