"""
Serializers for noise settings and spectroscopy reports.
"""

import math

from manifold.serializers import StrictFieldsMixin
from rest_framework import serializers
from spectroscopy.records import FitResult, FrequencyEstimate, NoiseModel


def _finite_or_none(value: float):
    return float(value) if math.isfinite(value) else None


class NoiseModelSerializer(StrictFieldsMixin, serializers.Serializer):
    """Serializer for the field-noise model."""

    gradient_g_per_mm = serializers.FloatField(min_value=0.0, default=0.0)
    cloud_diameter_mm = serializers.FloatField(min_value=0.0, default=0.0)
    fluctuation_sigma_g = serializers.FloatField(min_value=0.0, default=0.0)
    distribution = serializers.ChoiceField(choices=NoiseModel.DISTRIBUTIONS, default="uniform")

    def create(self, validated_data) -> NoiseModel:
        return NoiseModel(**validated_data)

    def to_representation(self, instance: NoiseModel):
        return {
            "gradient_g_per_mm": instance.gradient_g_per_mm,
            "cloud_diameter_mm": instance.cloud_diameter_mm,
            "fluctuation_sigma_g": instance.fluctuation_sigma_g,
            "distribution": instance.distribution,
        }


class FrequencyEstimateSerializer(serializers.Serializer):
    """Report of a peak or fringe frequency."""

    def to_representation(self, instance: FrequencyEstimate):
        return {
            "value_mhz": instance.value,
            "uncertainty_mhz": _finite_or_none(instance.uncertainty),
            "method": instance.method,
            "details": {
                key: _finite_or_none(value) if isinstance(value, float) else value
                for key, value in instance.details.items()
            },
        }


class FitResultSerializer(serializers.Serializer):
    """Report of a hyperbola fit. Infinite uncertainties are written as null."""

    def to_representation(self, instance: FitResult):
        return {
            "model": instance.model,
            "parameters": {
                "delta_min_mhz": instance.delta_min,
                "b0_gauss": instance.b0,
                "k_mhz_per_g": instance.k,
            },
            "uncertainties": {key: _finite_or_none(value) for key, value in instance.uncertainties.items()},
            "upshift_mhz": instance.upshift,
            "residual_norm": instance.residual_norm,
            "n_points": instance.n_points,
            "flags": list(instance.flags),
            "covariance": [[_finite_or_none(value) for value in row] for row in instance.covariance.tolist()],
        }
