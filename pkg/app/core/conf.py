"""
Project settings access.

Values come from ``settings.RF_TRANSPORT`` with the defaults below, e.g.::

    from core.conf import transport_settings
    transport_settings.DEFAULT_TOLERANCE
"""

from pathlib import Path

from django.conf import settings
from rest_framework.settings import APISettings

DEFAULTS = {
    "OUTPUT_DIR": Path("runs"),
    "DEFAULT_TOLERANCE": 1e-8,
    "RF_DRIVE_SCALE": 2.0,
    "DEFAULT_FRAME": "lab",
    "TRACE_SAMPLE_INTERVAL_US": 0.0,
    "MAX_STEPS": 5_000_000,
    "CSV_SIGNIFICANT_DIGITS": 12,
    "MONTE_CARLO_SAMPLES": 20_000,
    "QUADRATURE_NODES": 48,
    "FIT_MAX_ITERATIONS": 200,
    "FIT_XTOL": 1e-10,
    "PLANNER_POLICY": {},
}


class TransportSettings(APISettings):
    """APISettings bound to ``RF_TRANSPORT`` instead of ``REST_FRAMEWORK``."""

    @property
    def user_settings(self):
        if not hasattr(self, "_user_settings"):
            self._user_settings = getattr(settings, "RF_TRANSPORT", {})
        return self._user_settings


transport_settings = TransportSettings(None, DEFAULTS)


def reload_transport_settings(*args, **kwargs) -> None:
    """Drop cached values when tests override ``RF_TRANSPORT``."""
    if kwargs.get("setting") == "RF_TRANSPORT":
        transport_settings.reload()
