"""
Planner defaults.
"""

import math
from dataclasses import asdict, dataclass, field, fields

from core.conf import transport_settings
from core.exceptions import PlanningError

BFS = "bfs"
SURVIVAL = "survival"
ROUTINGS = (BFS, SURVIVAL)


@dataclass(frozen=True)
class TransportPolicy:
    """How the planner picks and lays out actions.

    Travel legs between action windows use ``travel_ramp_g_per_ms`` without rf.
    A crossing no wider than ``jump_threshold_mhz`` is jumped over a window of
    ``jump_window_omegas`` couplings on each side; crossings listed in
    ``adiabatic_turns`` are followed adiabatically at ``turn_ramp_g_per_ms`` over
    ``window_margin_g`` on each side of B0.
    """

    jump_threshold_mhz: float = 0.2
    b_rf_g: float = 0.05
    atac_ramp_g_per_ms: float = 1.0
    travel_ramp_g_per_ms: float = 13.0
    jump_ramp_g_per_ms: float = 100.0
    turn_ramp_g_per_ms: float = 1.3
    blue_detuning_fraction: float = 0.02
    min_blue_detuning_mhz: float = 0.0
    window_margin_g: float = 1.0
    jump_window_omegas: float = 20.0
    rise_time_us: float | None = 10.0
    detour_clearance_g: float = 2.0
    success_floor: float = 0.9
    routing: str = BFS
    adiabatic_turns: frozenset = field(default_factory=frozenset)
    final_field_g: float | None = 0.0
    lifetime_ms: float | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "adiabatic_turns", frozenset(self.adiabatic_turns))
        for name in (
            "b_rf_g",
            "jump_threshold_mhz",
            "blue_detuning_fraction",
            "min_blue_detuning_mhz",
            "detour_clearance_g",
        ):
            if not getattr(self, name) >= 0.0:
                raise PlanningError(f"{name} must be non-negative, got {getattr(self, name)}")
        for name in (
            "atac_ramp_g_per_ms",
            "travel_ramp_g_per_ms",
            "jump_ramp_g_per_ms",
            "turn_ramp_g_per_ms",
            "window_margin_g",
            "jump_window_omegas",
        ):
            value = getattr(self, name)
            if not (value > 0.0 and math.isfinite(value)):
                raise PlanningError(f"{name} must be positive, got {value}")
        if self.rise_time_us is not None and not self.rise_time_us > 0.0:
            raise PlanningError(f"rise_time_us must be positive, got {self.rise_time_us}")
        if not 0.0 <= self.success_floor <= 1.0:
            raise PlanningError(f"success_floor must lie in [0, 1], got {self.success_floor}")
        if self.routing not in ROUTINGS:
            raise PlanningError(f"unknown routing {self.routing!r}")
        if self.lifetime_ms is not None and not self.lifetime_ms > 0.0:
            raise PlanningError(f"lifetime_ms must be positive, got {self.lifetime_ms}")

    @classmethod
    def from_settings(cls, **overrides) -> "TransportPolicy":
        """Build the policy from ``RF_TRANSPORT["PLANNER_POLICY"]`` plus explicit overrides."""
        values = {**transport_settings.PLANNER_POLICY, **overrides}
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(values) - known)
        if unknown:
            raise PlanningError(f"unknown policy keys {unknown}")
        return cls(**values)

    def blue_detuned_frequency(self, omega_mhz: float) -> float:
        """Return the default ATAC rf frequency for a crossing of minimal splitting ``omega_mhz``."""
        return max(omega_mhz * (1.0 + self.blue_detuning_fraction), omega_mhz + self.min_blue_detuning_mhz)

    def to_dict(self) -> dict:
        values = asdict(self)
        values["adiabatic_turns"] = sorted(self.adiabatic_turns)
        return values
