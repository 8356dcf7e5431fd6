"""
Two-level quantum state in the bare basis (|b1>, |b2>) of a crossing.
"""

from dataclasses import dataclass

import numpy as np
from core.exceptions import DynamicsError
from crossing.frame import CrossingFrame, mixing_components

UPPER = "upper"
LOWER = "lower"
BRANCHES = (UPPER, LOWER)


@dataclass(frozen=True, eq=False)
class QuantumState:
    """Complex amplitudes at a point in time together with the accumulated norm drift."""

    amplitudes: np.ndarray
    time_us: float = 0.0
    norm_drift: float = 0.0

    def __post_init__(self) -> None:
        amplitudes = np.asarray(self.amplitudes, dtype=complex)
        if amplitudes.shape != (2,):
            raise DynamicsError(f"state needs two amplitudes, got shape {amplitudes.shape}")
        object.__setattr__(self, "amplitudes", amplitudes)

    @classmethod
    def bare(cls, index: int, time_us: float = 0.0) -> "QuantumState":
        """Return the bare state |b1> (index 0) or |b2> (index 1)."""
        amplitudes = np.zeros(2, dtype=complex)
        amplitudes[index] = 1.0
        return cls(amplitudes, time_us)

    @classmethod
    def dressed(cls, frame: CrossingFrame, b_gauss: float, branch: str, time_us: float = 0.0) -> "QuantumState":
        """Return the upper or lower static dressed state at a field."""
        cos_t, sin_t = (float(value) for value in mixing_components(frame.detuning(b_gauss), frame.omega))
        if branch == UPPER:
            return cls(np.array([cos_t, sin_t]), time_us)
        if branch == LOWER:
            return cls(np.array([-sin_t, cos_t]), time_us)
        raise DynamicsError(f"unknown dressed branch {branch!r}")

    @property
    def populations(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    @property
    def norm(self) -> float:
        return float(np.sum(self.populations))

    def branch_populations(self, frame: CrossingFrame, b_gauss: float) -> tuple[float, float]:
        """Return (upper, lower) dressed populations at a field."""
        upper, lower = dressed_populations(frame, np.array([b_gauss]), self.amplitudes[np.newaxis, :])
        return float(upper[0]), float(lower[0])

    def branch_population(self, frame: CrossingFrame, b_gauss: float, branch: str) -> float:
        upper, lower = self.branch_populations(frame, b_gauss)
        return upper if branch == UPPER else lower


def other_branch(branch: str) -> str:
    if branch not in BRANCHES:
        raise DynamicsError(f"unknown dressed branch {branch!r}")
    return LOWER if branch == UPPER else UPPER


def dressed_populations(frame: CrossingFrame, fields: np.ndarray, amplitudes: np.ndarray):
    """Project rows of bare amplitudes on the static dressed states at matching fields."""
    cos_t, sin_t = mixing_components(frame.detuning(np.asarray(fields, dtype=float)), frame.omega)
    upper = cos_t * amplitudes[:, 0] + sin_t * amplitudes[:, 1]
    lower = -sin_t * amplitudes[:, 0] + cos_t * amplitudes[:, 1]
    return np.abs(upper) ** 2, np.abs(lower) ** 2
