"""
Measurement records and fit results for splitting spectroscopy.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from core.exceptions import SpectroscopyError

RANK_DEFICIENT = "rank-deficient"
ONE_SIDED = "one-sided"
NOISE_UPSHIFT_UNRESOLVED = "noise-upshift-unresolved"

SCAN_COLUMNS = ("freq_mhz", "transfer")
RAMSEY_COLUMNS = ("hold_time_ms", "remaining_fraction")
SPLITTING_COLUMNS = ("b_gauss", "splitting_mhz", "uncertainty_mhz")


def _as_vector(values, name: str) -> np.ndarray:
    array = np.asarray(values, dtype=float)
    if array.ndim != 1:
        raise SpectroscopyError(f"{name} must be one-dimensional")
    if not np.all(np.isfinite(array)):
        raise SpectroscopyError(f"{name} contains non-finite values")
    return array


def _check_probabilities(values: np.ndarray, name: str) -> None:
    # integrator round-off can leave values a few ulps outside [0, 1]
    if values.size and (values.min() < -1e-9 or values.max() > 1.0 + 1e-9):
        raise SpectroscopyError(f"{name} must lie in [0, 1]")


@dataclass(frozen=True, eq=False)
class ResonanceScan:
    """Transferred population against rf frequency for one pulse at a fixed field."""

    b_gauss: float
    frequencies_mhz: np.ndarray
    pulse_length_ms: float
    b_rf_g: float
    transfer: np.ndarray

    def __post_init__(self) -> None:
        frequencies = _as_vector(self.frequencies_mhz, "frequencies")
        transfer = _as_vector(self.transfer, "transfer")
        if frequencies.shape != transfer.shape:
            raise SpectroscopyError("frequencies and transfer differ in length")
        if np.any(np.diff(frequencies) <= 0.0):
            raise SpectroscopyError("frequencies must be strictly increasing")
        _check_probabilities(transfer, "transfer")
        if not self.pulse_length_ms > 0.0:
            raise SpectroscopyError(f"pulse length must be positive, got {self.pulse_length_ms}")
        object.__setattr__(self, "frequencies_mhz", frequencies)
        object.__setattr__(self, "transfer", transfer)

    def rows(self) -> list[tuple[float, float]]:
        return list(zip(self.frequencies_mhz.tolist(), self.transfer.tolist()))


@dataclass(frozen=True, eq=False)
class RamseyRecord:
    """Remaining upper-branch fraction against hold time between two pi/2 pulses.

    ``detuning_sign`` is +1 when the rf is above the splitting, so the splitting is
    ``f_rf - detuning_sign * fringe``.
    """

    b_gauss: float
    f_rf_mhz: float
    hold_times_ms: np.ndarray
    remaining_fraction: np.ndarray
    fitted_fringe_frequency_mhz: float | None = None
    fringe_uncertainty_mhz: float = 0.0
    detuning_sign: int = 1

    def __post_init__(self) -> None:
        hold_times = _as_vector(self.hold_times_ms, "hold times")
        remaining = _as_vector(self.remaining_fraction, "remaining fraction")
        if hold_times.shape != remaining.shape:
            raise SpectroscopyError("hold times and remaining fraction differ in length")
        if np.any(hold_times < 0.0):
            raise SpectroscopyError("hold times must be non-negative")
        _check_probabilities(remaining, "remaining fraction")
        if self.fitted_fringe_frequency_mhz is not None and self.fitted_fringe_frequency_mhz < 0.0:
            raise SpectroscopyError("fringe frequency must be non-negative")
        if self.detuning_sign not in (1, -1):
            raise SpectroscopyError(f"detuning sign must be +1 or -1, got {self.detuning_sign}")
        object.__setattr__(self, "hold_times_ms", hold_times)
        object.__setattr__(self, "remaining_fraction", remaining)

    def splitting(self) -> float:
        """Return the splitting (MHz) implied by the fitted fringe."""
        if self.fitted_fringe_frequency_mhz is None:
            raise SpectroscopyError(f"record at {self.b_gauss} G has no fitted fringe frequency")
        return self.f_rf_mhz - self.detuning_sign * self.fitted_fringe_frequency_mhz

    def rows(self) -> list[tuple[float, float]]:
        return list(zip(self.hold_times_ms.tolist(), self.remaining_fraction.tolist()))


@dataclass(frozen=True)
class NoiseModel:
    """Field spread seen by the cloud.

    A gradient across the cloud gives a uniform offset over ``gradient * diameter``;
    shot-to-shot fluctuations add a Gaussian offset of ``fluctuation_sigma_g``.
    ``distribution="gaussian"`` replaces the uniform part by a Gaussian of equal
    variance.
    """

    gradient_g_per_mm: float = 0.0
    cloud_diameter_mm: float = 0.0
    fluctuation_sigma_g: float = 0.0
    distribution: str = "uniform"

    DISTRIBUTIONS = ("uniform", "gaussian")

    def __post_init__(self) -> None:
        for name in ("gradient_g_per_mm", "cloud_diameter_mm", "fluctuation_sigma_g"):
            value = getattr(self, name)
            if not (value >= 0.0 and math.isfinite(value)):
                raise SpectroscopyError(f"{name} must be non-negative, got {value}")
        if self.distribution not in self.DISTRIBUTIONS:
            raise SpectroscopyError(f"unknown noise distribution {self.distribution!r}")

    @classmethod
    def quiet(cls) -> "NoiseModel":
        return cls()

    @property
    def spread_g(self) -> float:
        """Full field spread across the cloud."""
        return self.gradient_g_per_mm * self.cloud_diameter_mm

    @property
    def is_quiet(self) -> bool:
        return self.spread_g == 0.0 and self.fluctuation_sigma_g == 0.0


@dataclass(frozen=True, eq=False)
class FrequencyEstimate:
    """A fitted frequency in MHz with its 1 sigma uncertainty."""

    value: float
    uncertainty: float
    method: str = "parabola"
    details: dict = field(default_factory=dict)


@dataclass(frozen=True, eq=False)
class FitResult:
    """Parameters of the hyperbola sqrt(delta_min**2 + k**2 (B - B0)**2)."""

    delta_min: float
    b0: float
    k: float
    uncertainties: dict
    residual_norm: float
    covariance: np.ndarray
    n_points: int
    flags: tuple[str, ...] = ()
    upshift: float = 0.0
    model: str = "hyperbola"

    def __post_init__(self) -> None:
        if not self.delta_min > 0.0:
            raise SpectroscopyError(f"minimum splitting must be positive, got {self.delta_min}")
        if any(value < 0.0 for value in self.uncertainties.values()):
            raise SpectroscopyError("uncertainties must be non-negative")

    @property
    def params(self) -> tuple[float, float, float]:
        return self.delta_min, self.b0, self.k

    def hyperbola(self, b_gauss):
        """Evaluate the ideal hyperbola; accepts arrays."""
        return hyperbola(b_gauss, self.delta_min, self.b0, self.k)


def hyperbola(b_gauss, delta_min: float, b0: float, k: float):
    """Return sqrt(delta_min**2 + k**2 (B - B0)**2); accepts arrays."""
    return np.hypot(delta_min, k * (np.asarray(b_gauss, dtype=float) - b0))
