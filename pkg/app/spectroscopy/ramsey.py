"""
Ramsey interferometry: two pi/2 pulses around a free hold.

The fringe frequency of the remaining upper-branch fraction is the detuning of
the rf from the splitting, so the splitting follows without relying on the
resonance lineshape.
"""

import logging
import math
from dataclasses import replace

import numpy as np
from core.conf import transport_settings
from core.exceptions import DegenerateDataError, FitError, PreconditionError, SpectroscopyError, UndersampledError
from crossing.frame import CrossingFrame
from dynamics.integrator import su2_propagator
from manifold.units import TWO_PI, ms_to_us
from scipy.optimize import least_squares
from scipy.signal import lombscargle
from spectroscopy.noise import sample_offsets
from spectroscopy.records import FrequencyEstimate, NoiseModel, RamseyRecord

logger = logging.getLogger(__name__)

DAMPED_COSINE = "damped-cosine"
RAMSEY_NOISE_SAMPLES = 4_000
MIN_RECORD_POINTS = 8
MIN_PERIODS = 2.0
_CHUNK = 2_048


def _remaining_fraction(splittings, couplings, f_rf, pulse_us, holds_us) -> np.ndarray:
    """Return the mean upper-branch population over the given splittings, one value per hold."""
    detunings = splittings - f_rf
    pulse = su2_propagator(0.5 * couplings, 0.0, 0.5 * detunings, pulse_us)
    after_first = pulse[:, :, 0]
    phase = np.exp(-1j * math.pi * detunings[:, None] * holds_us[None, :])
    upper = pulse[:, 0, 0, None] * after_first[:, 0, None] * phase
    upper += pulse[:, 0, 1, None] * after_first[:, 1, None] * phase.conj()
    return np.sum(np.abs(upper) ** 2, axis=0)


def simulate_ramsey(
    frame: CrossingFrame,
    b_gauss: float,
    f_rf: float,
    omega_r: float,
    hold_times_ms,
    noise: NoiseModel | None = None,
    seed: int | None = None,
    *,
    n_samples: int | None = None,
    fit: bool = True,
) -> RamseyRecord:
    """Return the remaining upper-branch fraction after pi/2 - hold - pi/2.

    ``omega_r`` is the resonant Rabi frequency in rad/us, so each pulse lasts
    pi / (2 omega_r) us. Pulses and holds are exact in the frame rotating at
    ``f_rf``. A noise model averages over quasi-static field offsets drawn once
    per call and shared by every hold time. With ``fit`` the record carries its
    fitted fringe frequency.
    """
    if not omega_r > 0.0:
        raise SpectroscopyError(f"Rabi frequency must be positive, got {omega_r}")
    hold_times = np.asarray(hold_times_ms, dtype=float)
    holds_us = ms_to_us(hold_times)
    pulse_us = math.pi / (2.0 * omega_r)
    nominal = frame.splitting(b_gauss)
    coupling = omega_r / TWO_PI

    if noise is None or noise.is_quiet:
        offsets = np.zeros(1)
    else:
        offsets = sample_offsets(noise, n_samples or RAMSEY_NOISE_SAMPLES, np.random.default_rng(seed))

    total = np.zeros(hold_times.shape)
    for start in range(0, offsets.size, _CHUNK):
        splittings = np.atleast_1d(frame.splitting(b_gauss + offsets[start : start + _CHUNK]))
        # the transition moment scales as 1 / splitting
        couplings = coupling * nominal / splittings
        total += _remaining_fraction(splittings, couplings, f_rf, pulse_us, holds_us)
    remaining = np.clip(total / offsets.size, 0.0, 1.0)

    record = RamseyRecord(
        b_gauss=b_gauss,
        f_rf_mhz=f_rf,
        hold_times_ms=hold_times,
        remaining_fraction=remaining,
        detuning_sign=1 if f_rf >= nominal else -1,
    )
    logger.info(
        "Ramsey record at %.6g G, rf %.6f MHz, %d holds, %d noise samples",
        b_gauss,
        f_rf,
        hold_times.size,
        offsets.size,
    )
    if fit:
        estimate = fringe_frequency(record)
        record = replace(
            record,
            fitted_fringe_frequency_mhz=estimate.value,
            fringe_uncertainty_mhz=estimate.uncertainty,
        )
    return record


def damped_cosine(t, amplitude, frequency, phase, decay_rate, offset):
    """Return amplitude cos(2 pi f t + phase) exp(-decay_rate t) + offset."""
    return amplitude * np.cos(TWO_PI * frequency * t + phase) * np.exp(-decay_rate * t) + offset


def _initial_frequency(t: np.ndarray, y: np.ndarray) -> tuple[float, float, float]:
    """Return (Lomb-Scargle peak, record span, largest spacing); times in ms, frequencies in kHz."""
    span = float(t.max() - t.min())
    spacings = np.diff(np.sort(t))
    if span <= 0.0 or not np.all(spacings > 0.0):
        raise UndersampledError("hold times must be distinct and span a positive interval")
    nyquist = 0.5 / float(np.median(spacings))
    count = int(min(max(20.0 * span * nyquist, 200), 20_000))
    grid = np.linspace(0.5 / span, nyquist, count)
    power = lombscargle(t, y - y.mean(), TWO_PI * grid)
    return float(grid[int(np.argmax(power))]), span, float(spacings.max())


def fringe_frequency(record: RamseyRecord) -> FrequencyEstimate:
    """Fit A cos(2 pi f t + phi) exp(-t / tau) + C and return |f| in MHz.

    Needs at least two periods in the record and a sampling interval below half
    a period.
    """
    t = record.hold_times_ms
    y = record.remaining_fraction
    if t.size < MIN_RECORD_POINTS:
        raise PreconditionError(f"fringe fit needs at least {MIN_RECORD_POINTS} hold times, got {t.size}")
    if np.ptp(y) <= 1e-9:
        raise DegenerateDataError(f"record at {record.b_gauss} G shows no fringes")

    frequency0, span, largest_gap = _initial_frequency(t, y)
    if frequency0 * span < MIN_PERIODS:
        raise UndersampledError(
            f"record spans {frequency0 * span:.2f} periods of the {frequency0:.4g} kHz fringe, need {MIN_PERIODS:g}"
        )
    if 2.0 * frequency0 * largest_gap >= 1.0:
        raise UndersampledError(f"sampling every {largest_gap:.4g} ms is below Nyquist for {frequency0:.4g} kHz")

    design = np.column_stack([np.ones_like(t), np.cos(TWO_PI * frequency0 * t), np.sin(TWO_PI * frequency0 * t)])
    (offset0, a, b), *_ = np.linalg.lstsq(design, y, rcond=None)
    x0 = np.array([max(math.hypot(a, b), 1e-6), frequency0, math.atan2(-b, a), 0.1 / span, offset0])
    logger.debug("Fringe fit initial guess %s", x0)

    def residuals(x):
        return damped_cosine(t, *x) - y

    result = least_squares(
        residuals,
        x0,
        bounds=([0.0, 0.0, -np.inf, 0.0, -np.inf], np.inf),
        x_scale="jac",
        xtol=transport_settings.FIT_XTOL,
        max_nfev=transport_settings.FIT_MAX_ITERATIONS,
    )
    if not result.success:
        raise FitError(f"fringe fit did not converge: {result.message}")

    amplitude, frequency, phase, decay_rate, offset = result.x
    dof = max(t.size - x0.size, 1)
    covariance = np.linalg.pinv(result.jac.T @ result.jac) * (2.0 * result.cost / dof)
    uncertainty_khz = math.sqrt(max(covariance[1, 1], 0.0))
    logger.info("Fringe at %.6g kHz +- %.2g kHz", frequency, uncertainty_khz)
    return FrequencyEstimate(
        value=float(frequency) / 1000.0,
        uncertainty=uncertainty_khz / 1000.0,
        method=DAMPED_COSINE,
        details={
            "amplitude": float(amplitude),
            "phase_rad": float(phase),
            "decay_time_ms": math.inf if decay_rate <= 0.0 else float(1.0 / decay_rate),
            "offset": float(offset),
        },
    )
