"""
Resonant-transfer spectroscopy: single rf pulses scanned in frequency.
"""

import logging
import math

import numpy as np
from core.conf import transport_settings
from core.exceptions import FitError, PreconditionError, SpectroscopyError
from crossing.frame import CrossingFrame
from dynamics.integrator import rwa_coupling, rwa_field_vector, su2_propagator
from manifold.units import ms_to_us
from scipy.optimize import least_squares
from spectroscopy.noise import quadrature_rule
from spectroscopy.records import FrequencyEstimate, NoiseModel, ResonanceScan

logger = logging.getLogger(__name__)

PARABOLA = "parabola"
LINESHAPE = "lineshape"
PEAK_METHODS = (PARABOLA, LINESHAPE)
MIN_SCAN_POINTS = 5


def _pulse_transfer(frame: CrossingFrame, fields, b_rf: float, frequencies, duration_us: float) -> np.ndarray:
    hx, hy, hz = rwa_field_vector(frame, fields, b_rf, frequencies)
    propagator = su2_propagator(hx, hy, hz, duration_us)
    return np.abs(propagator[..., 1, 0]) ** 2


def simulate_resonance_scan(
    frame: CrossingFrame,
    b_gauss: float,
    pulse_length_ms: float,
    b_rf: float,
    freq_grid,
    *,
    noise: NoiseModel | None = None,
) -> ResonanceScan:
    """Return the population moved to the lower branch by a rectangular pulse at each frequency.

    The pulse is exact in the rotating frame, so every grid point costs one SU(2)
    exponential. With a noise model the transfer is averaged over the field spread.
    """
    frequencies = np.asarray(freq_grid, dtype=float)
    splitting = frame.splitting(b_gauss)
    if frequencies.size < 2 or not frequencies.min() < splitting < frequencies.max():
        raise SpectroscopyError(
            f"frequency grid does not bracket the {splitting:.6f} MHz splitting at {b_gauss} G"
        )
    if not pulse_length_ms > 0.0:
        raise SpectroscopyError(f"pulse length must be positive, got {pulse_length_ms}")
    duration_us = ms_to_us(pulse_length_ms)

    if noise is None or noise.is_quiet:
        transfer = _pulse_transfer(frame, b_gauss, b_rf, frequencies, duration_us)
    else:
        offsets, weights = quadrature_rule(noise)
        fields = b_gauss + offsets[:, None]
        transfer = weights @ _pulse_transfer(frame, fields, b_rf, frequencies[None, :], duration_us)

    logger.info(
        "Scanned %d frequencies at %.6g G with a %.4g ms pulse of %.4g G",
        frequencies.size,
        b_gauss,
        pulse_length_ms,
        b_rf,
    )
    return ResonanceScan(
        b_gauss=b_gauss,
        frequencies_mhz=frequencies,
        pulse_length_ms=pulse_length_ms,
        b_rf_g=b_rf,
        transfer=np.clip(transfer, 0.0, 1.0),
    )


def rabi_lineshape(frequencies, center: float, coupling: float, amplitude: float, duration_us: float):
    """Return amplitude * w**2 / W**2 * sin**2(pi W t) with W = sqrt(w**2 + (f - center)**2)."""
    detuning = np.asarray(frequencies, dtype=float) - center
    generalized = np.hypot(coupling, detuning)
    ratio = np.divide(coupling**2, generalized**2, out=np.zeros_like(generalized), where=generalized > 0.0)
    return amplitude * ratio * np.sin(math.pi * generalized * duration_us) ** 2


def _locate_maximum(scan: ResonanceScan) -> int:
    transfer = scan.transfer
    if transfer.size < MIN_SCAN_POINTS:
        raise PreconditionError(f"peak search needs at least {MIN_SCAN_POINTS} points, got {transfer.size}")
    if np.ptp(transfer) <= 1e-12:
        raise SpectroscopyError("scan is flat")
    index = int(np.argmax(transfer))
    if index in (0, transfer.size - 1):
        raise SpectroscopyError(f"maximum at grid edge ({scan.frequencies_mhz[index]:.6f} MHz)")
    return index


def _parabola_peak(scan: ResonanceScan, index: int) -> FrequencyEstimate:
    frequencies, transfer = scan.frequencies_mhz, scan.transfer
    origin = frequencies[index]
    a, b, _ = np.polyfit(frequencies[index - 1 : index + 2] - origin, transfer[index - 1 : index + 2], 2)
    if not a < 0.0:
        raise SpectroscopyError(f"no curvature at the maximum ({frequencies[index]:.6f} MHz)")
    center = origin - b / (2.0 * a)

    low = min(max(index - 2, 0), frequencies.size - 5)
    window = slice(low, low + 5)
    (a5, b5, _), cov = np.polyfit(frequencies[window] - origin, transfer[window], 2, cov=True)
    gradient = np.array([b5 / (2.0 * a5**2), -1.0 / (2.0 * a5)])
    uncertainty = math.sqrt(max(float(gradient @ cov[:2, :2] @ gradient), 0.0)) if a5 < 0.0 else math.inf
    return FrequencyEstimate(value=float(center), uncertainty=uncertainty, method=PARABOLA)


def _lineshape_peak(scan: ResonanceScan, start: FrequencyEstimate) -> FrequencyEstimate:
    duration_us = ms_to_us(scan.pulse_length_ms)
    peak = float(np.clip(scan.transfer.max(), 1e-6, 1.0))
    coupling0 = math.asin(math.sqrt(peak)) / (math.pi * duration_us)
    x0 = np.array([start.value, coupling0, 1.0])
    logger.debug("Lineshape fit initial guess %s", x0)

    def residuals(x):
        return rabi_lineshape(scan.frequencies_mhz, x[0], x[1], x[2], duration_us) - scan.transfer

    result = least_squares(
        residuals,
        x0,
        bounds=([-np.inf, 0.0, 0.0], [np.inf, np.inf, 1.0 + 1e-9]),
        x_scale="jac",
        xtol=transport_settings.FIT_XTOL,
        max_nfev=transport_settings.FIT_MAX_ITERATIONS,
    )
    if not result.success:
        raise FitError(f"lineshape fit did not converge: {result.message}")
    dof = max(scan.transfer.size - 3, 1)
    variance = 2.0 * result.cost / dof
    covariance = np.linalg.pinv(result.jac.T @ result.jac) * variance
    return FrequencyEstimate(
        value=float(result.x[0]),
        uncertainty=math.sqrt(max(covariance[0, 0], 0.0)),
        method=LINESHAPE,
        details={"coupling_mhz": float(result.x[1]), "amplitude": float(result.x[2])},
    )


def peak_frequency(scan: ResonanceScan, method: str = PARABOLA) -> FrequencyEstimate:
    """Return the frequency of maximal transfer.

    ``parabola`` interpolates through the three highest neighbours; the uncertainty
    comes from a five-point quadratic fit around them. ``lineshape`` fits the full
    Rabi lineshape, started from the parabola estimate.
    """
    if method not in PEAK_METHODS:
        raise SpectroscopyError(f"unknown peak method {method!r}")
    estimate = _parabola_peak(scan, _locate_maximum(scan))
    if method == LINESHAPE:
        estimate = _lineshape_peak(scan, estimate)
    logger.info("Peak at %.6f +- %.2g MHz (%s)", estimate.value, estimate.uncertainty, method)
    return estimate


def pi_pulse_length_ms(frame: CrossingFrame, b_gauss: float, b_rf: float) -> float:
    """Return the length of a resonant pi pulse at ``b_gauss``."""
    coupling = float(rwa_coupling(frame, b_gauss, b_rf))
    if coupling <= 0.0:
        raise SpectroscopyError("a zero rf amplitude has no pi pulse")
    return 0.5 / coupling / 1000.0
