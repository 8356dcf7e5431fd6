"""
Landau-Zener estimates for linear sweeps through a crossing.

With omega_R in rad/us, the sweep speed in G/us and the moment difference dmu in
MHz/G (an energy slope divided by h), the adiabatic transfer probability is

    P = 1 - exp(-pi * omega_R**2 / (2 * 2 pi |dmu| * |dB/dt|))

For a static crossing omega_R = 2 pi Omega and P is the probability of following
the adiabatic branch, so a diabatic jump succeeds with probability 1 - P.
"""

import logging
import math
from dataclasses import dataclass

import numpy as np
from core.conf import transport_settings
from core.exceptions import DegenerateDataError, DynamicsError, FitError, PreconditionError
from crossing.frame import CrossingFrame
from manifold.units import TWO_PI, g_per_ms_to_g_per_us
from scipy.optimize import least_squares

logger = logging.getLogger(__name__)

MIN_FIT_POINTS = 5
# Points this close to 0 or 1 carry no information about the moment.
_INFORMATIVE_BAND = (0.01, 0.99)


def landau_zener_exponent(omega_r: float, ramp_speed_g_per_ms: float, dmu: float) -> float:
    """Return the exponent pi * omega_R**2 / (2 * 2 pi |dmu| * |dB/dt|)."""
    if ramp_speed_g_per_ms == 0.0:
        raise DynamicsError("ramp speed must be non-zero")
    if dmu == 0.0:
        raise DynamicsError("moment difference must be non-zero")
    speed = abs(g_per_ms_to_g_per_us(ramp_speed_g_per_ms))
    return math.pi * omega_r**2 / (2.0 * TWO_PI * abs(dmu) * speed)


def landau_zener_probability(omega_r: float, ramp_speed_g_per_ms: float, dmu: float) -> float:
    """Return the adiabatic transfer probability of a linear sweep."""
    return -math.expm1(-landau_zener_exponent(omega_r, ramp_speed_g_per_ms, dmu))


def static_crossing_lz(frame: CrossingFrame, ramp_speed_g_per_ms: float) -> float:
    """Return the probability of following the adiabatic branch through a static crossing."""
    return landau_zener_probability(TWO_PI * frame.omega, ramp_speed_g_per_ms, frame.delta_mu)


def diabatic_jump_probability(frame: CrossingFrame, ramp_speed_g_per_ms: float) -> float:
    """Return the probability of staying on the bare level through a static crossing."""
    return math.exp(-landau_zener_exponent(TWO_PI * frame.omega, ramp_speed_g_per_ms, frame.delta_mu))


@dataclass(frozen=True)
class LzFit:
    """Transition moment extracted from efficiency versus rf amplitude."""

    moment: float
    stderr: float
    residual_norm: float
    n_points: int
    ramp_speed_g_per_ms: float
    dmu: float

    def predict(self, b_rf):
        """Return the fitted efficiency curve at the given rf amplitudes."""
        return _efficiency_model(np.asarray(b_rf, dtype=float), self.moment, self.ramp_speed_g_per_ms, self.dmu)


def _exponent_scale(ramp_speed: float, dmu: float) -> float:
    """Exponent per unit (mu * B_rf)**2."""
    return landau_zener_exponent(TWO_PI, ramp_speed, dmu)


def _efficiency_model(b_rf: np.ndarray, moment: float, ramp_speed: float, dmu: float) -> np.ndarray:
    return -np.expm1(-_exponent_scale(ramp_speed, dmu) * (moment * b_rf) ** 2)


def extract_lz_fit(b_rf_values, efficiencies, ramp_speed_g_per_ms: float, dmu: float, sigma=None) -> LzFit:
    """Fit the transition moment mu with omega_R = 2 pi mu B_rf to the transfer efficiencies.

    ``dmu`` is the sweep moment: the bare moment difference for a static crossing,
    the effective sweep moment for rf-induced crossings.
    """
    b_rf = np.asarray(b_rf_values, dtype=float)
    efficiency = np.asarray(efficiencies, dtype=float)
    if b_rf.shape != efficiency.shape or b_rf.ndim != 1:
        raise PreconditionError("amplitudes and efficiencies must be matching 1-d sequences")
    if len(b_rf) < MIN_FIT_POINTS:
        raise PreconditionError(f"need at least {MIN_FIT_POINTS} points, got {len(b_rf)}")
    if np.any(b_rf < 0.0):
        raise PreconditionError("rf amplitudes must be non-negative")
    if ramp_speed_g_per_ms == 0.0 or dmu == 0.0:
        raise PreconditionError("ramp speed and sweep moment must be non-zero")
    weights = np.ones_like(b_rf) if sigma is None else 1.0 / np.asarray(sigma, dtype=float)

    low, high = _INFORMATIVE_BAND
    informative = (efficiency > low) & (efficiency < high) & (b_rf > 0.0)
    if not np.any(informative):
        state = "saturated" if np.all(efficiency >= high) else "zero"
        raise DegenerateDataError(f"all efficiencies are {state}; the moment is not constrained")

    scale = _exponent_scale(ramp_speed_g_per_ms, dmu)
    guesses = -np.log1p(-efficiency[informative]) / (scale * b_rf[informative] ** 2)
    initial = math.sqrt(float(np.median(guesses)))

    def residuals(params):
        return weights * (_efficiency_model(b_rf, params[0], ramp_speed_g_per_ms, dmu) - efficiency)

    result = least_squares(
        residuals,
        x0=[initial],
        bounds=([0.0], [np.inf]),
        x_scale=[initial],
        xtol=transport_settings.FIT_XTOL,
        max_nfev=transport_settings.FIT_MAX_ITERATIONS,
    )
    if not result.success:
        raise FitError(f"transition moment fit did not converge: {result.message}")

    moment = float(result.x[0])
    dof = max(1, len(b_rf) - 1)
    variance = 2.0 * result.cost / dof
    jtj = float(result.jac[:, 0] @ result.jac[:, 0])
    stderr = math.sqrt(variance / jtj) if jtj > 0.0 else math.inf
    fit = LzFit(
        moment=moment,
        stderr=stderr,
        residual_norm=float(np.linalg.norm(result.fun)),
        n_points=len(b_rf),
        ramp_speed_g_per_ms=ramp_speed_g_per_ms,
        dmu=dmu,
    )
    logger.info("fitted transition moment %.6g +- %.2g MHz/G from %d points", fit.moment, fit.stderr, fit.n_points)
    return fit
