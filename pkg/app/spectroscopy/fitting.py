"""
Hyperbola fits of splitting against field.
"""

import logging
import math

import numpy as np
from core.conf import transport_settings
from core.exceptions import DegenerateDataError, FitError, PreconditionError
from scipy.optimize import least_squares
from spectroscopy.noise import QUADRATURE, noise_averaged_splitting
from spectroscopy.records import (
    NOISE_UPSHIFT_UNRESOLVED,
    ONE_SIDED,
    RANK_DEFICIENT,
    FitResult,
    NoiseModel,
    RamseyRecord,
    hyperbola,
)

logger = logging.getLogger(__name__)

MIN_FIT_POINTS = 4
PARAMETER_NAMES = ("delta_min", "b0", "k")
# relative singular value below which a direction counts as unresolved
_RANK_RTOL = 1e-8


def _points(points, weights) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    data = np.asarray(points, dtype=float)
    if data.ndim != 2 or data.shape[1] != 2:
        raise PreconditionError("points must be (field, splitting) pairs")
    if data.shape[0] < MIN_FIT_POINTS:
        raise PreconditionError(f"hyperbola fit needs at least {MIN_FIT_POINTS} points, got {data.shape[0]}")
    if weights is None:
        w = np.ones(data.shape[0])
    else:
        w = np.asarray(weights, dtype=float)
        if w.shape != (data.shape[0],) or np.any(w <= 0.0) or not np.all(np.isfinite(w)):
            raise PreconditionError("weights must be positive and one per point")
    return data[:, 0], data[:, 1], np.sqrt(w)


def initial_guess(fields: np.ndarray, splittings: np.ndarray) -> np.ndarray:
    """Return (delta_min, b0, k) from the smallest splitting and the outermost secant."""
    index = int(np.argmin(splittings))
    delta0, b00 = splittings[index], fields[index]
    far = int(np.argmax(np.abs(fields - b00)))
    run = abs(fields[far] - b00)
    rise = math.sqrt(max(splittings[far] ** 2 - delta0**2, 0.0))
    k0 = rise / run if run > 0.0 and rise > 0.0 else 1e-3
    return np.array([max(delta0, 1e-9), b00, k0])


def _covariance(jac: np.ndarray, variance: float) -> tuple[np.ndarray, bool]:
    """Return the SVD-based covariance and whether the Jacobian is rank deficient."""
    _, singular, vt = np.linalg.svd(jac, full_matrices=False)
    keep = singular > _RANK_RTOL * singular[0]
    inverse = np.where(keep, 1.0 / np.where(keep, singular, 1.0) ** 2, 0.0)
    covariance = (vt.T * inverse) @ vt * variance
    return covariance, not bool(np.all(keep))


def _solve(residuals, jacobian, x0, n_points: int, absolute_sigma: bool, what: str, ftol: float = 1e-15):
    result = least_squares(
        residuals,
        x0,
        jac=jacobian,
        x_scale="jac",
        xtol=transport_settings.FIT_XTOL,
        ftol=ftol,
        gtol=ftol,
        max_nfev=transport_settings.FIT_MAX_ITERATIONS,
    )
    if not result.success:
        raise FitError(f"{what} did not converge: {result.message}")
    dof = n_points - x0.size
    variance = 1.0 if absolute_sigma or dof <= 0 else 2.0 * result.cost / dof
    covariance, deficient = _covariance(result.jac, variance)
    return result, covariance, deficient


def _finish(x, covariance, deficient, fields, residual_norm, n_points, upshift=0.0, extra_flags=(), model="hyperbola"):
    delta_min, b0, k = abs(x[0]), float(x[1]), abs(x[2])
    if delta_min == 0.0:
        raise DegenerateDataError("fitted minimum splitting vanished; the data are a straight line")
    uncertainties = {name: math.sqrt(max(covariance[i, i], 0.0)) for i, name in enumerate(PARAMETER_NAMES)}
    flags = list(extra_flags)
    if deficient:
        flags.append(RANK_DEFICIENT)
        uncertainties["b0"] = math.inf
    if np.all(fields <= b0) or np.all(fields >= b0):
        flags.append(ONE_SIDED)
    if flags:
        logger.warning("%s fit flagged %s", model, ", ".join(flags))
    return FitResult(
        delta_min=float(delta_min),
        b0=b0,
        k=float(k),
        uncertainties=uncertainties,
        residual_norm=float(residual_norm),
        covariance=covariance,
        n_points=n_points,
        flags=tuple(flags),
        upshift=float(upshift),
        model=model,
    )


def hyperbola_fit(points, weights=None) -> FitResult:
    """Fit sqrt(delta_min**2 + k**2 (B - B0)**2) to (field, splitting) pairs.

    ``weights`` are inverse variances; with them the covariance is absolute,
    without them it is scaled by the residual variance. One-sided or rank-deficient
    data do not fail: they come back flagged, rank deficiency with an infinite B0
    uncertainty. Data on a straight line have no minimum and raise.
    """
    fields, splittings, root_w = _points(points, weights)
    x0 = initial_guess(fields, splittings)
    logger.debug("Hyperbola initial guess %s", x0)

    def residuals(x):
        return root_w * (hyperbola(fields, *x) - splittings)

    def jacobian(x):
        delta_min, b0, k = x
        offset = fields - b0
        model = np.hypot(delta_min, k * offset)
        return root_w[:, None] * np.column_stack([delta_min / model, -(k**2) * offset / model, k * offset**2 / model])

    result, covariance, deficient = _solve(residuals, jacobian, x0, fields.size, weights is not None, "hyperbola fit")
    fit = _finish(result.x, covariance, deficient, fields, np.linalg.norm(result.fun), fields.size)
    logger.info(
        "Hyperbola fit: delta_min %.8f +- %.2g MHz, B0 %.6f G, k %.6g MHz/G",
        fit.delta_min,
        fit.uncertainties["delta_min"],
        fit.b0,
        fit.k,
    )
    return fit


def ramsey_minimum_estimate(
    records,
    noise: NoiseModel,
    weights=None,
    *,
    method: str = QUADRATURE,
) -> FitResult:
    """Fit the noise-averaged hyperbola to Ramsey splittings and report the ideal minimum.

    ``records`` are RamseyRecords with fitted fringes or plain (field, splitting)
    pairs. The result's ``delta_min`` is the underlying hyperbola's; ``upshift``
    is how far the averaged curve's value at B0 sits above it.
    """
    points = [(r.b_gauss, r.splitting()) if isinstance(r, RamseyRecord) else tuple(r) for r in records]
    fields, splittings, root_w = _points(points, weights)
    start = hyperbola_fit(points, weights)
    if noise.is_quiet:
        return start

    def residuals(x):
        return root_w * (noise_averaged_splitting(fields, x, noise, method=method, seed=0) - splittings)

    x0 = np.array(start.params)
    result, covariance, deficient = _solve(
        residuals, "2-point", x0, fields.size, weights is not None, "averaged fit", ftol=1e-12
    )
    delta_min, b0, k = abs(result.x[0]), result.x[1], abs(result.x[2])
    upshift = noise_averaged_splitting(b0, (delta_min, b0, k), noise, method=method, seed=0) - delta_min
    delta_sigma = math.sqrt(max(covariance[0, 0], 0.0))
    extra = (NOISE_UPSHIFT_UNRESOLVED,) if upshift <= delta_sigma else ()
    fit = _finish(
        result.x,
        covariance,
        deficient,
        fields,
        np.linalg.norm(result.fun),
        fields.size,
        upshift=upshift,
        extra_flags=extra,
        model="noise-averaged",
    )
    logger.info(
        "Averaged fit: delta_min %.8f +- %.2g MHz, upshift %.3g kHz",
        fit.delta_min,
        fit.uncertainties["delta_min"],
        1000.0 * upshift,
    )
    return fit
