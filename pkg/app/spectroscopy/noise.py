"""
Field-noise averaging of the splitting hyperbola.

The cloud sees a spread of fields: a gradient across its diameter and a
shot-to-shot fluctuation. A measured splitting is the average of the hyperbola
over that spread, which lifts the observed minimum above the true one.
"""

import logging
import math

import numpy as np
from core.conf import transport_settings
from core.exceptions import PreconditionError, SpectroscopyError
from spectroscopy.records import FitResult, NoiseModel, hyperbola

logger = logging.getLogger(__name__)

MONTE_CARLO = "monte_carlo"
QUADRATURE = "quadrature"
AVERAGING_METHODS = (MONTE_CARLO, QUADRATURE)
MIN_MONTE_CARLO_SAMPLES = 10_000


def sigma_eff(noise: NoiseModel) -> float:
    """Return the combined field spread (G): uniform cloud term and Gaussian term in quadrature."""
    return math.hypot(noise.spread_g / math.sqrt(12.0), noise.fluctuation_sigma_g)


def analytic_upshift(k: float, delta_min: float, noise: NoiseModel) -> float:
    """Return the small-spread upshift k**2 sigma_eff**2 / (2 delta_min) at B0 in MHz."""
    return k**2 * sigma_eff(noise) ** 2 / (2.0 * delta_min)


def sample_offsets(noise: NoiseModel, n_samples: int, rng: np.random.Generator) -> np.ndarray:
    """Draw field offsets (G) in antithetic pairs; returns ``n_samples`` values rounded up to even."""
    half = (n_samples + 1) // 2
    if noise.distribution == "uniform":
        spatial = rng.uniform(-0.5, 0.5, half) * noise.spread_g
    else:
        spatial = rng.standard_normal(half) * noise.spread_g / math.sqrt(12.0)
    offsets = spatial + rng.standard_normal(half) * noise.fluctuation_sigma_g
    return np.concatenate([offsets, -offsets])


def quadrature_rule(noise: NoiseModel, nodes: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Return (offsets, weights) of a product rule over the noise distribution; weights sum to 1."""
    nodes = nodes or transport_settings.QUADRATURE_NODES
    hermite_x, hermite_w = np.polynomial.hermite_e.hermegauss(nodes)
    hermite_w = hermite_w / hermite_w.sum()
    if noise.distribution == "uniform":
        legendre_x, legendre_w = np.polynomial.legendre.leggauss(nodes)
        spatial = 0.5 * noise.spread_g * legendre_x
        spatial_w = 0.5 * legendre_w
    else:
        spatial = hermite_x * noise.spread_g / math.sqrt(12.0)
        spatial_w = hermite_w
    offsets = (spatial[:, None] + noise.fluctuation_sigma_g * hermite_x[None, :]).ravel()
    weights = (spatial_w[:, None] * hermite_w[None, :]).ravel()
    return offsets, weights


def _params(params) -> tuple[float, float, float]:
    if isinstance(params, FitResult):
        return params.params
    delta_min, b0, k = params
    return float(delta_min), float(b0), float(k)


def noise_averaged_splitting(
    b_gauss,
    params,
    noise: NoiseModel,
    n_samples: int | None = None,
    seed: int | None = None,
    *,
    method: str = MONTE_CARLO,
):
    """Return the hyperbola averaged over the field noise at ``b_gauss`` (scalar or array).

    ``params`` is a FitResult or a (delta_min, b0, k) triple. Monte-Carlo draws a
    single offset set shared by every field, so averaged curves are smooth in B.
    """
    delta_min, b0, k = _params(params)
    b = np.asarray(b_gauss, dtype=float)
    if method not in AVERAGING_METHODS:
        raise SpectroscopyError(f"unknown averaging method {method!r}")
    if noise.is_quiet:
        averaged = hyperbola(b, delta_min, b0, k)
    elif method == MONTE_CARLO:
        n_samples = n_samples or transport_settings.MONTE_CARLO_SAMPLES
        if n_samples < MIN_MONTE_CARLO_SAMPLES:
            raise PreconditionError(
                f"Monte-Carlo averaging needs at least {MIN_MONTE_CARLO_SAMPLES} samples, got {n_samples}"
            )
        offsets = sample_offsets(noise, n_samples, np.random.default_rng(seed))
        averaged = hyperbola(b[..., None] + offsets, delta_min, b0, k).mean(axis=-1)
    else:
        offsets, weights = quadrature_rule(noise)
        averaged = hyperbola(b[..., None] + offsets, delta_min, b0, k) @ weights
    if averaged.ndim == 0:
        return float(averaged)
    return averaged
