"""
Two-level algebra of a single avoided crossing.

Level 1 is the crossing's lower level and level 2 its upper level, so the detuning
is delta = (mu2 - mu1) * (B - B0) in MHz and the static Hamiltonian (E/h) is

    H = diag(mu1, mu2) * (B - B0) + (Omega / 2) * sigma_x

up to a multiple of the identity. Its eigenstates are

    |u> = cos(theta) |b1> + sin(theta) |b2>
    |l> = -sin(theta) |b1> + cos(theta) |b2>

with tan(theta) = (delta + sqrt(delta**2 + Omega**2)) / Omega.
"""

import math
from dataclasses import dataclass, replace

import numpy as np
from core.exceptions import CrossingModelError
from manifold.levels import AvoidedCrossing
from manifold.units import TWO_PI


@dataclass(frozen=True)
class CrossingFrame:
    """Local two-level frame of a crossing at one field value."""

    delta: float
    omega: float
    mu1: float
    mu2: float
    b0: float

    def __post_init__(self) -> None:
        if not self.omega > 0.0:
            raise CrossingModelError(f"coupling must be positive, got {self.omega}")
        if self.mu1 == self.mu2:
            raise CrossingModelError("levels with equal magnetic moments do not cross")

    @classmethod
    def from_crossing(cls, crossing: AvoidedCrossing, b_gauss: float | None = None) -> "CrossingFrame":
        """Build the frame of a manifold crossing, at ``b_gauss`` or at B0."""
        frame = cls(
            delta=0.0,
            omega=crossing.coupling_omega,
            mu1=crossing.level_lower.magnetic_moment,
            mu2=crossing.level_upper.magnetic_moment,
            b0=crossing.crossing_field_b0,
        )
        return frame if b_gauss is None else frame.at(b_gauss)

    @property
    def delta_mu(self) -> float:
        return self.mu2 - self.mu1

    @property
    def field(self) -> float:
        """Field at which this frame is evaluated."""
        return self.b0 + self.delta / self.delta_mu

    def detuning(self, b_gauss):
        """Return delta (MHz) at a field; accepts arrays."""
        if np.ndim(b_gauss):
            return self.delta_mu * (np.asarray(b_gauss, dtype=float) - self.b0)
        return self.delta_mu * (b_gauss - self.b0)

    def splitting(self, b_gauss=None):
        """Return the dressed splitting sqrt(delta**2 + Omega**2) in MHz."""
        delta = self.delta if b_gauss is None else self.detuning(b_gauss)
        return np.hypot(delta, self.omega) if np.ndim(delta) else math.hypot(delta, self.omega)

    def at(self, b_gauss: float) -> "CrossingFrame":
        return replace(self, delta=self.delta_mu * (b_gauss - self.b0))


@dataclass(frozen=True)
class DressedPair:
    """Eigen-decomposition of the static crossing Hamiltonian."""

    e_upper: float
    e_lower: float
    theta: float
    state_upper: np.ndarray
    state_lower: np.ndarray

    @property
    def splitting(self) -> float:
        return self.e_upper - self.e_lower


def mixing_angle(frame: CrossingFrame) -> float:
    """Return theta in (0, pi/2).

    Evaluated as pi/4 + atan(delta / Omega) / 2, the same angle as the arctan
    expression in the module docstring but without cancellation for delta << 0.
    """
    return math.pi / 4.0 + 0.5 * math.atan(frame.delta / frame.omega)


def mixing_components(delta, omega: float) -> tuple[np.ndarray, np.ndarray]:
    """Return (cos theta, sin theta) for scalar or array detunings."""
    theta = np.pi / 4.0 + 0.5 * np.arctan(np.asarray(delta, dtype=float) / omega)
    return np.cos(theta), np.sin(theta)


def dressed_pair(frame: CrossingFrame) -> DressedPair:
    """Return dressed energies and states of the static crossing."""
    theta = mixing_angle(frame)
    half_splitting = 0.5 * frame.splitting()
    # Energies relative to the mean of the two bare energies.
    mean = 0.5 * (frame.mu1 + frame.mu2) * (frame.delta / frame.delta_mu)
    cos_t, sin_t = math.cos(theta), math.sin(theta)
    return DressedPair(
        e_upper=mean + half_splitting,
        e_lower=mean - half_splitting,
        theta=theta,
        state_upper=np.array([cos_t, sin_t]),
        state_lower=np.array([-sin_t, cos_t]),
    )


def static_hamiltonian(frame: CrossingFrame) -> np.ndarray:
    """Return the static 2x2 Hamiltonian (MHz) in the bare basis at the frame's field."""
    offset = frame.delta / frame.delta_mu
    return np.array(
        [
            [frame.mu1 * offset, 0.5 * frame.omega],
            [0.5 * frame.omega, frame.mu2 * offset],
        ]
    )


def transition_moment(frame: CrossingFrame) -> float:
    """Return (mu2 - mu1) * Omega / sqrt(delta**2 + Omega**2) in MHz/G.

    Peaks at mu2 - mu1 on the crossing and falls to half of that at
    delta = +-sqrt(3) * Omega. This is twice the matrix element <u|diag(mu1, mu2)|l>
    evaluated with the eigenstates above; see ``transition_moment_braket``.
    """
    return frame.delta_mu * frame.omega / frame.splitting()


def transition_moment_closed_form(frame: CrossingFrame) -> float:
    """Return the moment written in terms of tan(theta); equal to ``transition_moment``."""
    root = frame.delta + math.sqrt(frame.delta**2 + frame.omega**2)
    return 2.0 * frame.delta_mu * frame.omega * root / (frame.omega**2 + root**2)


def transition_moment_braket(frame: CrossingFrame) -> float:
    """Return <u|diag(mu1, mu2)|l> evaluated from the eigenvectors."""
    pair = dressed_pair(frame)
    return float(pair.state_upper @ np.diag([frame.mu1, frame.mu2]) @ pair.state_lower)


def rabi_frequency(frame: CrossingFrame, b_rf: float) -> float:
    """Return omega_R = 2*pi * B_rf * mu_ul in rad/us; non-negative."""
    if b_rf < 0.0:
        raise CrossingModelError(f"rf amplitude must be non-negative, got {b_rf}")
    return TWO_PI * b_rf * abs(transition_moment(frame))


def rf_induced_crossings(frame: CrossingFrame, f_rf: float) -> tuple[float, ...]:
    """Return the fields where the dressed splitting equals the rf frequency, descending."""
    if not f_rf > 0.0:
        raise CrossingModelError(f"rf frequency must be positive, got {f_rf}")
    if f_rf < frame.omega:
        return ()
    if f_rf == frame.omega:
        return (frame.b0,)
    offset = math.sqrt((f_rf - frame.omega) * (f_rf + frame.omega)) / abs(frame.delta_mu)
    return (frame.b0 + offset, frame.b0 - offset)


def effective_sweep_moment(frame: CrossingFrame, f_rf: float) -> float:
    """Return the slope (MHz/G) of the dressed splitting at the rf-induced crossings.

    This is the rate at which the rf detuning changes with field during an ATAC
    sweep, so it replaces |mu2 - mu1| in Landau-Zener estimates of rf transfer.
    """
    if f_rf <= frame.omega:
        return 0.0
    return abs(frame.delta_mu) * math.sqrt((f_rf - frame.omega) * (f_rf + frame.omega)) / f_rf
