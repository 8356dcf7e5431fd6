"""
Time-dependent Schrodinger propagation of a two-level crossing.

The lab-frame Hamiltonian (MHz) in the bare basis is

    H(t) = -(x(t) * dmu / 2) * sigma_z + (Omega / 2) * sigma_x
    x(t) = B(t) - B0 + k * B_rf * e(t) * cos(2 pi f t + phi)

with k the drive scale (``RF_DRIVE_SCALE``) and ``dpsi/dt = -2 pi i H psi``.

In the rotating frame the state is written in the static dressed basis (|u>, |l>)
and rotated at the rf frequency; after the rotating wave approximation

    H = ((S - f) / 2) * sigma_z + (w / 2) * (cos(phi) sigma_x + sin(phi) sigma_y)
    w = k * B_rf * e(t) * (|dmu| / 2) * Omega / S

where S is the dressed splitting at B(t). The adiabatic coupling from the field
ramp and the rf terms diagonal in the dressed basis are dropped.

Time-dependent segments use an adaptive fourth-order commutator-free Magnus step
with step-doubling error control; constant segments use one exact exponential.
Steps never straddle a segment boundary.
"""

import logging
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from core.conf import transport_settings
from core.exceptions import DynamicsError, InvalidScheduleError, NormDriftError, StepSizeUnderflowError
from crossing.frame import CrossingFrame, mixing_components
from dynamics.schedule import PulseSchedule, RampSegment
from dynamics.state import QuantumState, dressed_populations
from manifold.units import TWO_PI

logger = logging.getLogger(__name__)

LAB = "lab"
RWA = "rwa"
FRAME_MODES = (LAB, RWA)

MIN_TOLERANCE = 1e-12
MAX_TOLERANCE = 1e-4

# Gauss-Legendre nodes and the commutator-free weights.
_C1 = 0.5 - math.sqrt(3.0) / 6.0
_C2 = 0.5 + math.sqrt(3.0) / 6.0
_A1 = (3.0 - 2.0 * math.sqrt(3.0)) / 12.0
_A2 = (3.0 + 2.0 * math.sqrt(3.0)) / 12.0

_SAFETY = 0.9
_MIN_FACTOR = 0.2
_MAX_FACTOR = 4.0

TRACE_COLUMNS = ("time_us", "B_gauss", "pop_b1", "pop_b2", "pop_upper_dressed", "pop_lower_dressed", "norm")

FieldVector = tuple[float, float, float]


def exp_apply(hx: float, hy: float, hz: float, tau: float, c0: complex, c1: complex) -> tuple[complex, complex]:
    """Apply exp(-2 pi i tau (h . sigma)) to the amplitudes (c0, c1)."""
    norm = math.sqrt(hx * hx + hy * hy + hz * hz)
    if norm == 0.0:
        return c0, c1
    angle = TWO_PI * tau * norm
    cos_a = math.cos(angle)
    s = math.sin(angle) / norm
    u00 = complex(cos_a, -s * hz)
    u11 = complex(cos_a, s * hz)
    u01 = complex(-s * hy, -s * hx)
    u10 = complex(s * hy, -s * hx)
    return u00 * c0 + u01 * c1, u10 * c0 + u11 * c1


def su2_propagator(hx, hy, hz, tau) -> np.ndarray:
    """Return exp(-2 pi i tau (h . sigma)) for broadcast arrays, shape (..., 2, 2)."""
    hx, hy, hz, tau = np.broadcast_arrays(*(np.asarray(value, dtype=float) for value in (hx, hy, hz, tau)))
    norm = np.sqrt(hx**2 + hy**2 + hz**2)
    angle = TWO_PI * tau * norm
    s = np.sin(angle) / np.where(norm > 0.0, norm, 1.0)
    c = np.cos(angle)
    propagator = np.empty(norm.shape + (2, 2), dtype=complex)
    propagator[..., 0, 0] = c - 1j * s * hz
    propagator[..., 1, 1] = c + 1j * s * hz
    propagator[..., 0, 1] = -s * hy - 1j * s * hx
    propagator[..., 1, 0] = s * hy - 1j * s * hx
    return propagator


def rwa_coupling(frame: CrossingFrame, b_gauss, amplitude_g, drive_scale: float | None = None):
    """Return the rotating-frame coupling w (MHz) for an rf amplitude at a field."""
    scale = transport_settings.RF_DRIVE_SCALE if drive_scale is None else drive_scale
    return scale * np.asarray(amplitude_g) * 0.5 * abs(frame.delta_mu) * frame.omega / frame.splitting(b_gauss)


def rwa_field_vector(frame: CrossingFrame, b_gauss, amplitude_g, f_rf, phase_rad=0.0, drive_scale=None):
    """Return (hx, hy, hz) of the rotating-frame Hamiltonian; accepts arrays."""
    half_w = 0.5 * rwa_coupling(frame, b_gauss, amplitude_g, drive_scale)
    hz = 0.5 * (frame.splitting(b_gauss) - np.asarray(f_rf))
    return half_w * np.cos(phase_rad), half_w * np.sin(phase_rad), hz


def _lab_hamiltonian(frame: CrossingFrame, segment: RampSegment, start_us: float, scale: float):
    half_omega = 0.5 * frame.omega
    half_dmu = 0.5 * frame.delta_mu
    b0 = frame.b0
    field = segment.field

    if not segment.has_rf:

        def static_drive(t: float) -> FieldVector:
            return half_omega, 0.0, -half_dmu * (field(t - start_us) - b0)

        return static_drive

    rf = segment.rf
    amplitude = scale * rf.amplitude_g
    angular, phase = TWO_PI * rf.frequency_mhz, rf.phase_rad
    envelope, duration = rf.envelope.value, segment.duration_us

    def driven(t: float) -> FieldVector:
        local = t - start_us
        x = field(local) - b0 + amplitude * envelope(local, duration) * math.cos(angular * t + phase)
        return half_omega, 0.0, -half_dmu * x

    return driven


def _rwa_hamiltonian(frame: CrossingFrame, segment: RampSegment, start_us: float, scale: float, f_rf: float):
    field, splitting = segment.field, frame.splitting

    if not segment.has_rf:

        def undriven(t: float) -> FieldVector:
            return 0.0, 0.0, 0.5 * (splitting(field(t - start_us)) - f_rf)

        return undriven

    rf = segment.rf
    coupling = scale * rf.amplitude_g * 0.5 * abs(frame.delta_mu) * frame.omega
    cos_phi, sin_phi = math.cos(rf.phase_rad), math.sin(rf.phase_rad)
    envelope, duration = rf.envelope.value, segment.duration_us

    def driven(t: float) -> FieldVector:
        local = t - start_us
        s = splitting(field(local))
        half_w = 0.5 * coupling * envelope(local, duration) / s
        return half_w * cos_phi, half_w * sin_phi, 0.5 * (s - f_rf)

    return driven


def _cf4_step(h: Callable[[float], FieldVector], t: float, dt: float, c0: complex, c1: complex):
    x1, y1, z1 = h(t + _C1 * dt)
    x2, y2, z2 = h(t + _C2 * dt)
    c0, c1 = exp_apply(_A2 * x1 + _A1 * x2, _A2 * y1 + _A1 * y2, _A2 * z1 + _A1 * z2, dt, c0, c1)
    return exp_apply(_A1 * x1 + _A2 * x2, _A1 * y1 + _A2 * y2, _A1 * z1 + _A2 * z2, dt, c0, c1)


@dataclass(frozen=True, eq=False)
class StateTrace:
    """Sampled trajectory of a propagation; times are relative to the schedule start."""

    times_us: np.ndarray
    fields_g: np.ndarray
    amplitudes: np.ndarray
    frame: CrossingFrame
    frame_mode: str
    start_time_us: float = 0.0
    norm_drift: float = 0.0
    steps: int = 0

    @property
    def final(self) -> QuantumState:
        return QuantumState(
            self.amplitudes[-1], time_us=self.start_time_us + float(self.times_us[-1]), norm_drift=self.norm_drift
        )

    @property
    def populations(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    @property
    def norms(self) -> np.ndarray:
        return self.populations.sum(axis=1)

    def dressed_populations(self) -> tuple[np.ndarray, np.ndarray]:
        """Return (upper, lower) static dressed populations along the trace."""
        return dressed_populations(self.frame, self.fields_g, self.amplitudes)

    def rows(self) -> list[tuple[float, ...]]:
        """Return one tuple per sample in ``TRACE_COLUMNS`` order."""
        populations = self.populations
        upper, lower = self.dressed_populations()
        return [
            (
                float(self.times_us[i]),
                float(self.fields_g[i]),
                float(populations[i, 0]),
                float(populations[i, 1]),
                float(upper[i]),
                float(lower[i]),
                float(populations[i].sum()),
            )
            for i in range(len(self.times_us))
        ]


def resolve_frame(schedule: PulseSchedule, frame_mode: str | None) -> tuple[str, float | None]:
    """Return the frame to integrate in and, for the rotating frame, its rf frequency."""
    mode = transport_settings.DEFAULT_FRAME if frame_mode is None else frame_mode
    if mode not in FRAME_MODES:
        raise DynamicsError(f"unknown frame {mode!r}, expected one of {FRAME_MODES}")
    if mode == LAB:
        return LAB, None
    frequencies = schedule.rf_frequencies()
    if not frequencies:
        logger.debug("schedule carries no rf, integrating in the lab frame")
        return LAB, None
    if len(frequencies) > 1:
        raise InvalidScheduleError(
            f"rotating frame needs a single rf frequency, schedule uses {sorted(frequencies)} MHz"
        )
    return RWA, frequencies.pop()


class _Recorder:
    def __init__(self, interval_us: float) -> None:
        self.interval_us = interval_us
        self.times: list[float] = []
        self.amplitudes: list[tuple[complex, complex]] = []
        self.fields: list[float] = []

    def add(self, t: float, b: float, c0: complex, c1: complex, force: bool = False) -> None:
        if not force and self.times and t - self.times[-1] < self.interval_us:
            return
        if self.times and t == self.times[-1]:
            self.amplitudes[-1], self.fields[-1] = (c0, c1), b
            return
        self.times.append(t)
        self.fields.append(b)
        self.amplitudes.append((c0, c1))


def propagate(
    state: QuantumState,
    frame: CrossingFrame,
    schedule: PulseSchedule,
    tol: float | None = None,
    *,
    frame_mode: str | None = None,
    sample_interval_us: float | None = None,
    max_step_us: float | None = None,
) -> StateTrace:
    """Integrate ``state`` through ``schedule`` and return the sampled trajectory.

    ``tol`` bounds the local error per step in the state amplitudes. The norm is
    checked after every step and a ``NormDriftError`` is raised when it drifts by
    more than a hundred times the tolerance.
    """
    tol = transport_settings.DEFAULT_TOLERANCE if tol is None else tol
    if not MIN_TOLERANCE <= tol <= MAX_TOLERANCE:
        raise DynamicsError(f"tolerance must lie in [{MIN_TOLERANCE}, {MAX_TOLERANCE}], got {tol}")
    interval = transport_settings.TRACE_SAMPLE_INTERVAL_US if sample_interval_us is None else sample_interval_us
    max_step = math.inf if max_step_us is None else max_step_us
    if not max_step > 0.0:
        raise DynamicsError(f"maximum step must be positive, got {max_step_us}")
    mode, f_rf = resolve_frame(schedule, frame_mode)
    scale = transport_settings.RF_DRIVE_SCALE

    norm0 = state.norm
    if abs(norm0 - 1.0) > 1e-6:
        raise DynamicsError(f"initial state is not normalized (norm {norm0:.9g})")
    limit = 100.0 * tol
    drift_max = state.norm_drift

    c0, c1 = complex(state.amplitudes[0]), complex(state.amplitudes[1])
    if mode == RWA:
        cos_t, sin_t = (float(value) for value in mixing_components(frame.detuning(schedule.b_initial), frame.omega))
        c0, c1 = cos_t * c0 + sin_t * c1, -sin_t * c0 + cos_t * c1

    recorder = _Recorder(interval)
    recorder.add(0.0, schedule.b_initial, c0, c1, force=True)
    steps = 0
    max_steps = transport_settings.MAX_STEPS

    for start_us, segment in zip(schedule.start_times_us(), schedule.segments):
        end_us = start_us + segment.duration_us
        if mode == RWA:
            h = _rwa_hamiltonian(frame, segment, start_us, scale, f_rf)
        else:
            h = _lab_hamiltonian(frame, segment, start_us, scale)

        if segment.is_static(rotating=mode == RWA):
            hx, hy, hz = h(start_us)
            chunks = 1 if interval <= 0.0 else max(1, math.ceil(segment.duration_us / interval - 1e-9))
            tau = segment.duration_us / chunks
            for index in range(1, chunks + 1):
                c0, c1 = exp_apply(hx, hy, hz, tau, c0, c1)
                t = end_us if index == chunks else start_us + index * tau
                recorder.add(t, segment.b_start, c0, c1, force=True)
            steps += chunks
            continue

        t = start_us
        x, y, z = h(t)
        rate = math.sqrt(x * x + y * y + z * z)
        if mode == LAB and segment.has_rf:
            rate += segment.rf.frequency_mhz
        dt = min(segment.duration_us, max_step, 0.05 / (TWO_PI * rate + 1e-12))

        while t < end_us:
            remaining = end_us - t
            step = min(dt, remaining, max_step)
            full = _cf4_step(h, t, step, c0, c1)
            half = _cf4_step(h, t, 0.5 * step, c0, c1)
            half = _cf4_step(h, t + 0.5 * step, 0.5 * step, *half)
            error = max(abs(half[0] - full[0]), abs(half[1] - full[1])) / 15.0

            if error <= tol:
                t = end_us if step >= remaining else t + step
                c0, c1 = half
                steps += 1
                if steps > max_steps:
                    raise DynamicsError(f"step budget of {max_steps} exhausted at t={t:.6g} us")
                drift = abs(abs(c0) ** 2 + abs(c1) ** 2 - norm0)
                if drift > limit:
                    raise NormDriftError(t, drift, limit)
                drift_max = max(drift_max, drift)
                recorder.add(t, segment.field(t - start_us), c0, c1, force=t == end_us)

            if error == 0.0:
                factor = _MAX_FACTOR
            elif math.isfinite(error):
                factor = min(_MAX_FACTOR, max(_MIN_FACTOR, _SAFETY * (tol / error) ** 0.2))
            else:
                factor = _MIN_FACTOR
            dt = step * factor
            if error > tol and dt < 64.0 * np.finfo(float).eps * max(1.0, abs(t)):
                raise StepSizeUnderflowError(t, dt)

    times = np.array(recorder.times)
    fields = np.array(recorder.fields)
    amplitudes = np.array(recorder.amplitudes, dtype=complex)
    if mode == RWA:
        amplitudes = _rotating_to_bare(frame, times, fields, amplitudes, f_rf)

    logger.debug(
        "propagated %.6g us in %d steps (%s frame, tol %.1e, drift %.2e)",
        schedule.duration_us,
        steps,
        mode,
        tol,
        drift_max,
    )
    return StateTrace(
        times_us=times,
        fields_g=fields,
        amplitudes=amplitudes,
        frame=frame,
        frame_mode=mode,
        start_time_us=state.time_us,
        norm_drift=drift_max,
        steps=steps,
    )


def _rotating_to_bare(frame, times, fields, amplitudes, f_rf):
    """Undo the rf rotation and express dressed amplitudes in the bare basis."""
    a_upper = amplitudes[:, 0] * np.exp(-1j * np.pi * f_rf * times)
    a_lower = amplitudes[:, 1] * np.exp(1j * np.pi * f_rf * times)
    cos_t, sin_t = mixing_components(frame.detuning(fields), frame.omega)
    return np.column_stack([cos_t * a_upper - sin_t * a_lower, sin_t * a_upper + cos_t * a_lower])
