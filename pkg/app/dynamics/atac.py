"""
Adiabatic transfer across rf-induced crossings.

A blue-detuned rf field (f > Omega) makes the dressed splitting resonant at two
fields symmetric about B0. Ramping the bias field through one of them with the rf
on moves the population from one dressed branch to the other. The rf is switched
off with the field held at the end of the ramp, slowly enough that the molecules
stay in the dressed branch they were carried into.
"""

import logging
import math
from dataclasses import dataclass, replace

from core.exceptions import GeometryError
from crossing.frame import CrossingFrame, rabi_frequency, rf_induced_crossings
from dynamics.integrator import StateTrace, propagate
from dynamics.schedule import DEFAULT_RISE_TIME_US, Envelope, PulseSchedule, RampSegment, RfDrive
from dynamics.state import UPPER, QuantumState, other_branch
from manifold.units import TWO_PI, US_PER_MS

logger = logging.getLogger(__name__)

DEFAULT_WINDOW_MARGIN_G = 1.0
ABOVE = "above"
BELOW = "below"
SWITCH_OFF_ADIABATICITY = 0.02
MAX_SWITCH_OFF_US = 2000.0


@dataclass(frozen=True, eq=False)
class TransferResult:
    """Outcome of one ramp through an rf-induced crossing."""

    efficiency: float
    trace: StateTrace
    schedule: PulseSchedule
    start_branch: str
    rabi_frequency: float
    survival: float = 1.0

    @property
    def final_state(self) -> QuantumState:
        return self.trace.final

    @property
    def target_branch(self) -> str:
        return other_branch(self.start_branch)

    @property
    def population_trace(self):
        """Return (upper, lower) dressed populations along the ramp."""
        return self.trace.dressed_populations()


@dataclass(frozen=True, eq=False)
class RoundTripResult:
    forward: TransferResult
    reverse: TransferResult

    @property
    def recovered(self) -> float:
        """Population back in the starting branch after the reverse ramp."""
        return self.reverse.efficiency


def atac_window(
    frame: CrossingFrame,
    f_rf: float,
    margin_g: float = DEFAULT_WINDOW_MARGIN_G,
    approach: str = ABOVE,
) -> tuple[float, float, float]:
    """Return (b_from, b_to, b_x) for a ramp through the rf-induced crossing on one side of B0.

    The ramp starts ``margin_g`` outside the crossing and stops ``margin_g`` past
    it, but never beyond B0.
    """
    fields = rf_induced_crossings(frame, f_rf)
    if len(fields) != 2:
        raise GeometryError(f"rf at {f_rf} MHz is not blue-detuned from the {frame.omega} MHz splitting")
    upper, lower = fields
    if approach == ABOVE:
        return upper + margin_g, max(upper - margin_g, frame.b0), upper
    if approach == BELOW:
        return lower - margin_g, min(lower + margin_g, frame.b0), lower
    raise GeometryError(f"unknown approach {approach!r}")


def switch_off_time_us(
    frame: CrossingFrame,
    b_rf: float,
    f_rf: float,
    b_end: float,
    rise_time_us: float = DEFAULT_RISE_TIME_US,
) -> float:
    """Return how long the rf takes to fall to zero at ``b_end`` without leaving the dressed branch.

    A linear fall over T from Rabi frequency omega_R at rf detuning delta (both in
    rad/us) stays adiabatic while omega_R / (2 T delta^2) is below
    ``SWITCH_OFF_ADIABATICITY``. The result lies between ``rise_time_us`` and
    ``MAX_SWITCH_OFF_US``.
    """
    detuning = TWO_PI * abs(f_rf - float(frame.splitting(b_end)))
    if detuning == 0.0:
        return MAX_SWITCH_OFF_US
    needed = rabi_frequency(frame.at(b_end), b_rf) / (2.0 * SWITCH_OFF_ADIABATICITY * detuning**2)
    return min(max(rise_time_us, needed), MAX_SWITCH_OFF_US)


def atac_segments(
    rf: RfDrive,
    b_from: float,
    b_to: float,
    ramp_speed: float,
    rise_time_us: float | None,
    switch_off_us: float,
) -> list[RampSegment]:
    """Return the rf segments of one transfer.

    The rf rises linearly over ``rise_time_us`` at the start of the ramp, stays on
    to ``b_to`` and falls to zero over ``switch_off_us`` with the field held there.
    With ``rise_time_us`` None the rf is simply on for the ramp; a zero
    ``switch_off_us`` drops the hold and cuts the rf at ``b_to``.
    """
    ramp = RampSegment.ramp(b_from, b_to, ramp_speed, rf=replace(rf, envelope=Envelope.rectangular()))
    if rise_time_us is None:
        return [ramp]
    rise_ms = min(rise_time_us, 0.5 * ramp.duration_us) / US_PER_MS
    b_on = b_from + (b_to - b_from) * rise_ms / ramp.duration_ms
    segments = [
        RampSegment(
            duration_ms=rise_ms, b_start=b_from, b_end=b_on, rf=replace(rf, envelope=Envelope.linear(0.0, 1.0))
        ),
        RampSegment(duration_ms=ramp.duration_ms - rise_ms, b_start=b_on, b_end=b_to, rf=ramp.rf),
    ]
    if switch_off_us > 0.0:
        off = replace(rf, envelope=Envelope.linear(1.0, 0.0))
        segments.append(RampSegment.hold(b_to, switch_off_us / US_PER_MS, rf=off))
    return segments


def atac_schedule(
    frame: CrossingFrame,
    b_rf: float,
    f_rf: float,
    b_from: float,
    b_to: float,
    ramp_speed: float,
    *,
    b_initial: float | None = None,
    rise_time_us: float | None = DEFAULT_RISE_TIME_US,
    phase_rad: float = 0.0,
) -> PulseSchedule:
    """Return the ramp schedule and check that it crosses exactly one rf-induced crossing.

    The rf switches on over ``rise_time_us`` and off at ``b_to`` as laid out by
    ``atac_segments``; ``None`` switches it on and off abruptly with the ramp.
    """
    if not f_rf > frame.omega:
        raise GeometryError(f"rf at {f_rf} MHz is not blue-detuned from the {frame.omega} MHz splitting")
    low, high = sorted((b_from, b_to))
    inside = [b for b in rf_induced_crossings(frame, f_rf) if low < b < high]
    if len(inside) != 1:
        raise GeometryError(
            f"ramp {b_from:.6g} -> {b_to:.6g} G contains {len(inside)} rf-induced crossings, expected one"
        )
    rf = RfDrive(amplitude_g=b_rf, frequency_mhz=f_rf, phase_rad=phase_rad)
    switch_off_us = 0.0 if rise_time_us is None else switch_off_time_us(frame, b_rf, f_rf, b_to, rise_time_us)
    segments = []
    if b_initial is not None and b_initial != b_from:
        segments.append(RampSegment.ramp(b_initial, b_from, ramp_speed))
    segments.extend(atac_segments(rf, b_from, b_to, ramp_speed, rise_time_us, switch_off_us))
    return PulseSchedule.from_segments(segments)


def _transfer(frame, schedule, state, start_branch, rabi, tol, frame_mode, lifetime_ms) -> TransferResult:
    trace = propagate(state, frame, schedule, tol, frame_mode=frame_mode)
    efficiency = trace.final.branch_population(frame, schedule.b_final, other_branch(start_branch))
    survival = 1.0 if lifetime_ms is None else math.exp(-schedule.duration_ms / lifetime_ms)
    return TransferResult(
        efficiency=efficiency * survival,
        trace=trace,
        schedule=schedule,
        start_branch=start_branch,
        rabi_frequency=rabi,
        survival=survival,
    )


def atac_transfer(
    frame: CrossingFrame,
    b_rf: float,
    f_rf: float,
    b_from: float,
    b_to: float,
    ramp_speed: float,
    *,
    b_initial: float | None = None,
    start_branch: str = UPPER,
    rise_time_us: float | None = DEFAULT_RISE_TIME_US,
    frame_mode: str | None = None,
    tol: float | None = None,
    lifetime_ms: float | None = None,
) -> TransferResult:
    """Ramp from ``b_from`` to ``b_to`` with the rf on and report the transfer efficiency.

    The state starts in ``start_branch`` of the static dressed pair at ``b_initial``
    (default ``b_from``); the efficiency is the population of the other branch at
    ``b_to``, times exp(-T / lifetime) when a lifetime is given.
    """
    schedule = atac_schedule(
        frame, b_rf, f_rf, b_from, b_to, ramp_speed, b_initial=b_initial, rise_time_us=rise_time_us
    )
    b_x = next(b for b in rf_induced_crossings(frame, f_rf) if min(b_from, b_to) < b < max(b_from, b_to))
    state = QuantumState.dressed(frame, schedule.b_initial, start_branch)
    rabi = rabi_frequency(frame.at(b_x), b_rf)
    result = _transfer(frame, schedule, state, start_branch, rabi, tol, frame_mode, lifetime_ms)
    logger.info(
        "ATAC %.6g -> %.6g G at %.4g G/ms, B_rf %.4g G, f %.6g MHz: efficiency %.6f",
        b_from,
        b_to,
        ramp_speed,
        b_rf,
        f_rf,
        result.efficiency,
    )
    return result


def atac_round_trip(
    frame: CrossingFrame,
    b_rf: float,
    f_rf: float,
    b_from: float,
    b_to: float,
    ramp_speed: float,
    *,
    start_branch: str = UPPER,
    rise_time_us: float | None = DEFAULT_RISE_TIME_US,
    frame_mode: str | None = None,
    tol: float | None = None,
) -> RoundTripResult:
    """Run an ATAC ramp and then its exact reverse."""
    forward = atac_transfer(
        frame,
        b_rf,
        f_rf,
        b_from,
        b_to,
        ramp_speed,
        start_branch=start_branch,
        rise_time_us=rise_time_us,
        frame_mode=frame_mode,
        tol=tol,
    )
    schedule = forward.schedule.reversed()
    reverse = _transfer(
        frame,
        schedule,
        forward.final_state,
        other_branch(start_branch),
        forward.rabi_frequency,
        tol,
        frame_mode,
        None,
    )
    logger.info("ATAC round trip recovered %.6f of the starting branch", reverse.efficiency)
    return RoundTripResult(forward=forward, reverse=reverse)
