"""
Field ramps and rf pulses.

A schedule is a contiguous sequence of segments. Within a segment the field moves
linearly from ``b_start`` to ``b_end``; an optional rf drive adds
``amplitude * envelope(t) * cos(2 pi f t + phase)`` to the field, where ``t`` is
schedule time, i.e. the rf source is phase continuous and has phase ``phase`` at
the start of the schedule.
"""

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

from core.exceptions import InvalidScheduleError
from manifold.units import US_PER_MS

DEFAULT_RISE_TIME_US = 10.0


class EnvelopeKind(str, enum.Enum):
    RECTANGULAR = "rectangular"
    TRAPEZOID = "trapezoid"
    LINEAR = "linear"


@dataclass(frozen=True)
class Envelope:
    """Amplitude shape of an rf pulse inside its segment, values in [0, 1]."""

    kind: EnvelopeKind = EnvelopeKind.RECTANGULAR
    rise_time_us: float = DEFAULT_RISE_TIME_US
    start: float = 1.0
    end: float = 1.0

    def __post_init__(self) -> None:
        if self.rise_time_us <= 0.0:
            raise InvalidScheduleError("envelope rise time must be positive")
        if not (0.0 <= self.start <= 1.0 and 0.0 <= self.end <= 1.0):
            raise InvalidScheduleError("linear envelope fractions must lie in [0, 1]")

    @classmethod
    def rectangular(cls) -> "Envelope":
        return cls()

    @classmethod
    def trapezoid(cls, rise_time_us: float = DEFAULT_RISE_TIME_US) -> "Envelope":
        return cls(kind=EnvelopeKind.TRAPEZOID, rise_time_us=rise_time_us)

    @classmethod
    def linear(cls, start: float, end: float) -> "Envelope":
        return cls(kind=EnvelopeKind.LINEAR, start=start, end=end)

    @property
    def is_constant(self) -> bool:
        return self.kind is EnvelopeKind.RECTANGULAR or (
            self.kind is EnvelopeKind.LINEAR and self.start == self.end
        )

    def effective_rise(self, duration_us: float) -> float:
        return min(self.rise_time_us, 0.5 * duration_us)

    def value(self, t_us: float, duration_us: float) -> float:
        """Return the envelope at ``t_us`` after the segment start."""
        if self.kind is EnvelopeKind.RECTANGULAR:
            return 1.0
        if self.kind is EnvelopeKind.LINEAR:
            return self.start + (self.end - self.start) * t_us / duration_us
        rise = self.effective_rise(duration_us)
        return max(0.0, min(1.0, t_us / rise, (duration_us - t_us) / rise))

    def breakpoints(self, duration_us: float) -> list[tuple[float, float]]:
        """Return (time, value) corners of the piecewise-linear envelope."""
        if self.kind is EnvelopeKind.RECTANGULAR:
            return [(0.0, 1.0), (duration_us, 1.0)]
        if self.kind is EnvelopeKind.LINEAR:
            return [(0.0, self.start), (duration_us, self.end)]
        rise = self.effective_rise(duration_us)
        if rise == 0.5 * duration_us:
            return [(0.0, 0.0), (rise, 1.0), (duration_us, 0.0)]
        return [(0.0, 0.0), (rise, 1.0), (duration_us - rise, 1.0), (duration_us, 0.0)]

    def reversed(self) -> "Envelope":
        if self.kind is EnvelopeKind.LINEAR:
            return replace(self, start=self.end, end=self.start)
        return self


@dataclass(frozen=True)
class RfDrive:
    """Longitudinal rf field added to the bias field."""

    amplitude_g: float
    frequency_mhz: float
    phase_rad: float = 0.0
    envelope: Envelope = field(default_factory=Envelope)

    def __post_init__(self) -> None:
        if self.amplitude_g < 0.0:
            raise InvalidScheduleError(f"rf amplitude must be non-negative, got {self.amplitude_g}")
        if not self.frequency_mhz > 0.0:
            raise InvalidScheduleError(f"rf frequency must be positive, got {self.frequency_mhz}")

    @property
    def is_off(self) -> bool:
        return self.amplitude_g == 0.0


@dataclass(frozen=True)
class RampSegment:
    """Linear field ramp with an optional rf drive."""

    duration_ms: float
    b_start: float
    b_end: float
    rf: RfDrive | None = None

    def __post_init__(self) -> None:
        if not self.duration_ms > 0.0 or not math.isfinite(self.duration_ms):
            raise InvalidScheduleError(f"segment duration must be positive, got {self.duration_ms}")

    @classmethod
    def ramp(cls, b_start: float, b_end: float, speed_g_per_ms: float, rf: RfDrive | None = None) -> "RampSegment":
        """Build a segment moving at a given ramp speed."""
        if not speed_g_per_ms > 0.0:
            raise InvalidScheduleError(f"ramp speed must be positive, got {speed_g_per_ms}")
        return cls(duration_ms=abs(b_end - b_start) / speed_g_per_ms, b_start=b_start, b_end=b_end, rf=rf)

    @classmethod
    def hold(cls, b_gauss: float, duration_ms: float, rf: RfDrive | None = None) -> "RampSegment":
        return cls(duration_ms=duration_ms, b_start=b_gauss, b_end=b_gauss, rf=rf)

    @property
    def duration_us(self) -> float:
        return self.duration_ms * US_PER_MS

    @property
    def has_rf(self) -> bool:
        return self.rf is not None and not self.rf.is_off

    @property
    def ramp_speed_g_per_ms(self) -> float:
        return abs(self.b_end - self.b_start) / self.duration_ms

    def field(self, t_us: float) -> float:
        """Return the bias field ``t_us`` after the segment start."""
        if t_us >= self.duration_us:
            return self.b_end
        return self.b_start + (self.b_end - self.b_start) * (t_us / self.duration_us)

    def rf_amplitude(self, t_us: float) -> float:
        if not self.has_rf:
            return 0.0
        return self.rf.amplitude_g * self.rf.envelope.value(t_us, self.duration_us)

    def is_static(self, rotating: bool) -> bool:
        """True when the Hamiltonian is constant over the segment."""
        if self.b_start != self.b_end:
            return False
        if not self.has_rf:
            return True
        return rotating and self.rf.envelope.is_constant

    def reversed(self) -> "RampSegment":
        rf = None if self.rf is None else replace(self.rf, envelope=self.rf.envelope.reversed())
        return RampSegment(duration_ms=self.duration_ms, b_start=self.b_end, b_end=self.b_start, rf=rf)


@dataclass(frozen=True)
class PulseSchedule:
    """Contiguous sequence of segments starting at ``b_initial``."""

    segments: tuple[RampSegment, ...]
    b_initial: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "segments", tuple(self.segments))
        previous_end = self.b_initial
        for index, segment in enumerate(self.segments):
            if segment.b_start != previous_end:
                raise InvalidScheduleError(
                    f"segment {index} starts at {segment.b_start!r} G but the field is at {previous_end!r} G"
                )
            previous_end = segment.b_end

    @classmethod
    def from_segments(cls, segments: Sequence[RampSegment]) -> "PulseSchedule":
        if not segments:
            raise InvalidScheduleError("schedule needs at least one segment or an explicit initial field")
        return cls(segments=tuple(segments), b_initial=segments[0].b_start)

    @property
    def b_final(self) -> float:
        return self.segments[-1].b_end if self.segments else self.b_initial

    @property
    def duration_ms(self) -> float:
        return math.fsum(segment.duration_ms for segment in self.segments)

    @property
    def duration_us(self) -> float:
        return self.duration_ms * US_PER_MS

    def start_times_us(self) -> list[float]:
        times, elapsed = [], 0.0
        for segment in self.segments:
            times.append(elapsed)
            elapsed += segment.duration_us
        return times

    def rf_frequencies(self) -> set[float]:
        return {segment.rf.frequency_mhz for segment in self.segments if segment.has_rf}

    def field_at(self, t_us: float) -> float:
        """Return the bias field at schedule time ``t_us``."""
        for start, segment in zip(self.start_times_us(), self.segments):
            if t_us <= start + segment.duration_us:
                return segment.field(max(0.0, t_us - start))
        return self.b_final

    def then(self, *segments: RampSegment) -> "PulseSchedule":
        return PulseSchedule(segments=self.segments + tuple(segments), b_initial=self.b_initial)

    def reversed(self) -> "PulseSchedule":
        """Return the schedule played backwards, ending at ``b_initial``."""
        return PulseSchedule(
            segments=tuple(segment.reversed() for segment in reversed(self.segments)),
            b_initial=self.b_final,
        )


SCHEDULE_COLUMNS = ("time_ms", "B_gauss", "rf_amplitude_g", "rf_freq_mhz")


def schedule_rows(schedule: PulseSchedule) -> list[tuple[float, float, float, float]]:
    """Flatten a schedule into piecewise-linear breakpoints.

    Consecutive rows bound a segment in which both the field and the rf amplitude
    move linearly. A sudden change appears as two rows at the same time.
    """
    rows: list[tuple[float, float, float, float]] = []
    elapsed_ms = 0.0
    for segment in schedule.segments:
        duration_us = segment.duration_us
        if segment.has_rf:
            corners = segment.rf.envelope.breakpoints(duration_us)
            amplitude, frequency = segment.rf.amplitude_g, segment.rf.frequency_mhz
        else:
            corners, amplitude, frequency = [(0.0, 0.0), (duration_us, 0.0)], 0.0, 0.0

        for t_us, fraction in corners:
            at_end = t_us >= duration_us
            row = (
                elapsed_ms + (segment.duration_ms if at_end else t_us / US_PER_MS),
                segment.b_end if at_end else segment.field(t_us),
                amplitude * fraction,
                frequency,
            )
            if not rows or rows[-1] != row:
                rows.append(row)
        elapsed_ms += segment.duration_ms
    if not rows:
        rows.append((0.0, schedule.b_initial, 0.0, 0.0))
    return rows


def schedule_from_rows(rows: Iterable[Sequence[float]]) -> PulseSchedule:
    """Rebuild a schedule from ``schedule_rows`` output; rf phases restart at zero."""
    rows = [tuple(float(value) for value in row) for row in rows]
    if not rows:
        raise InvalidScheduleError("schedule table is empty")

    segments = []
    for (t0, b0, a0, f0), (t1, b1, a1, f1) in zip(rows, rows[1:]):
        if t1 < t0:
            raise InvalidScheduleError(f"schedule times decrease at {t1} ms")
        if t1 == t0:
            if b1 != b0:
                raise InvalidScheduleError(f"field jumps at {t0} ms")
            continue
        rf = None
        peak = max(a0, a1)
        if peak > 0.0:
            frequency = f0 if f0 > 0.0 else f1
            envelope = Envelope.rectangular() if a0 == a1 else Envelope.linear(a0 / peak, a1 / peak)
            rf = RfDrive(amplitude_g=peak, frequency_mhz=frequency, envelope=envelope)
        segments.append(RampSegment(duration_ms=t1 - t0, b_start=b0, b_end=b1, rf=rf))
    return PulseSchedule(segments=tuple(segments), b_initial=rows[0][1])
