"""Virtual clock: maps real elapsed milliseconds to a compressed virtual day.

The default day runs 06:30 to 22:30 virtual time at a 20x compression
factor, so one virtual hour passes every three real minutes and the whole
day takes exactly 48 real minutes. All game logic runs on whole virtual
minutes; sub-minute real time is kept only so clients can interpolate.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from fractions import Fraction
from math import ceil, floor

DEFAULT_FACTOR = 20
DEFAULT_DAY_START = 390   # 06:30
DEFAULT_DAY_END = 1350    # 22:30

TICK = "tick"
DAY_END = "day_end"


def format_vtime(minutes: int) -> str:
    """Render minutes-from-midnight as HH:MM."""
    if not 0 <= minutes < 1440:
        raise ValueError(f"minute {minutes} outside 0..1439")
    return f"{minutes // 60:02d}:{minutes % 60:02d}"


def parse_vtime(text: str) -> int:
    hh, _, mm = text.partition(":")
    if not (hh.isdigit() and mm.isdigit()):
        raise ValueError(f"bad time {text!r}, expected HH:MM")
    minutes = int(hh) * 60 + int(mm)
    if not 0 <= minutes < 1440:
        raise ValueError(f"time {text!r} outside 00:00..23:59")
    return minutes


@dataclass(frozen=True, slots=True)
class ClockEvent:
    kind: str   # TICK or DAY_END
    vtime: int


@dataclass(frozen=True, slots=True)
class VirtualClock:
    compression_factor: float = DEFAULT_FACTOR
    day_start: int = DEFAULT_DAY_START
    day_end: int = DEFAULT_DAY_END
    elapsed_real_ms: int = 0
    paused: bool = False

    def __post_init__(self) -> None:
        if self.compression_factor <= 0:
            raise ValueError("compression_factor must be positive")
        if self.day_end <= self.day_start:
            raise ValueError("day_end must be after day_start")
        if self.elapsed_real_ms < 0:
            raise ValueError("elapsed_real_ms must be non-negative")

    # Fraction keeps minute boundaries exact for any factor that is exactly
    # representable (every integer and short decimal is); float math would
    # drift at the boundaries the acceptance window depends on.
    @property
    def _factor(self) -> Fraction:
        return Fraction(self.compression_factor)

    @property
    def vtime(self) -> int:
        return self.to_virtual(self.elapsed_real_ms)

    @property
    def time_str(self) -> str:
        return format_vtime(self.vtime)

    @property
    def day_ended(self) -> bool:
        return self.vtime >= self.day_end

    def day_length_real_ms(self) -> int:
        return self.to_real(self.day_end)

    def to_virtual(self, real_ms: int) -> int:
        """Virtual minutes from midnight after real_ms of running time."""
        if real_ms < 0:
            raise ValueError("real_ms must be non-negative")
        vtime = self.day_start + floor(Fraction(real_ms) * self._factor / 60_000)
        return min(vtime, self.day_end)

    def to_real(self, vtime: int) -> int:
        """Smallest elapsed real ms at which the clock reads vtime.

        Exact inverse of to_virtual at minute granularity.
        """
        if not self.day_start <= vtime <= self.day_end:
            raise ValueError(
                f"vtime {vtime} outside day span "
                f"{self.day_start}..{self.day_end}"
            )
        return ceil(Fraction((vtime - self.day_start) * 60_000) / self._factor)

    def advance(self, delta_real_ms: int) -> tuple["VirtualClock", list[ClockEvent]]:
        """Accumulate running time, emitting one event per minute crossed.

        Reaching day_end appends a single DAY_END event; once the day has
        ended further advances are no-ops.
        """
        if delta_real_ms < 0:
            raise ValueError("delta_real_ms must be non-negative")
        if self.paused:
            raise ValueError("cannot advance a paused clock")
        before = self.vtime
        if before >= self.day_end:
            return self, []
        advanced = dataclasses.replace(
            self, elapsed_real_ms=self.elapsed_real_ms + delta_real_ms
        )
        after = advanced.vtime
        events = [ClockEvent(TICK, m) for m in range(before + 1, after + 1)]
        if after >= self.day_end:
            events.append(ClockEvent(DAY_END, self.day_end))
        return advanced, events

    def pause(self) -> "VirtualClock":
        return dataclasses.replace(self, paused=True)

    def resume(self) -> "VirtualClock":
        return dataclasses.replace(self, paused=False)

    def next_minute_ms(self) -> int | None:
        """Elapsed real ms at which the next minute begins, None after day end."""
        if self.day_ended:
            return None
        return self.to_real(self.vtime + 1)
