from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pmt.vclock import (
    DAY_END,
    TICK,
    VirtualClock,
    format_vtime,
    parse_vtime,
)


def test_day_start_maps_to_0630():
    clock = VirtualClock()
    assert clock.to_virtual(0) == 390
    assert format_vtime(clock.to_virtual(0)) == "06:30"


def test_three_real_minutes_is_one_virtual_hour():
    clock = VirtualClock()
    assert clock.to_virtual(180_000) - clock.to_virtual(0) == 60
    assert format_vtime(clock.to_virtual(180_000)) == "07:30"


def test_full_day_is_48_real_minutes():
    clock = VirtualClock()
    assert clock.day_length_real_ms() == 2_880_000
    assert format_vtime(clock.to_virtual(2_880_000)) == "22:30"


def test_to_virtual_clamps_at_day_end():
    clock = VirtualClock()
    assert clock.to_virtual(2_880_001) == 1350
    assert clock.to_virtual(10_000_000) == 1350


def test_to_real_round_trip_every_minute():
    clock = VirtualClock()
    for vtime in range(390, 1351):
        ms = clock.to_real(vtime)
        assert clock.to_virtual(ms) == vtime
        if vtime > 390:
            # one ms earlier must still read the previous minute
            assert clock.to_virtual(ms - 1) == vtime - 1


def test_to_real_examples():
    clock = VirtualClock()
    assert clock.to_real(450) == 180_000
    assert clock.to_real(390) == 0
    assert clock.to_real(1350) == 2_880_000


def test_negative_inputs_rejected():
    clock = VirtualClock()
    with pytest.raises(ValueError):
        clock.to_virtual(-1)
    with pytest.raises(ValueError):
        clock.advance(-1)
    with pytest.raises(ValueError):
        clock.to_real(389)
    with pytest.raises(ValueError):
        clock.to_real(1351)


def test_advance_single_minute():
    clock = VirtualClock()
    clock, events = clock.advance(3000)
    assert [(e.kind, e.vtime) for e in events] == [(TICK, 391)]
    assert clock.time_str == "06:31"


def test_advance_zero_is_empty():
    clock = VirtualClock()
    clock, events = clock.advance(0)
    assert events == []


def test_advance_full_day_emits_960_ticks_then_day_end():
    clock, events = VirtualClock().advance(2_880_000)
    ticks = [e for e in events if e.kind == TICK]
    assert len(ticks) == 960
    assert [e.vtime for e in ticks] == list(range(391, 1351))
    assert events[-1].kind == DAY_END
    assert events[-1].vtime == 1350
    # oracle: a loop of 1-minute advances produces the identical sequence
    loop_clock = VirtualClock()
    loop_events = []
    for _ in range(960):
        loop_clock, evs = loop_clock.advance(3000)
        loop_events.extend(evs)
    assert loop_events == events
    assert loop_clock.vtime == clock.vtime


def test_advance_after_day_end_is_noop():
    clock, _ = VirtualClock().advance(2_880_000)
    clock2, events = clock.advance(60_000)
    assert events == []
    assert clock2.vtime == 1350


def test_paused_clock_rejects_advance():
    clock = VirtualClock().pause()
    with pytest.raises(ValueError):
        clock.advance(1)
    clock = clock.resume()
    clock, events = clock.advance(3000)
    assert len(events) == 1


@settings(max_examples=200)
@given(
    a=st.integers(min_value=0, max_value=4_000_000),
    b=st.integers(min_value=0, max_value=4_000_000),
    factor=st.sampled_from([1, 2, 5, 20, 60, 2000]),
)
def test_advance_is_associative(a: int, b: int, factor: int):
    start = VirtualClock(compression_factor=factor)
    split, ev1 = start.advance(a)
    split, ev2 = split.advance(b)
    joined, ev3 = start.advance(a + b)
    assert split.vtime == joined.vtime
    assert ev1 + ev2 == ev3


@settings(max_examples=100)
@given(
    chunks=st.lists(st.integers(min_value=0, max_value=500_000), max_size=30),
    factor=st.sampled_from([1, 3, 20, 45]),
)
def test_ticks_are_gap_free_and_increasing(chunks: list[int], factor: int):
    clock = VirtualClock(compression_factor=factor)
    minutes = []
    for chunk in chunks:
        clock, events = clock.advance(chunk)
        minutes.extend(e.vtime for e in events if e.kind == TICK)
    assert minutes == list(range(391, 391 + len(minutes)))


def test_next_minute_ms():
    clock = VirtualClock()
    assert clock.next_minute_ms() == 3000
    clock, _ = clock.advance(4500)
    assert clock.next_minute_ms() == 6000
    ended, _ = clock.advance(2_880_000)
    assert ended.next_minute_ms() is None


def test_format_and_parse_round_trip():
    for minutes in (0, 390, 721, 1350, 1439):
        assert parse_vtime(format_vtime(minutes)) == minutes
    assert format_vtime(390) == "06:30"
    assert format_vtime(1350) == "22:30"
    with pytest.raises(ValueError):
        parse_vtime("25:61")
    with pytest.raises(ValueError):
        parse_vtime("noon")


def test_invalid_construction_rejected():
    with pytest.raises(ValueError):
        VirtualClock(compression_factor=0)
    with pytest.raises(ValueError):
        VirtualClock(day_start=1350, day_end=390)
