from __future__ import annotations

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pmt.taskmodel import (
    EARLY,
    EVENT_BASED,
    IRREGULAR,
    IRREGULAR_MIX,
    LATE,
    ON_TIME,
    REGULAR,
    TIME_BASED,
    CueCondition,
    DayPlan,
    PmTask,
    TaskError,
    TaskOutcome,
    build_day_plan,
    cross_validate,
    due_reminders,
    evaluate_event_based,
    evaluate_time_based,
    load_default_catalog,
)
from pmt.world import load_default_world


def tb_task(designated: int = 720, task_id: str = "t1") -> PmTask:
    return PmTask(
        id=task_id,
        description="I will do the noon task",
        cue_type=TIME_BASED,
        regularity=REGULAR,
        target_object="flower_pot",
        target_action="water_plants",
        designated_time=designated,
    )


def eb_task(task_id: str = "e1", presented_at: int | None = None) -> PmTask:
    return PmTask(
        id=task_id,
        description="I will refill the shampoo when taking a bath",
        cue_type=EVENT_BASED,
        regularity=IRREGULAR,
        target_object="bath",
        target_action="refill_shampoo",
        cue=CueCondition("activity", "take_bath"),
        presented_at=presented_at,
    )


class TestWindow:
    def test_boundaries_inclusive(self):
        task = tb_task(720)  # 12:00
        assert evaluate_time_based(task, 705) == ON_TIME   # 11:45
        assert evaluate_time_based(task, 730) == ON_TIME   # 12:10
        assert evaluate_time_based(task, 704) == EARLY     # 11:44
        assert evaluate_time_based(task, 731) == LATE      # 12:11

    def test_exhaustive_day_sweep(self):
        task = tb_task(720)
        for minute in range(390, 1351):
            status = evaluate_time_based(task, minute)
            if 705 <= minute <= 730:
                assert status == ON_TIME
            elif minute < 705:
                assert status == EARLY
            else:
                assert status == LATE

    def test_monotone_in_execution_time(self):
        task = tb_task(600)
        order = {EARLY: 0, ON_TIME: 1, LATE: 2}
        ranks = [
            order[evaluate_time_based(task, m)] for m in range(390, 1351)
        ]
        assert ranks == sorted(ranks)

    def test_wrong_cue_type_rejected(self):
        with pytest.raises(TaskError):
            evaluate_time_based(eb_task(), 720)
        with pytest.raises(TaskError):
            evaluate_event_based(tb_task(), 720, 390)


class TestEventScoring:
    def test_completion_counts(self):
        assert evaluate_event_based(eb_task(), 1349, 390)
        assert evaluate_event_based(eb_task(), 390, 390)

    def test_never_executed_does_not_count(self):
        assert not evaluate_event_based(eb_task(), None, 390)

    def test_execution_before_presentation_does_not_count(self):
        assert not evaluate_event_based(eb_task(presented_at=720), 600, 720)


class TestReminders:
    def test_fires_once_at_window_plus_eleven(self):
        task = tb_task(720)
        assert due_reminders([task], set(), 730) == []
        assert due_reminders([task], set(), 731) == ["t1"]
        assert due_reminders([task], set(), 732) == []

    def test_executed_task_not_reminded(self):
        task = tb_task(720)
        assert due_reminders([task], {"t1"}, 731) == []

    def test_event_based_never_reminded(self):
        for minute in range(390, 1351):
            assert due_reminders([eb_task()], set(), minute) == []


class TestOutcome:
    def test_execution_before_presentation_rejected(self):
        with pytest.raises(TaskError):
            TaskOutcome("t1", ON_TIME, remembered_at=720, executed_at=700,
                        achieved=True)

    def test_unknown_status_rejected(self):
        with pytest.raises(TaskError):
            TaskOutcome("t1", "heroic", 390, 400, True)


class TestTaskValidation:
    def test_time_based_requires_designated_time(self):
        with pytest.raises(TaskError):
            PmTask(
                id="x", description="d", cue_type=TIME_BASED,
                regularity=REGULAR, target_object="tv",
                target_action="watch_news",
            )

    def test_event_based_requires_cue(self):
        with pytest.raises(TaskError):
            PmTask(
                id="x", description="d", cue_type=EVENT_BASED,
                regularity=REGULAR, target_object="tv",
                target_action="watch_news",
            )


@pytest.fixture(scope="module")
def catalog():
    return load_default_catalog()


class TestDayPlan:
    def test_level_counts(self, catalog):
        # denominators 7, 8, 9, 10 across the four levels
        for level, total in [(1, 7), (2, 8), (3, 9), (4, 10)]:
            plan = build_day_plan(level, catalog, random.Random(1),
                                  session=level + 4)
            assert len(plan.tasks) == total
            regular = [t for t in plan.tasks if t.regularity == REGULAR]
            assert len(regular) == 5

    def test_level_4_mix(self, catalog):
        plan = build_day_plan(4, catalog, random.Random(1), session=8)
        irregular = [t for t in plan.tasks if t.regularity == IRREGULAR]
        tb = [t for t in irregular if t.cue_type == TIME_BASED]
        assert (len(tb), len(irregular) - len(tb)) == (3, 2)

    def test_same_seed_same_plan(self, catalog):
        a = build_day_plan(3, catalog, random.Random(42), session=7)
        b = build_day_plan(3, catalog, random.Random(42), session=7)
        assert a == b

    def test_regulars_identical_across_levels(self, catalog):
        plans = [
            build_day_plan(level, catalog, random.Random(9), session=level + 4)
            for level in (1, 2, 3, 4)
        ]
        rosters = {
            tuple(t.id for t in plan.tasks if t.regularity == REGULAR)
            for plan in plans
        }
        assert len(rosters) == 1

    def test_session_pins_published_event_tasks(self, catalog):
        for session, expected in [(5, {"er1"}), (6, {"er2"}),
                                  (7, {"er3", "er4"}), (8, {"er5", "er6"})]:
            plan = build_day_plan(session - 4, catalog, random.Random(0),
                                  session=session)
            drawn = {
                t.id for t in plan.tasks
                if t.regularity == IRREGULAR and t.cue_type == EVENT_BASED
            }
            assert drawn == expected

    def test_irregulars_drawn_without_replacement(self, catalog):
        for seed in range(20):
            plan = build_day_plan(4, catalog, random.Random(seed), session=8)
            ids = [t.id for t in plan.tasks]
            assert len(ids) == len(set(ids))

    def test_time_spacing_invariant(self, catalog):
        for seed in range(30):
            for level in (1, 2, 3, 4):
                plan = build_day_plan(level, catalog, random.Random(seed),
                                      session=level + 4)
                times = sorted(
                    t.designated_time for t in plan.time_based
                )
                assert all(b - a >= 60 for a, b in zip(times, times[1:]))

    def test_windows_never_overlap(self, catalog):
        # follows from 60-minute spacing and the 26-minute window
        for seed in range(10):
            plan = build_day_plan(4, catalog, random.Random(seed), session=8)
            windows = sorted(t.window() for t in plan.time_based)
            for (_, high), (low, _) in zip(windows, windows[1:]):
                assert high < low

    def test_insufficient_catalog_rejected(self, catalog):
        from pmt.taskmodel import TaskCatalog

        thin = TaskCatalog(
            tuple(t for t in catalog.tasks if t.regularity == REGULAR)
        )
        with pytest.raises(TaskError):
            build_day_plan(1, thin, random.Random(0))

    def test_plan_invariant_rejects_close_times(self, catalog):
        tasks = [t for t in catalog.tasks if t.regularity == REGULAR]
        crowded = PmTask(
            id="crowd", description="d", cue_type=TIME_BASED,
            regularity=IRREGULAR, target_object="tv",
            target_action="watch_news", designated_time=430,
        )
        bad = tasks + [
            crowded,
            eb_task("e_fill", presented_at=None),
        ]
        with pytest.raises(TaskError, match="closer than"):
            DayPlan(session_level=1, tasks=tuple(bad))


@settings(max_examples=60)
@given(
    designated=st.integers(min_value=405, max_value=1340),
    offset=st.integers(min_value=-60, max_value=60),
)
def test_window_membership_matches_bounds(designated: int, offset: int):
    task = tb_task(designated)
    executed = designated + offset
    status = evaluate_time_based(task, executed)
    inside = -15 <= offset <= 10
    assert (status == ON_TIME) == inside


class TestCrossValidation:
    def test_default_content_cross_validates(self):
        cross_validate(load_default_catalog(), load_default_world())

    def test_unknown_target_rejected(self):
        world = load_default_world()
        task = PmTask(
            id="x", description="d", cue_type=TIME_BASED, regularity=REGULAR,
            target_object="hoverboard", target_action="ride",
            designated_time=720,
        )
        from pmt.taskmodel import TaskCatalog

        with pytest.raises(Exception, match="hoverboard"):
            cross_validate(TaskCatalog((task,)), world)

    def test_unsupported_action_rejected(self):
        world = load_default_world()
        task = PmTask(
            id="x", description="d", cue_type=TIME_BASED, regularity=REGULAR,
            target_object="tv", target_action="asqueeze",
            designated_time=720,
        )
        from pmt.taskmodel import TaskCatalog

        with pytest.raises(TaskError, match="asqueeze"):
            cross_validate(TaskCatalog((task,)), world)

    def test_unknown_cue_ref_rejected(self):
        world = load_default_world()
        task = PmTask(
            id="x", description="d", cue_type=EVENT_BASED, regularity=REGULAR,
            target_object="tv", target_action="watch_news",
            cue=CueCondition("npc_encounter", "npc_nobody"),
        )
        from pmt.taskmodel import TaskCatalog

        with pytest.raises(TaskError, match="npc_nobody"):
            cross_validate(TaskCatalog((task,)), world)

    def test_foil_shortage_rejected(self):
        world = load_default_world()
        # three distinct tasks aimed at the ATM leave only 0 foils
        tasks = [
            PmTask(
                id=f"x{i}", description="d", cue_type=TIME_BASED,
                regularity=IRREGULAR, target_object="atm",
                target_action=action, designated_time=600 + 60 * i,
            )
            for i, action in enumerate(
                ["withdraw_money", "deposit_money", "check_balance"]
            )
        ]
        from pmt.taskmodel import TaskCatalog

        with pytest.raises(TaskError, match="foil"):
            cross_validate(TaskCatalog(tuple(tasks)), world)


def test_irregular_counts_non_decreasing():
    totals = [sum(IRREGULAR_MIX[level]) for level in (1, 2, 3, 4)]
    assert totals == [2, 3, 4, 5]
    assert totals == sorted(totals)
