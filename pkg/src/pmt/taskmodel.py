"""PM task definitions, day-plan construction, and outcome evaluation.

Tasks fall in a four-way taxonomy: time-based vs event-based cue, regular
(repeats every session) vs irregular (appears in one session). A day plan
always carries the five regular tasks plus a level-dependent number of
irregular ones. Time-based execution is scored against the acceptance
window [designated - 15, designated + 10], inclusive; event-based
execution is scored on completion alone.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from pathlib import Path

from .vclock import DEFAULT_DAY_END, DEFAULT_DAY_START, parse_vtime
from .world import World

TIME_BASED = "time_based"
EVENT_BASED = "event_based"
REGULAR = "regular"
IRREGULAR = "irregular"

WINDOW_BEFORE = 15
WINDOW_AFTER = 10
MIN_TIME_SPACING = 60

ON_TIME = "on_time"
EARLY = "early"
LATE = "late"
LATE_AFTER_REMINDER = "late_after_reminder"
WRONG_ACTION_THEN_CORRECT = "wrong_action_then_correct"
MISSED = "missed"
STATUSES = (ON_TIME, EARLY, LATE_AFTER_REMINDER, WRONG_ACTION_THEN_CORRECT, MISSED)

CUE_NPC_ENCOUNTER = "npc_encounter"
CUE_LOCATION_ENTER = "location_enter"
CUE_ACTIVITY = "activity"
CUE_OBJECT_PROXIMITY = "object_proximity"
CUE_KINDS = (
    CUE_NPC_ENCOUNTER,
    CUE_LOCATION_ENTER,
    CUE_ACTIVITY,
    CUE_OBJECT_PROXIMITY,
)

# Irregular task counts per difficulty level, split (time-based, event-based).
IRREGULAR_MIX = {1: (1, 1), 2: (2, 1), 3: (2, 2), 4: (3, 2)}

REMINDER_TEXT = "Oops, it's time for your scheduled task."


class TaskError(ValueError):
    pass


@dataclass(frozen=True, slots=True)
class CueCondition:
    kind: str
    ref: str

    def __post_init__(self) -> None:
        if self.kind not in CUE_KINDS:
            raise TaskError(f"unknown cue kind {self.kind!r}")


@dataclass(frozen=True, slots=True)
class PmTask:
    id: str
    description: str
    cue_type: str
    regularity: str
    target_object: str
    target_action: str
    designated_time: int | None = None     # time-based only
    cue: CueCondition | None = None        # event-based only
    presented_at: int | None = None        # None = presented at briefing
    session: int | None = None             # pin an irregular task to a session

    def __post_init__(self) -> None:
        if self.cue_type not in (TIME_BASED, EVENT_BASED):
            raise TaskError(f"{self.id}: unknown cue type {self.cue_type!r}")
        if self.regularity not in (REGULAR, IRREGULAR):
            raise TaskError(f"{self.id}: unknown regularity {self.regularity!r}")
        if self.cue_type == TIME_BASED and self.designated_time is None:
            raise TaskError(f"{self.id}: time-based task needs designated_time")
        if self.cue_type == EVENT_BASED and self.cue is None:
            raise TaskError(f"{self.id}: event-based task needs a cue")
        if self.cue_type == TIME_BASED and self.cue is not None:
            raise TaskError(f"{self.id}: time-based task cannot carry a cue")

    @property
    def at_briefing(self) -> bool:
        return self.presented_at is None

    def window(self) -> tuple[int, int]:
        if self.designated_time is None:
            raise TaskError(f"{self.id} has no acceptance window")
        return (
            self.designated_time - WINDOW_BEFORE,
            self.designated_time + WINDOW_AFTER,
        )


@dataclass(frozen=True, slots=True)
class TaskOutcome:
    task_id: str
    status: str
    remembered_at: int
    executed_at: int | None
    achieved: bool

    def __post_init__(self) -> None:
        if self.status not in STATUSES:
            raise TaskError(f"unknown outcome status {self.status!r}")
        if self.executed_at is not None and self.executed_at < self.remembered_at:
            raise TaskError(
                f"{self.task_id}: executed at {self.executed_at} before "
                f"remembered at {self.remembered_at}"
            )


def evaluate_time_based(task: PmTask, executed_at: int) -> str:
    """Classify an execution minute as early, on_time, or late."""
    if task.cue_type != TIME_BASED:
        raise TaskError(f"{task.id} is not time-based")
    low, high = task.window()
    if executed_at < low:
        return EARLY
    if executed_at > high:
        return LATE
    return ON_TIME


def evaluate_event_based(
    task: PmTask, executed_at: int | None, presented_at: int
) -> bool:
    """Completion-only scoring: done any time after presentation counts."""
    if task.cue_type != EVENT_BASED:
        raise TaskError(f"{task.id} is not event-based")
    return executed_at is not None and executed_at >= presented_at


def due_reminders(
    tasks: list[PmTask] | tuple[PmTask, ...],
    executed_task_ids: set[str],
    vtime: int,
) -> list[str]:
    """Task ids whose acceptance window elapsed exactly this minute.

    Fires once per task, at the first minute past the window, and only
    while the task is unexecuted. Event-based tasks are never reminded.
    """
    due = []
    for task in tasks:
        if task.cue_type != TIME_BASED or task.id in executed_task_ids:
            continue
        if vtime == task.designated_time + WINDOW_AFTER + 1:
            due.append(task.id)
    return due


@dataclass(frozen=True, slots=True)
class DayPlan:
    session_level: int
    tasks: tuple[PmTask, ...]

    def __post_init__(self) -> None:
        if not 1 <= self.session_level <= 4:
            raise TaskError(f"level {self.session_level} outside 1..4")
        regular = [t for t in self.tasks if t.regularity == REGULAR]
        irregular = [t for t in self.tasks if t.regularity == IRREGULAR]
        reg_tb = sum(1 for t in regular if t.cue_type == TIME_BASED)
        reg_eb = len(regular) - reg_tb
        if (reg_tb, reg_eb) != (2, 3):
            raise TaskError(
                f"plan needs 2 time-based + 3 event-based regular tasks, "
                f"got {reg_tb}+{reg_eb}"
            )
        want_tb, want_eb = IRREGULAR_MIX[self.session_level]
        irr_tb = sum(1 for t in irregular if t.cue_type == TIME_BASED)
        irr_eb = len(irregular) - irr_tb
        if (irr_tb, irr_eb) != (want_tb, want_eb):
            raise TaskError(
                f"level {self.session_level} needs {want_tb}+{want_eb} "
                f"irregular tasks, got {irr_tb}+{irr_eb}"
            )
        times = sorted(
            t.designated_time for t in self.tasks if t.cue_type == TIME_BASED
        )
        for a, b in zip(times, times[1:]):
            if b - a < MIN_TIME_SPACING:
                raise TaskError(
                    f"designated times {a} and {b} closer than "
                    f"{MIN_TIME_SPACING} virtual minutes"
                )

    @property
    def time_based(self) -> tuple[PmTask, ...]:
        return tuple(t for t in self.tasks if t.cue_type == TIME_BASED)

    @property
    def event_based(self) -> tuple[PmTask, ...]:
        return tuple(t for t in self.tasks if t.cue_type == EVENT_BASED)

    def task(self, task_id: str) -> PmTask:
        for t in self.tasks:
            if t.id == task_id:
                return t
        raise TaskError(f"no task {task_id!r} in plan")


@dataclass(frozen=True, slots=True)
class TaskCatalog:
    tasks: tuple[PmTask, ...]

    def __post_init__(self) -> None:
        seen: set[str] = set()
        for task in self.tasks:
            if task.id in seen:
                raise TaskError(f"duplicate task id {task.id!r}")
            seen.add(task.id)

    def select(self, regularity: str, cue_type: str) -> list[PmTask]:
        return [
            t for t in self.tasks
            if t.regularity == regularity and t.cue_type == cue_type
        ]

    @classmethod
    def from_dict(cls, doc: dict) -> "TaskCatalog":
        tasks = []
        for entry in doc["tasks"]:
            cue = None
            if "cue" in entry:
                cue = CueCondition(entry["cue"]["kind"], entry["cue"]["ref"])
            tasks.append(
                PmTask(
                    id=entry["id"],
                    description=entry["description"],
                    cue_type=entry["cue_type"],
                    regularity=entry["regularity"],
                    target_object=entry["target"],
                    target_action=entry["action"],
                    designated_time=_opt_minute(entry.get("designated_time")),
                    cue=cue,
                    presented_at=_opt_minute(entry.get("presented_at")),
                    session=entry.get("session"),
                )
            )
        return cls(tuple(tasks))

    @classmethod
    def load(cls, path: str | Path) -> "TaskCatalog":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


def _opt_minute(value: int | str | None) -> int | None:
    if value is None:
        return None
    if isinstance(value, int):
        return value
    if value.lower() == "before":
        return None
    return parse_vtime(value)


def cross_validate(catalog: TaskCatalog, world: World) -> None:
    """Check every catalog reference against the world.

    Rules: targets resolve to an object or character; a target with a
    choice menu lists each task's action as a distinct option and keeps
    at least two options free as foils; cue references exist.
    """
    per_target: dict[str, list[PmTask]] = {}
    for task in catalog.tasks:
        target = world.interaction_target(task.target_object)
        if task.target_action not in target.supported_actions:
            raise TaskError(
                f"{task.id}: target {task.target_object!r} does not "
                f"support action {task.target_action!r}"
            )
        per_target.setdefault(task.target_object, []).append(task)
        if task.designated_time is not None and not (
            DEFAULT_DAY_START <= task.designated_time <= DEFAULT_DAY_END
        ):
            raise TaskError(f"{task.id}: designated time outside the day")
        if task.cue is not None:
            _check_cue(task, world)
    for target_id, tasks in per_target.items():
        target = world.interaction_target(target_id)
        if target.choice_options is None:
            continue
        actions = [t.target_action for t in tasks]
        if len(set(actions)) != len(actions):
            raise TaskError(
                f"target {target_id!r}: tasks share a choice option"
            )
        foils = set(target.choice_options) - set(actions)
        if len(foils) < 2:
            raise TaskError(
                f"target {target_id!r}: needs at least 2 foil options, "
                f"has {len(foils)}"
            )


def _check_cue(task: PmTask, world: World) -> None:
    cue = task.cue
    assert cue is not None
    known: bool
    match cue.kind:
        case "npc_encounter":
            known = cue.ref in world.npcs
        case "location_enter":
            known = cue.ref in world.locations
        case "activity":
            known = cue.ref in world.action_ids()
        case "object_proximity":
            known = cue.ref in world.objects
        case _:
            known = False
    if not known:
        raise TaskError(
            f"{task.id}: cue {cue.kind} references unknown id {cue.ref!r}"
        )


def build_day_plan(
    level: int,
    catalog: TaskCatalog,
    rng: random.Random,
    session: int | None = None,
) -> DayPlan:
    """Assemble a day's tasks: all regulars plus drawn irregulars.

    Irregular event tasks pinned to the given session are used as-is
    (the shipped catalog pins the six published ones); any remaining
    slots are drawn without replacement with the provided generator, so
    plans are reproducible per seed.
    """
    if not 1 <= level <= 4:
        raise TaskError(f"level {level} outside 1..4")
    regular = catalog.select(REGULAR, TIME_BASED) + catalog.select(
        REGULAR, EVENT_BASED
    )
    want_tb, want_eb = IRREGULAR_MIX[level]
    chosen_tb = _draw(
        catalog.select(IRREGULAR, TIME_BASED), want_tb, session, rng, "time-based"
    )
    chosen_eb = _draw(
        catalog.select(IRREGULAR, EVENT_BASED), want_eb, session, rng, "event-based"
    )
    return DayPlan(
        session_level=level,
        tasks=tuple(regular + chosen_tb + chosen_eb),
    )


def _draw(
    pool: list[PmTask],
    count: int,
    session: int | None,
    rng: random.Random,
    label: str,
) -> list[PmTask]:
    pinned = [t for t in pool if session is not None and t.session == session]
    if len(pinned) > count:
        raise TaskError(
            f"session {session} pins {len(pinned)} {label} irregular tasks, "
            f"level allows {count}"
        )
    # Tasks pinned to other sessions never float into this one.
    floating = [t for t in pool if t.session is None]
    need = count - len(pinned)
    if len(floating) < need:
        raise TaskError(
            f"catalog has {len(floating)} undated {label} irregular tasks, "
            f"need {need}"
        )
    return pinned + rng.sample(floating, need)


def default_catalog_path() -> Path:
    return Path(__file__).parent / "content" / "default.catalog.json"


def load_default_catalog() -> TaskCatalog:
    return TaskCatalog.load(default_catalog_path())
