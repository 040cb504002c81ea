"""Session state machine.

One engine instance runs one session: imagery items plus a practice day
(sessions 1 to 3), the tutorial (session 4), or a scored simulated day
(sessions 5 to 8). All inputs, clock ticks and participant commands
alike, pass through a single writer in arrival order; commands are
re-stamped to the engine's own elapsed milliseconds so a recorded
session replays to the identical record.

Feedback is errorless by construction: the only reminder text is the
configured message, wrong actions produce a neutral alert sound, and
scores are computed from achieved flags alone.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import random
from dataclasses import dataclass
from pathlib import Path
from typing import IO

from . import vit as vitmod
from .protocol import (
    CLIENT_KINDS,
    CLIENT_TO_ENGINE,
    ENGINE_TO_CLIENT,
    EventLogEntry,
    LogFile,
    LogWriter,
    ProtocolError,
    ProtocolMessage,
    read_log,
)
from .taskmodel import (
    EVENT_BASED,
    IRREGULAR,
    LATE,
    LATE_AFTER_REMINDER,
    MISSED,
    ON_TIME,
    REGULAR,
    REMINDER_TEXT,
    TIME_BASED,
    WRONG_ACTION_THEN_CORRECT,
    PmTask,
    TaskCatalog,
    TaskOutcome,
    build_day_plan,
    cross_validate,
    due_reminders,
    evaluate_time_based,
    load_default_catalog,
)
from .vclock import DAY_END, TICK, VirtualClock, format_vtime
from .vit import VitItem, VitLevelResult, WordBank, imagery_score
from .world import InteractableObject, Npc, World, WorldError, load_default_world

PHASE_VIT = "vit_plus_practice"
PHASE_TUTORIAL = "tutorial"
PHASE_VRT = "vrt"

TUTORIAL_SCRIPT = ("watch_introduction_video", "practice_regular_tasks")

DEFAULT_START_LOCATION = "bedroom"


class EngineError(ValueError):
    pass


@dataclass(frozen=True, slots=True)
class SessionPlan:
    session_number: int
    seed: int
    compression_factor: float = 20
    items_per_level: int = vitmod.DEFAULT_ITEMS_PER_LEVEL
    start_location: str = DEFAULT_START_LOCATION

    def __post_init__(self) -> None:
        if not 1 <= self.session_number <= 8:
            raise EngineError(
                f"session {self.session_number} outside the 8-session program"
            )

    @property
    def phase(self) -> str:
        if self.session_number <= 3:
            return PHASE_VIT
        if self.session_number == 4:
            return PHASE_TUTORIAL
        return PHASE_VRT

    @property
    def vit_levels(self) -> tuple[int, ...]:
        return vitmod.SESSION_VIT_LEVELS.get(self.session_number, ())

    @property
    def vrt_level(self) -> int | None:
        if self.phase == PHASE_VRT:
            return self.session_number - 4
        return None


@dataclass(frozen=True)
class SessionRecord:
    session_number: int
    phase: str
    vrt_level: int | None
    seed: int
    compression_factor: float
    scored: bool
    outcomes: tuple[TaskOutcome, ...]
    durations: dict[str, int]          # task id -> virtual seconds
    rates: dict[str, float | None]
    tallies: dict[str, tuple[int, int]]  # category -> (achieved, total)
    vit_results: tuple[VitLevelResult, ...]
    imagery: float | None
    entry_count: int
    final_elapsed_ms: int
    world_fingerprint: str
    catalog_fingerprint: str

    def to_dict(self) -> dict:
        return {
            "session_number": self.session_number,
            "phase": self.phase,
            "vrt_level": self.vrt_level,
            "seed": self.seed,
            "compression_factor": self.compression_factor,
            "scored": self.scored,
            "outcomes": [dataclasses.asdict(o) for o in self.outcomes],
            "durations": dict(self.durations),
            "rates": dict(self.rates),
            "tallies": {k: list(v) for k, v in self.tallies.items()},
            "vit_results": [dataclasses.asdict(r) for r in self.vit_results],
            "imagery": self.imagery,
            "entry_count": self.entry_count,
            "final_elapsed_ms": self.final_elapsed_ms,
            "world_fingerprint": self.world_fingerprint,
            "catalog_fingerprint": self.catalog_fingerprint,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "SessionRecord":
        return cls(
            session_number=doc["session_number"],
            phase=doc["phase"],
            vrt_level=doc["vrt_level"],
            seed=doc["seed"],
            compression_factor=doc["compression_factor"],
            scored=doc["scored"],
            outcomes=tuple(TaskOutcome(**o) for o in doc["outcomes"]),
            durations=dict(doc["durations"]),
            rates=dict(doc["rates"]),
            tallies={k: tuple(v) for k, v in doc["tallies"].items()},
            vit_results=tuple(VitLevelResult(**r) for r in doc["vit_results"]),
            imagery=doc["imagery"],
            entry_count=doc["entry_count"],
            final_elapsed_ms=doc["final_elapsed_ms"],
            world_fingerprint=doc["world_fingerprint"],
            catalog_fingerprint=doc["catalog_fingerprint"],
        )


def world_fingerprint(world: World) -> str:
    blob = json.dumps(world.raw, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:16]


def catalog_fingerprint(catalog: TaskCatalog) -> str:
    blob = json.dumps(
        [dataclasses.asdict(t) for t in catalog.tasks],
        sort_keys=True,
        separators=(",", ":"),
    )
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:16]


def wordbank_fingerprint(bank: WordBank) -> str:
    blob = json.dumps(
        [dataclasses.asdict(p) for p in bank.pairs],
        sort_keys=True,
        separators=(",", ":"),
    )
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:16]


def format_duration(vseconds: int) -> str:
    return f"{vseconds // 60:02d}:{vseconds % 60:02d}"


class SessionEngine:
    """Single-writer session core. Not thread-safe by design: the caller
    serializes advance() and submit() into one ordered stream."""

    def __init__(
        self,
        plan: SessionPlan,
        world: World | None = None,
        catalog: TaskCatalog | None = None,
        wordbank: WordBank | None = None,
        log_sink: IO[str] | None = None,
    ):
        self.plan = plan
        self.world = world if world is not None else load_default_world()
        self.catalog = (
            catalog if catalog is not None else load_default_catalog()
        )
        self.wordbank = (
            wordbank if wordbank is not None else vitmod.load_default_wordbank()
        )
        cross_validate(self.catalog, self.world)
        if plan.start_location not in self.world.locations:
            raise EngineError(f"unknown start location {plan.start_location!r}")
        self.rng = random.Random(plan.seed)
        self.clock = VirtualClock(
            compression_factor=plan.compression_factor
        ).pause()
        self.location = plan.start_location
        self.scored = plan.phase == PHASE_VRT

        self.day_tasks = self._assemble_tasks()
        self._tasks_by_id = {t.id: t for t in self.day_tasks}
        self._cue_activities = {
            t.cue.ref for t in self.day_tasks
            if t.cue is not None and t.cue.kind == "activity"
        }

        self.seq = 0
        self.entries: list[EventLogEntry] = []
        self.outbox: list[ProtocolMessage] = []
        self._writer: LogWriter | None = None
        if log_sink is not None:
            self._writer = LogWriter(log_sink, self._header_payload())

        self.presented: dict[str, int] = {}
        self.presented_ms: dict[str, int] = {}
        self.outcomes: dict[str, TaskOutcome] = {}
        self.durations: dict[str, int] = {}
        self.reminded: set[str] = set()
        self.wrong_first: set[str] = set()
        self.cue_raised: dict[str, int] = {}
        self.activities: set[str] = set()
        self.in_transit: tuple[str, int] | None = None
        self.distractor: str | None = None
        self.menu_open: str | None = None
        self.paused = False
        self.briefing_sent = False
        self.day_started = False
        self.session_ended = False
        self.record: SessionRecord | None = None

        # While a minute boundary is being processed, events are stamped
        # at that boundary, not at wherever a coarse advance() landed.
        # Without this, two runs fed different advance chunk sizes would
        # log different timestamps and replay could not be byte-faithful.
        self._stamp_real: int | None = None
        self._stamp_vtime: int | None = None

        self._vit_items: list[VitItem] = []
        self._vit_index = 0
        self._vit_counts: dict[int, list[int]] = {}
        if plan.vit_levels:
            for level in plan.vit_levels:
                items = vitmod.build_level(
                    level,
                    self.wordbank,
                    self.rng,
                    items=plan.items_per_level,
                )
                self._vit_items.extend(items)
                self._vit_counts[level] = [0, 0]  # presented, correct
        self._started = False

    # ------------------------------------------------------------------
    # plan assembly

    def _assemble_tasks(self) -> tuple[PmTask, ...]:
        regulars = self.catalog.select(REGULAR, TIME_BASED) + self.catalog.select(
            REGULAR, EVENT_BASED
        )
        match self.plan.phase:
            case "vrt":
                day_plan = build_day_plan(
                    self.plan.vrt_level,
                    self.catalog,
                    self.rng,
                    session=self.plan.session_number,
                )
                return day_plan.tasks
            case "tutorial":
                return tuple(regulars)
            case _:
                # free practice after imagery work: event-based regulars only
                return tuple(
                    t for t in regulars if t.cue_type == EVENT_BASED
                )

    def _header_payload(self) -> dict:
        import datetime

        return {
            "created_at": datetime.datetime.now(datetime.timezone.utc)
            .isoformat(timespec="seconds"),
            "session": self.plan.session_number,
            "seed": self.plan.seed,
            "compression_factor": self.plan.compression_factor,
            "items_per_level": self.plan.items_per_level,
            "start_location": self.plan.start_location,
            "world_fingerprint": world_fingerprint(self.world),
            "catalog_fingerprint": catalog_fingerprint(self.catalog),
            "wordbank_fingerprint": wordbank_fingerprint(self.wordbank),
        }

    # ------------------------------------------------------------------
    # emission

    @property
    def elapsed_ms(self) -> int:
        if self._stamp_real is not None:
            return self._stamp_real
        return self.clock.elapsed_real_ms

    @property
    def vtime(self) -> int:
        if self._stamp_vtime is not None:
            return self._stamp_vtime
        return self.clock.vtime

    def _next_seq(self) -> int:
        self.seq += 1
        return self.seq

    def _log(self, kind: str, payload: dict) -> None:
        entry = EventLogEntry(
            seq=self._next_seq(),
            real_ms=self.elapsed_ms,
            vtime=self.vtime,
            kind=kind,
            payload=payload,
        )
        self.entries.append(entry)
        if self._writer is not None:
            self._writer.append(entry)

    def _emit(self, kind: str, payload: dict) -> None:
        entry = EventLogEntry(
            seq=self._next_seq(),
            real_ms=self.elapsed_ms,
            vtime=self.vtime,
            kind=kind,
            payload=payload,
        )
        self.entries.append(entry)
        if self._writer is not None:
            self._writer.append(entry)
        self.outbox.append(
            ProtocolMessage(
                direction=ENGINE_TO_CLIENT,
                kind=kind,
                seq=entry.seq,
                payload=payload,
            )
        )

    def drain(self) -> list[ProtocolMessage]:
        out, self.outbox = self.outbox, []
        return out

    # ------------------------------------------------------------------
    # lifecycle

    def start(self) -> None:
        if self._started:
            raise EngineError("session already started")
        self._started = True
        self._emit("state_snapshot", self._snapshot())
        if self._vit_items:
            self._emit_vit_item()
        else:
            self._send_briefing()

    def _send_briefing(self) -> None:
        briefed = [t for t in self.day_tasks if t.at_briefing]
        for task in briefed:
            self.presented[task.id] = self.clock.day_start
            self.presented_ms[task.id] = 0
        payload: dict = {
            "phase": self.plan.phase,
            "scored": self.scored,
            "tasks": [self._task_payload(t) for t in briefed],
        }
        if self.plan.phase == PHASE_TUTORIAL:
            payload["script"] = list(TUTORIAL_SCRIPT)
        self.briefing_sent = True
        self._emit("task_briefing", payload)
        # cue contexts that are already true count as raised immediately
        self._check_state_cues()

    def _task_payload(self, task: PmTask) -> dict:
        doc = {
            "id": task.id,
            "description": task.description,
            "cue_type": task.cue_type,
            "regularity": task.regularity,
            "target": task.target_object,
            "action": task.target_action,
        }
        if task.designated_time is not None:
            doc["designated_time"] = task.designated_time
            doc["designated_time_str"] = format_vtime(task.designated_time)
        if task.cue is not None:
            doc["cue"] = {"kind": task.cue.kind, "ref": task.cue.ref}
        return doc

    def _snapshot(self) -> dict:
        menu = None
        if self.menu_open is not None:
            target = self.world.interaction_target(self.menu_open)
            menu = {
                "target": self.menu_open,
                "options": list(target.choice_options or ()),
            }
        return {
            "session": self.plan.session_number,
            "phase": self.plan.phase,
            "vrt_level": self.plan.vrt_level,
            "scored": self.scored,
            "vtime": self.vtime,
            "time_str": self.clock.time_str,
            "location": self.location,
            "area": self.world.locations[self.location].area_id,
            "paused": self.paused,
            "day_started": self.day_started,
            "briefing_pending": self.briefing_sent and not self.day_started,
            "in_transit": (
                {"to": self.in_transit[0], "arrival_vtime": self.in_transit[1]}
                if self.in_transit
                else None
            ),
            "distractor": self.distractor,
            "menu": menu,
            "compression_factor": self.plan.compression_factor,
            "day_start": self.clock.day_start,
            "day_end": self.clock.day_end,
        }

    # ------------------------------------------------------------------
    # time

    def advance(self, delta_real_ms: int) -> None:
        """Advance running time. Frozen during pauses and outside the day."""
        if delta_real_ms < 0:
            raise EngineError("cannot advance backwards")
        if (
            not self.day_started
            or self.paused
            or self.session_ended
        ):
            return
        self.clock, events = self.clock.advance(delta_real_ms)
        try:
            for event in events:
                self._stamp_vtime = event.vtime
                self._stamp_real = self.clock.to_real(event.vtime)
                if event.kind == TICK:
                    self._process_minute(event.vtime)
                elif event.kind == DAY_END:
                    self._finish_day()
        finally:
            self._stamp_vtime = None
            self._stamp_real = None

    def advance_to(self, elapsed_real_ms: int) -> None:
        delta = elapsed_real_ms - self.elapsed_ms
        if delta > 0:
            self.advance(delta)

    def _process_minute(self, minute: int) -> None:
        # Tick first so every later event this minute renders on an
        # up-to-date clock. But the clock has already moved past the
        # boundary; stamp the tick at the boundary it announces.
        self._emit("clock_tick", {"vtime": minute})
        if self.in_transit is not None and minute >= self.in_transit[1]:
            destination = self.in_transit[0]
            self.in_transit = None
            self.location = destination
            self._emit("state_snapshot", self._snapshot())
        for task in self.day_tasks:
            if task.presented_at == minute and task.id not in self.presented:
                self.presented[task.id] = minute
                self.presented_ms[task.id] = self.clock.to_real(minute)
                payload = {"task": self._task_payload(task)}
                if self.distractor is not None:
                    payload["interrupted_distractor"] = self.distractor
                    self.distractor = None
                self._emit("task_popup", payload)
        self._check_state_cues()
        for task_id in due_reminders(
            list(self._active_tasks()), set(self.outcomes), minute
        ):
            if task_id in self.reminded:
                continue
            self.reminded.add(task_id)
            payload = {"task_id": task_id, "text": REMINDER_TEXT}
            if self.distractor is not None:
                payload["interrupted_distractor"] = self.distractor
                self.distractor = None
            self._emit("reminder", payload)

    def _active_tasks(self):
        for task in self.day_tasks:
            if task.id in self.presented and task.id not in self.outcomes:
                yield task

    def _check_state_cues(self) -> None:
        """Raise cues whose context currently holds (place, person, thing)."""
        minute = self.vtime
        for task in self._active_tasks():
            cue = task.cue
            if cue is None or task.id in self.cue_raised:
                continue
            match cue.kind:
                case "location_enter":
                    active = self.location == cue.ref
                case "npc_encounter":
                    npc = self.world.npcs[cue.ref]
                    active = npc.location_at(minute) == self.location
                case "object_proximity":
                    obj = self.world.objects[cue.ref]
                    active = obj.location_id == self.location
                case _:
                    active = False
            if active:
                self.cue_raised[task.id] = minute
                self._log("cue_raised", {"task_id": task.id})

    def _raise_activity_cues(self, action: str) -> None:
        for task in self._active_tasks():
            cue = task.cue
            if (
                cue is not None
                and cue.kind == "activity"
                and cue.ref == action
                and task.id not in self.cue_raised
            ):
                self.cue_raised[task.id] = self.vtime
                self._log("cue_raised", {"task_id": task.id})

    # ------------------------------------------------------------------
    # commands

    def submit(self, message: ProtocolMessage) -> None:
        """Apply one client command at the current engine time."""
        if message.direction != CLIENT_TO_ENGINE:
            raise EngineError("submit expects a client command")
        if not self._started:
            raise EngineError("session not started")
        if self.session_ended:
            # the log is sealed; the caller decides how to turn this away
            raise EngineError("session has ended")
        self._log(message.kind, message.payload)
        if self.paused and message.kind not in ("resume", "join"):
            self._error("paused", "The session is paused.")
            return
        handler = getattr(self, f"_cmd_{message.kind}")
        handler(message.payload)

    def _error(self, code: str, text: str) -> None:
        self._emit("error", {"code": code, "text": text})

    def _cmd_join(self, payload: dict) -> None:
        self._emit("state_snapshot", self._snapshot())

    def _cmd_ack_briefing(self, payload: dict) -> None:
        if not self.briefing_sent:
            self._error("no_briefing", "There is no briefing waiting.")
            return
        if self.day_started:
            self._error("already_running", "The day is already underway.")
            return
        self.day_started = True
        self.clock = self.clock.resume()
        self._emit("state_snapshot", self._snapshot())

    def _require_day(self) -> bool:
        if not self.day_started:
            self._error("day_not_started", "The day has not begun yet.")
            return False
        return True

    def _cmd_move(self, payload: dict) -> None:
        if not self._require_day():
            return
        destination = payload.get("to")
        if destination not in self.world.locations:
            self._error("unknown_location", f"No place called {destination!r}.")
            return
        if self.in_transit is not None:
            self._error("in_transit", "Already on the way somewhere.")
            return
        self.menu_open = None
        if self.distractor is not None:
            self.distractor = None
        travel = self.world.travel_time(self.location, destination)
        if travel == 0:
            self._emit("state_snapshot", self._snapshot())
            return
        self.in_transit = (destination, self.vtime + travel)
        self._emit("state_snapshot", self._snapshot())

    def _resolve_target(self, target_id: str) -> InteractableObject | Npc | None:
        try:
            target = self.world.interaction_target(target_id)
        except WorldError:
            self._error("unknown_object", f"Nothing called {target_id!r} exists.")
            return None
        if self.in_transit is not None:
            self._error("in_transit", "Still on the way; nothing in reach.")
            return None
        if isinstance(target, Npc):
            if target.location_at(self.vtime) != self.location:
                self._error(
                    "not_present", f"{target.label} is not here right now."
                )
                return None
        elif target.location_id != self.location:
            self._error(
                "not_reachable", f"{target.label} is not within reach."
            )
            return None
        return target

    def _stray_from_open_task_menu(self, target_id: str) -> bool:
        """True when touching target_id walks away from a task's open menu."""
        if self.menu_open is None or self.menu_open == target_id:
            return False
        return any(
            t.target_object == self.menu_open for t in self._active_tasks()
        )

    def _cmd_interact(self, payload: dict) -> None:
        if not self._require_day():
            return
        target = self._resolve_target(payload.get("object", ""))
        if target is None:
            return
        if self._stray_from_open_task_menu(target.id):
            self.menu_open = None
            self._emit("alert_sound", {})
            return
        action = payload.get("action")
        if action is None and target.choice_options is not None:
            # touching a choice object opens its menu
            self.menu_open = target.id
            self._emit("state_snapshot", self._snapshot())
            return
        if action is None:
            if len(target.supported_actions) != 1:
                self._error(
                    "action_required",
                    f"{target.label} offers several actions; pick one.",
                )
                return
            action = target.supported_actions[0]
        if action not in target.supported_actions:
            self._error(
                "unknown_action",
                f"{target.label} does not offer {action!r}.",
            )
            return
        self._execute_action(target, action)

    def _cmd_select_choice(self, payload: dict) -> None:
        if not self._require_day():
            return
        target = self._resolve_target(payload.get("object", ""))
        if target is None:
            return
        if target.choice_options is None:
            self._error(
                "no_choices", f"{target.label} offers no choice menu."
            )
            return
        choice = payload.get("choice")
        if choice not in target.choice_options:
            self._error(
                "unknown_choice",
                f"{target.label} does not list {choice!r}.",
            )
            return
        self._execute_action(target, choice)

    def _execute_action(self, target: InteractableObject | Npc, action: str) -> None:
        if self._stray_from_open_task_menu(target.id):
            self.menu_open = None
            self._emit("alert_sound", {})
            return
        matched = None
        for task in self._active_tasks():
            if task.target_object == target.id and task.target_action == action:
                matched = task
                break
        if matched is not None:
            self.menu_open = None
            self._resolve_task(matched)
            return
        targeting = [
            t for t in self._active_tasks() if t.target_object == target.id
        ]
        if targeting and action not in self._cue_activities:
            # a stray pick on a task's own object: neutral alert, menu
            # stays open, nothing is consumed or decremented
            for task in targeting:
                self.wrong_first.add(task.id)
            self._emit("alert_sound", {})
            return
        self.menu_open = None
        self.activities.add(action)
        phrase = action.replace("_", " ")
        self._emit(
            "dialog_confirm",
            {
                "task_id": None,
                "target": target.id,
                "action": action,
                "text": f"You {phrase}.",
            },
        )
        self._raise_activity_cues(action)
        self._check_state_cues()

    def _resolve_task(self, task: PmTask) -> None:
        executed_at = self.vtime
        remembered_at = self.presented[task.id]
        if task.cue_type == TIME_BASED:
            raw = evaluate_time_based(task, executed_at)
            status = LATE_AFTER_REMINDER if raw == LATE else raw
            achieved = status == ON_TIME
        else:
            status = (
                WRONG_ACTION_THEN_CORRECT
                if task.id in self.wrong_first
                else ON_TIME
            )
            achieved = True
        duration_vsec = round(
            (self.elapsed_ms - self.presented_ms[task.id])
            * self.plan.compression_factor
            / 1000
        )
        outcome = TaskOutcome(
            task_id=task.id,
            status=status,
            remembered_at=remembered_at,
            executed_at=executed_at,
            achieved=achieved,
        )
        self.outcomes[task.id] = outcome
        self.durations[task.id] = duration_vsec
        self.activities.add(task.target_action)
        self._emit(
            "dialog_confirm",
            {
                "task_id": task.id,
                "target": task.target_object,
                "action": task.target_action,
                "text": f"Task complete: {task.description}",
            },
        )
        self._emit(
            "task_result",
            {
                "task_id": task.id,
                "status": status,
                "achieved": achieved,
                "remembered_at": remembered_at,
                "executed_at": executed_at,
                "duration_vseconds": duration_vsec,
                "duration": format_duration(duration_vsec),
                "cue_raised_at": self.cue_raised.get(task.id),
            },
        )
        self._raise_activity_cues(task.target_action)

    def _cmd_start_distractor(self, payload: dict) -> None:
        if not self._require_day():
            return
        point = self.world.distractor_at(self.location)
        wanted = payload.get("point", point.id if point else None)
        if point is None or (wanted is not None and wanted != point.id):
            self._error(
                "not_at_distractor_point",
                "There is no game to play here.",
            )
            return
        if self.distractor is not None:
            self._error("already_playing", "A game is already running.")
            return
        if self.in_transit is not None:
            self._error("in_transit", "Still on the way; no game in reach.")
            return
        self.distractor = point.id
        self._emit("state_snapshot", self._snapshot())

    def _cmd_stop_distractor(self, payload: dict) -> None:
        if self.distractor is None:
            self._error("not_playing", "No game is running.")
            return
        self.distractor = None
        self._emit("state_snapshot", self._snapshot())

    def _cmd_pause(self, payload: dict) -> None:
        if self.paused:
            self._error("already_paused", "The session is already paused.")
            return
        self.paused = True
        if self.day_started:
            self.clock = self.clock.pause()
        self._emit("state_snapshot", self._snapshot())

    def _cmd_resume(self, payload: dict) -> None:
        if not self.paused:
            self._error("not_paused", "The session is not paused.")
            return
        self.paused = False
        if self.day_started:
            self.clock = self.clock.resume()
        self._emit("state_snapshot", self._snapshot())

    def _cmd_vit_answer(self, payload: dict) -> None:
        if self._vit_index >= len(self._vit_items):
            self._error("no_item", "No imagery item is waiting for an answer.")
            return
        item = self._vit_items[self._vit_index]
        chosen = payload.get("chosen", "")
        try:
            correct = vitmod.score_response(item, chosen)
        except vitmod.VitError:
            self._error(
                "unknown_choice", "That option was not among the choices."
            )
            return
        counts = self._vit_counts[item.level]
        counts[0] += 1
        if correct:
            counts[1] += 1
        text = (
            "That matches."
            if correct
            else f"The answer was: {item.correct_response}."
        )
        self._emit(
            "dialog_confirm",
            {
                "context": "vit",
                "level": item.level,
                "correct": correct,
                "correct_response": item.correct_response,
                "text": text,
            },
        )
        self._vit_index += 1
        if self._vit_index < len(self._vit_items):
            self._emit_vit_item()
        else:
            self._send_briefing()

    def _emit_vit_item(self) -> None:
        item = self._vit_items[self._vit_index]
        options = item.options(self.rng)
        self._emit(
            "vit_item",
            {
                "level": item.level,
                "index": self._vit_index,
                "total": len(self._vit_items),
                "stimulus_text": item.stimulus_text,
                "stimulus_content": item.stimulus_content,
                "stimulus_mode": item.stimulus_mode,
                "response_mode": item.response_mode,
                "options": options,
                "image": item.image,
            },
        )

    # ------------------------------------------------------------------
    # completion

    def _finish_day(self) -> None:
        for task in self.day_tasks:
            if task.id in self.outcomes:
                continue
            remembered = self.presented.get(task.id, self.clock.day_start)
            outcome = TaskOutcome(
                task_id=task.id,
                status=MISSED,
                remembered_at=remembered,
                executed_at=None,
                achieved=False,
            )
            self.outcomes[task.id] = outcome
            self._emit(
                "task_result",
                {
                    "task_id": task.id,
                    "status": MISSED,
                    "achieved": False,
                    "remembered_at": remembered,
                    "executed_at": None,
                    "duration_vseconds": None,
                    "duration": None,
                    "cue_raised_at": self.cue_raised.get(task.id),
                },
            )
        record = self._build_record()
        self.record = record
        self.session_ended = True
        self._emit("session_end", {"record": record.to_dict()})
        if self._writer is not None:
            self._writer.close()

    def finish(self) -> SessionRecord:
        """Finalize early (operator abort) or fetch the finished record."""
        if not self.session_ended:
            self._finish_day()
        assert self.record is not None
        return self.record

    def _build_record(self) -> SessionRecord:
        ordered = tuple(
            self.outcomes[t.id] for t in self.day_tasks
        )
        rates: dict[str, float | None] = {}
        tallies: dict[str, tuple[int, int]] = {}
        if self.scored:
            groups = {
                "total": list(self.day_tasks),
                "regular": [t for t in self.day_tasks if t.regularity == REGULAR],
                "irregular": [
                    t for t in self.day_tasks if t.regularity == IRREGULAR
                ],
                "time_based": [
                    t for t in self.day_tasks if t.cue_type == TIME_BASED
                ],
                "event_based": [
                    t for t in self.day_tasks if t.cue_type == EVENT_BASED
                ],
            }
            for name, tasks in groups.items():
                if not tasks:
                    rates[name] = None
                    continue
                achieved = sum(
                    1 for t in tasks if self.outcomes[t.id].achieved
                )
                tallies[name] = (achieved, len(tasks))
                rates[name] = achieved / len(tasks)
        vit_results = tuple(
            VitLevelResult(level, presented, correct)
            for level, (presented, correct) in sorted(self._vit_counts.items())
        )
        imagery = None
        if vit_results and any(r.items_presented for r in vit_results):
            imagery = imagery_score(
                [r for r in vit_results if r.items_presented]
            )
        # entry_count covers everything logged before session_end itself
        return SessionRecord(
            session_number=self.plan.session_number,
            phase=self.plan.phase,
            vrt_level=self.plan.vrt_level,
            seed=self.plan.seed,
            compression_factor=self.plan.compression_factor,
            scored=self.scored,
            outcomes=ordered,
            durations=dict(self.durations),
            rates=rates,
            tallies=tallies,
            vit_results=vit_results,
            imagery=imagery,
            entry_count=len(self.entries),
            final_elapsed_ms=self.elapsed_ms,
            world_fingerprint=world_fingerprint(self.world),
            catalog_fingerprint=catalog_fingerprint(self.catalog),
        )


# ----------------------------------------------------------------------
# replay


def replay_log(
    log: LogFile | str | Path,
    world: World | None = None,
    catalog: TaskCatalog | None = None,
    wordbank: WordBank | None = None,
) -> SessionRecord:
    """Re-drive a recorded session from its log.

    Commands are applied at their logged engine timestamps against a
    fresh engine built from the logged plan parameters, so the result
    must match the original record field for field.
    """
    if not isinstance(log, LogFile):
        log = read_log(log)
    if not log.session_ended:
        raise ProtocolError("log has no session_end entry; cannot replay")
    header = log.header.payload
    world = world if world is not None else load_default_world()
    catalog = catalog if catalog is not None else load_default_catalog()
    wordbank = (
        wordbank if wordbank is not None else vitmod.load_default_wordbank()
    )
    for name, expected, actual in (
        ("world", header.get("world_fingerprint"), world_fingerprint(world)),
        (
            "catalog",
            header.get("catalog_fingerprint"),
            catalog_fingerprint(catalog),
        ),
        (
            "wordbank",
            header.get("wordbank_fingerprint"),
            wordbank_fingerprint(wordbank),
        ),
    ):
        if expected is not None and expected != actual:
            raise ProtocolError(
                f"log was recorded against a different {name} "
                f"({expected} != {actual})"
            )
    plan = SessionPlan(
        session_number=header["session"],
        seed=header["seed"],
        compression_factor=header["compression_factor"],
        items_per_level=header.get(
            "items_per_level", vitmod.DEFAULT_ITEMS_PER_LEVEL
        ),
        start_location=header.get("start_location", DEFAULT_START_LOCATION),
    )
    engine = SessionEngine(plan, world=world, catalog=catalog, wordbank=wordbank)
    engine.start()
    ending = next(e for e in log.entries if e.kind == "session_end")
    for entry in log.entries:
        if entry.kind not in CLIENT_KINDS:
            continue
        engine.advance_to(entry.real_ms)
        engine.submit(
            ProtocolMessage(
                direction=CLIENT_TO_ENGINE,
                kind=entry.kind,
                seq=entry.seq,
                payload=entry.payload,
            )
        )
    if not engine.session_ended:
        engine.advance_to(ending.real_ms)
    # an operator abort ends the log before the day is out; finish() at
    # the same instant reproduces it, otherwise the advance above already
    # crossed day end and this is a no-op fetch
    return engine.finish()
