"""Scripted participants.

Policies talk to the engine exactly the way a remote client does: they
see only protocol messages folded into a ClientView and reply with
commands. That keeps them honest as load generators for the simulated
day and lets the same recorded logs replay regardless of who produced
them.

Four temperaments are provided:

- perfect: routes every task into its acceptance window or cue context.
- immediate: executes everything as soon as it is remembered.
- retention: forgets tasks at an hourly rate, less so for rehearsed
  daily routines.
- clock_checker: absorbed in filler games, looks at the clock only
  every so often.
"""

from __future__ import annotations

import random

from .engine import SessionEngine, SessionPlan, SessionRecord
from .protocol import CLIENT_TO_ENGINE, ProtocolMessage
from .taskmodel import EVENT_BASED, REGULAR, TIME_BASED, WINDOW_AFTER, WINDOW_BEFORE
from .world import Npc, World, load_default_world


class AgentError(RuntimeError):
    pass


class ClientView:
    """Client-side session state folded from engine messages."""

    def __init__(self) -> None:
        self.session: int | None = None
        self.phase: str | None = None
        self.scored = False
        self.vtime: int | None = None
        self.location: str | None = None
        self.paused = False
        self.day_started = False
        self.briefing_pending = False
        self.in_transit: dict | None = None
        self.distractor: str | None = None
        self.menu: dict | None = None
        self.tasks: dict[str, dict] = {}
        self.results: dict[str, dict] = {}
        self.reminders: list[str] = []
        self.alerts = 0
        self.confirms: list[dict] = []
        self.errors: list[dict] = []
        self.pending_vit: dict | None = None
        self.record: dict | None = None
        self.ended = False

    def ingest(self, message: ProtocolMessage) -> None:
        payload = message.payload
        match message.kind:
            case "state_snapshot":
                self.session = payload["session"]
                self.phase = payload["phase"]
                self.scored = payload["scored"]
                self.vtime = payload["vtime"]
                self.location = payload["location"]
                self.paused = payload["paused"]
                self.day_started = payload["day_started"]
                self.briefing_pending = payload["briefing_pending"]
                self.in_transit = payload["in_transit"]
                self.distractor = payload["distractor"]
                self.menu = payload["menu"]
            case "clock_tick":
                self.vtime = payload["vtime"]
            case "task_briefing":
                for task in payload["tasks"]:
                    self.tasks[task["id"]] = task
                self.briefing_pending = True
            case "task_popup":
                task = payload["task"]
                self.tasks[task["id"]] = task
                if "interrupted_distractor" in payload:
                    self.distractor = None
            case "reminder":
                self.reminders.append(payload["task_id"])
                if "interrupted_distractor" in payload:
                    self.distractor = None
            case "task_result":
                self.results[payload["task_id"]] = payload
            case "alert_sound":
                self.alerts += 1
            case "dialog_confirm":
                if payload.get("context") == "vit":
                    self.pending_vit = None
                self.confirms.append(payload)
            case "vit_item":
                self.pending_vit = payload
            case "session_end":
                self.record = payload["record"]
                self.ended = True
            case "error":
                self.errors.append(payload)

    def ingest_many(self, messages: list[ProtocolMessage]) -> None:
        for message in messages:
            self.ingest(message)

    def pending_tasks(self) -> list[dict]:
        return [t for t in self.tasks.values() if t["id"] not in self.results]


Command = tuple[str, dict]


class Agent:
    """Base temperament: sits through imagery items and acknowledges the
    briefing, then defers the day itself to act()."""

    name = "agent"

    def __init__(self, world: World | None = None, rng: random.Random | None = None):
        self.world = world if world is not None else load_default_world()
        self.rng = rng if rng is not None else random.Random(0)

    def decide(self, view: ClientView) -> list[Command]:
        if view.ended:
            return []
        if view.pending_vit is not None:
            return [self.answer_vit(view.pending_vit)]
        if view.briefing_pending and not view.day_started:
            return [("ack_briefing", {})]
        if not view.day_started:
            return []
        if view.paused:
            return [("resume", {})]
        if view.in_transit is not None:
            return []
        return self.act(view)

    def answer_vit(self, item: dict) -> Command:
        # no privileged access to the key; pick like a guessing trainee
        return ("vit_answer", {"chosen": self.rng.choice(item["options"])})

    def act(self, view: ClientView) -> list[Command]:
        return []

    # ------------------------------------------------------------------
    # routing helpers shared by the concrete temperaments

    def target_location(self, task: dict, now: int) -> str | None:
        target = self.world.interaction_target(task["target"])
        if isinstance(target, Npc):
            return target.location_at(now)
        return target.location_id

    def execute_command(self, task: dict) -> Command:
        target = self.world.interaction_target(task["target"])
        if target.choice_options is not None:
            return (
                "select_choice",
                {"object": task["target"], "choice": task["action"]},
            )
        return ("interact", {"object": task["target"], "action": task["action"]})

    def actionable(self, task: dict, now: int) -> bool:
        """Whether the task's target can be reached at all right now."""
        return self.target_location(task, now) is not None


class PerfectAgent(Agent):
    """Executes every time-based task inside its window and every
    event-based task as soon as its target is reachable, weaving the
    event errands through the gaps between appointments."""

    name = "perfect"

    def act(self, view: ClientView) -> list[Command]:
        now = view.vtime
        pending = self.visible(view)
        timed = sorted(
            (t for t in pending if t["cue_type"] == TIME_BASED),
            key=lambda t: t["designated_time"],
        )
        events = [
            t
            for t in pending
            if t["cue_type"] == EVENT_BASED and self.actionable(t, now)
        ]
        if timed:
            head = timed[0]
            designated = head["designated_time"]
            head_loc = self.target_location(head, now)
            travel = self.world.travel_time(view.location, head_loc)
            if now + travel >= designated - WINDOW_BEFORE:
                if view.location != head_loc:
                    return [("move", {"to": head_loc})]
                if now >= designated - WINDOW_BEFORE:
                    return [self.execute_command(head)]
                return []
            # spare time: run an event errand that still gets us back
            for task in events:
                errand_loc = self.target_location(task, now)
                if view.location == errand_loc:
                    return [self.execute_command(task)]
                detour = self.world.travel_time(
                    view.location, errand_loc
                ) + self.world.travel_time(errand_loc, head_loc)
                if now + detour <= designated - 1:
                    return [("move", {"to": errand_loc})]
            return []
        if events:
            task = events[0]
            errand_loc = self.target_location(task, now)
            if view.location == errand_loc:
                return [self.execute_command(task)]
            return [("move", {"to": errand_loc})]
        return []

    def visible(self, view: ClientView) -> list[dict]:
        return view.pending_tasks()


class ImmediateExecutor(Agent):
    """Runs at every task the moment it is remembered, deadlines be
    damned; time-based tasks get consumed ahead of their windows."""

    name = "immediate"

    def act(self, view: ClientView) -> list[Command]:
        now = view.vtime
        for task in view.pending_tasks():
            if not self.actionable(task, now):
                continue
            loc = self.target_location(task, now)
            if view.location == loc:
                return [self.execute_command(task)]
            return [("move", {"to": loc})]
        return []


class RetentionAgent(PerfectAgent):
    """Perfect routing over an imperfect memory.

    Every virtual hour a held task survives with probability p_retain;
    daily routines rehearsed in earlier sessions forget at a rate scaled
    by repetition_bonus per prior rehearsal. A reminder puts the task
    back in mind, too late to score."""

    name = "retention"

    def __init__(
        self,
        p_retain: float = 0.8,
        repetition_bonus: float = 0.5,
        bonus_enabled: bool = True,
        world: World | None = None,
        rng: random.Random | None = None,
    ):
        super().__init__(world=world, rng=rng)
        if not 0 <= p_retain <= 1:
            raise AgentError("p_retain must be within [0, 1]")
        if not 0 < repetition_bonus <= 1:
            raise AgentError("repetition_bonus must be within (0, 1]")
        self.p_retain = p_retain
        self.repetition_bonus = repetition_bonus
        self.bonus_enabled = bonus_enabled
        self._noted_at: dict[str, int] = {}
        self._hours_faced: dict[str, int] = {}
        self._forgotten: set[str] = set()

    def _forget_rate(self, task: dict, session: int) -> float:
        rate = 1 - self.p_retain
        if self.bonus_enabled and task["regularity"] == REGULAR:
            rehearsals = max(session - 4, 0)
            rate *= self.repetition_bonus**rehearsals
        return rate

    def _update_memory(self, view: ClientView) -> None:
        now = view.vtime
        for task_id, task in view.tasks.items():
            if task_id not in self._noted_at:
                self._noted_at[task_id] = now
                self._hours_faced[task_id] = 0
            if task_id in self._forgotten or task_id in view.results:
                continue
            hours = (now - self._noted_at[task_id]) // 60
            while self._hours_faced[task_id] < hours:
                self._hours_faced[task_id] += 1
                if self.rng.random() < self._forget_rate(task, view.session):
                    self._forgotten.add(task_id)
                    break
        for task_id in view.reminders:
            self._forgotten.discard(task_id)

    def act(self, view: ClientView) -> list[Command]:
        self._update_memory(view)
        return super().act(view)

    def visible(self, view: ClientView) -> list[dict]:
        return [
            t for t in view.pending_tasks() if t["id"] not in self._forgotten
        ]


class ClockCheckerAgent(Agent):
    """Plays filler games between clock checks every check_period
    virtual minutes. A check commits to the nearest appointment whose
    window the walk can still reach, or failing that to one event
    errand; everything else waits for the next check or the reminder."""

    name = "clock_checker"

    def __init__(
        self,
        check_period: int = 45,
        world: World | None = None,
        rng: random.Random | None = None,
    ):
        super().__init__(world=world, rng=rng)
        if check_period < 1:
            raise AgentError("check_period must be at least one minute")
        self.check_period = check_period
        self._next_check: int | None = None
        self._commit: str | None = None

    def act(self, view: ClientView) -> list[Command]:
        now = view.vtime
        if self._next_check is None:
            self._next_check = now + self.check_period
        if self._commit is not None and self._commit in view.results:
            self._commit = None
        for task_id in view.reminders:
            if task_id not in view.results:
                self._commit = task_id
        if self._commit is not None:
            return self._run_errand(view)
        due = now >= self._next_check
        if due and view.distractor is not None:
            return [("stop_distractor", {})]
        if due:
            while self._next_check <= now:
                self._next_check += self.check_period
            self._commit = self._choose_errand(view)
            if self._commit is not None:
                return self._run_errand(view)
        if view.distractor is not None:
            return []
        point = self.world.distractor_at(view.location)
        if point is not None:
            return [("start_distractor", {"point": point.id})]
        nearest = min(
            (
                p
                for area in self.world.areas.values()
                for p in area.distractor_points
            ),
            key=lambda p: self.world.travel_time(view.location, p.location_id),
        )
        return [("move", {"to": nearest.location_id})]

    def _choose_errand(self, view: ClientView) -> str | None:
        now = view.vtime
        window_hits = []
        for task in view.pending_tasks():
            if task["cue_type"] != TIME_BASED:
                continue
            loc = self.target_location(task, now)
            travel = self.world.travel_time(view.location, loc)
            designated = task["designated_time"]
            arrival = now + travel
            if (
                designated - WINDOW_BEFORE
                <= arrival
                <= designated + WINDOW_AFTER
            ):
                window_hits.append((designated, task["id"]))
        if window_hits:
            return min(window_hits)[1]
        for task in view.pending_tasks():
            if task["cue_type"] == EVENT_BASED and self.actionable(task, now):
                return task["id"]
        return None

    def _run_errand(self, view: ClientView) -> list[Command]:
        task = view.tasks[self._commit]
        now = view.vtime
        loc = self.target_location(task, now)
        if loc is None:
            # target person has left; give up until reminded again
            self._commit = None
            return []
        if view.location != loc:
            return [("move", {"to": loc})]
        return [self.execute_command(task)]


# ----------------------------------------------------------------------
# harness


def run_headless(
    plan: SessionPlan,
    agent: Agent,
    world: World | None = None,
    catalog=None,
    wordbank=None,
    log_sink=None,
    max_decides_per_minute: int = 25,
) -> SessionRecord:
    """Drive one full session without a transport; returns its record."""
    engine = SessionEngine(
        plan, world=world, catalog=catalog, wordbank=wordbank, log_sink=log_sink
    )
    view = ClientView()
    client_seq = 0
    engine.start()
    view.ingest_many(engine.drain())
    while not engine.session_ended:
        # the pre-day stretch covers every imagery item plus the briefing
        # ack in one pass, so it gets a wider livelock budget
        budget = max_decides_per_minute if engine.day_started else 256
        for _ in range(budget):
            commands = agent.decide(view)
            if not commands:
                break
            for kind, payload in commands:
                client_seq += 1
                engine.submit(
                    ProtocolMessage(
                        direction=CLIENT_TO_ENGINE,
                        kind=kind,
                        seq=client_seq,
                        payload=payload,
                    )
                )
                view.ingest_many(engine.drain())
            if engine.session_ended:
                break
        else:
            raise AgentError(
                f"agent {agent.name} kept issuing commands at "
                f"vtime {engine.vtime}"
            )
        if engine.session_ended:
            break
        if not engine.day_started:
            raise AgentError(
                f"agent {agent.name} stalled before the day started"
            )
        next_ms = engine.clock.next_minute_ms()
        if next_ms is None:
            break
        engine.advance_to(next_ms)
        view.ingest_many(engine.drain())
    return engine.finish()


def sweep_rates(
    make_agent,
    seeds,
    sessions: tuple[int, ...] = (5, 6, 7, 8),
    world: World | None = None,
    catalog=None,
) -> dict[str, float]:
    """Mean achievement rate per category across seeded runs.

    Each seed drives one session, cycling through the given session
    numbers so every difficulty level contributes.
    """
    sums: dict[str, float] = {}
    counts: dict[str, int] = {}
    for index, seed in enumerate(seeds):
        session = sessions[index % len(sessions)]
        plan = SessionPlan(session_number=session, seed=seed)
        agent = make_agent(seed)
        record = run_headless(plan, agent, world=world, catalog=catalog)
        for name, rate in record.rates.items():
            if rate is None:
                continue
            sums[name] = sums.get(name, 0.0) + rate
            counts[name] = counts.get(name, 0) + 1
    return {name: sums[name] / counts[name] for name in sums}


AGENT_NAMES = ("perfect", "immediate", "retention", "clock_checker")


def parse_agent_spec(spec: str, world: World | None = None, seed: int = 0) -> Agent:
    """Build an agent from a CLI-style spec string.

    Examples: "perfect", "retention:p=0.8,bonus=0.5",
    "clock_checker:period=45".
    """
    name, _, argpart = spec.partition(":")
    kwargs: dict[str, str] = {}
    if argpart:
        for piece in argpart.split(","):
            key, eq, value = piece.partition("=")
            if not eq:
                raise AgentError(f"bad agent argument {piece!r}, want key=value")
            kwargs[key.strip()] = value.strip()
    rng = random.Random(seed)
    match name:
        case "perfect":
            agent: Agent = PerfectAgent(world=world, rng=rng)
        case "immediate":
            agent = ImmediateExecutor(world=world, rng=rng)
        case "retention":
            agent = RetentionAgent(
                p_retain=float(kwargs.pop("p", 0.8)),
                repetition_bonus=float(kwargs.pop("bonus", 0.5)),
                bonus_enabled=kwargs.pop("bonus_enabled", "on") != "off",
                world=world,
                rng=rng,
            )
        case "clock_checker":
            agent = ClockCheckerAgent(
                check_period=int(kwargs.pop("period", 45)),
                world=world,
                rng=rng,
            )
        case _:
            raise AgentError(
                f"unknown agent {name!r}, expected one of {AGENT_NAMES}"
            )
    if kwargs:
        raise AgentError(
            f"unknown arguments for agent {name!r}: {sorted(kwargs)}"
        )
    return agent
