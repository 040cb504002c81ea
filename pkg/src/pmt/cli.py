"""Command-line entry point.

Subcommands:

- ``serve``    host a live session on a TCP port for the browser client
- ``run``      drive headless agent sessions, sweeps, and log replays
- ``analyze``  build an analytics report from logs and questionnaire CSVs
- ``validate`` check world/catalog/wordbank files against each other

Exit codes: 0 success, 2 validation or input failure, 3 reference-table
mismatch from ``analyze --check-fixtures``.
"""

from __future__ import annotations

import argparse
import asyncio
import json
import os
import sys
from pathlib import Path

from . import analytics
from .agents import (
    AgentError,
    parse_agent_spec,
    run_headless,
    sweep_rates,
)
from .engine import (
    EngineError,
    SessionEngine,
    SessionPlan,
    format_duration,
    replay_log,
)
from .protocol import ProtocolError, read_log
from .server import SessionServer
from .taskmodel import TaskCatalog, TaskError, cross_validate, load_default_catalog
from .vit import VitError, WordBank, load_default_wordbank
from .world import World, WorldError, load_default_world

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_FIXTURE_MISMATCH = 3

CONTENT_ENV = "PMT_CONTENT_DIR"


class CliError(RuntimeError):
    pass


def _content_file(explicit: str | None, name: str) -> Path | None:
    """Resolve a content file: explicit flag, then PMT_CONTENT_DIR, then
    the packaged default (signalled by None)."""
    if explicit:
        return Path(explicit)
    base = os.environ.get(CONTENT_ENV)
    if base:
        candidate = Path(base) / name
        if candidate.exists():
            return candidate
    return None


def _load_content(args) -> tuple[World, TaskCatalog, WordBank]:
    world_path = _content_file(args.world, "default.world.json")
    catalog_path = _content_file(args.catalog, "default.catalog.json")
    wordbank_path = _content_file(
        getattr(args, "wordbank", None), "default.wordbank.json"
    )
    world = World.load(world_path) if world_path else load_default_world()
    catalog = (
        TaskCatalog.load(catalog_path) if catalog_path else load_default_catalog()
    )
    wordbank = (
        WordBank.load(wordbank_path) if wordbank_path else load_default_wordbank()
    )
    return world, catalog, wordbank


def _print_record(record) -> None:
    print(
        f"session {record.session_number} ({record.phase}) "
        f"seed {record.seed}: {record.entry_count} log entries"
    )
    if record.scored:
        for name in ("total", "regular", "irregular", "time_based", "event_based"):
            rate = record.rates.get(name)
            achieved, count = record.tallies.get(name, (0, 0))
            shown = "-" if rate is None else f"{rate:.3f}"
            print(f"  {name:<12} {achieved}/{count}  rate {shown}")
    for task_id, vsec in sorted(record.durations.items()):
        print(f"  {task_id:<12} duration {format_duration(vsec)}")
    if record.vit_results:
        for result in record.vit_results:
            print(
                f"  vit level {result.level}: "
                f"{result.items_correct}/{result.items_presented}"
            )
        print(f"  imagery score {record.imagery}")


# ----------------------------------------------------------------------
# serve


def _cmd_serve(args) -> int:
    world, catalog, wordbank = _load_content(args)
    plan = SessionPlan(
        session_number=args.session,
        seed=args.seed,
        compression_factor=args.factor,
    )
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    log_path = (
        Path(args.log) if args.log else out_dir / f"session{args.session}.pmtlog"
    )
    with open(log_path, "w", encoding="utf-8") as sink:
        engine = SessionEngine(
            plan, world=world, catalog=catalog, wordbank=wordbank, log_sink=sink
        )
        server = SessionServer(
            engine, host=args.host, port=args.port, ui_dir=args.ui_dir
        )

        async def main() -> None:
            await server.start()
            print(
                f"session {args.session} on http://{args.host}:{server.port}/ "
                f"(seed {args.seed}, x{args.factor} compression)",
                flush=True,
            )
            await server.closed.wait()
            await server._shutdown()

        asyncio.run(main())
    record = engine.finish()
    record_path = log_path.with_suffix(".record.json")
    record_path.write_text(
        json.dumps(record.to_dict(), indent=2, sort_keys=True) + "\n"
    )
    print(f"log written to {log_path}")
    print(f"record written to {record_path}")
    _print_record(record)
    return EXIT_OK


# ----------------------------------------------------------------------
# run


def _parse_sweep(spec: str) -> tuple[str, str, list[float], list[str]]:
    """Split e.g. "retention:p=0.5..1.0:step0.1" into the agent name,
    the swept parameter, its values, and any fixed key=value segments."""
    parts = spec.split(":")
    name = parts[0]
    param = None
    lo = hi = step = None
    fixed: list[str] = []
    for part in parts[1:]:
        if ".." in part:
            key, eq, span = part.partition("=")
            if not eq or param is not None:
                raise CliError(f"bad sweep range in {part!r}")
            param = key
            lo_s, _, hi_s = span.partition("..")
            lo, hi = float(lo_s), float(hi_s)
        elif part.startswith("step"):
            step = float(part[4:])
        else:
            fixed.append(part)
    if param is None or step is None or step <= 0:
        raise CliError(
            f"sweep spec {spec!r} needs a param=lo..hi range and a stepN part"
        )
    values = []
    v = lo
    while v <= hi + 1e-9:
        values.append(round(v, 10))
        v += step
    return name, param, values, fixed


def _cmd_run(args) -> int:
    world, catalog, wordbank = _load_content(args)

    if args.replay:
        return _run_replay(args, world, catalog, wordbank)
    if args.sweep:
        return _run_sweep(args, world, catalog)

    if args.session is None or args.seed is None:
        raise CliError("run needs --session and --seed (or --replay/--sweep)")
    plan = SessionPlan(
        session_number=args.session,
        seed=args.seed,
        compression_factor=args.factor,
    )
    agent = parse_agent_spec(args.agent, world=world, seed=args.agent_seed)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    log_path = (
        Path(args.log)
        if args.log
        else out_dir / f"session{args.session}_seed{args.seed}.pmtlog"
    )
    with open(log_path, "w", encoding="utf-8") as sink:
        record = run_headless(
            plan,
            agent,
            world=world,
            catalog=catalog,
            wordbank=wordbank,
            log_sink=sink,
        )
    record_path = log_path.with_suffix(".record.json")
    record_path.write_text(
        json.dumps(record.to_dict(), indent=2, sort_keys=True) + "\n"
    )
    print(f"log written to {log_path}")
    _print_record(record)
    return EXIT_OK


def _run_replay(args, world, catalog, wordbank) -> int:
    log = read_log(args.replay)
    recorded = None
    for entry in log.entries:
        if entry.kind == "session_end":
            recorded = entry.payload["record"]
    if recorded is None:
        print(f"{args.replay}: log has no session_end entry", file=sys.stderr)
        return EXIT_INVALID
    replayed = replay_log(log, world=world, catalog=catalog, wordbank=wordbank)
    if replayed.to_dict() == recorded:
        print(f"replay of {args.replay} matches the recorded session")
        return EXIT_OK
    print(f"replay of {args.replay} DIVERGES from the recorded session")
    for key, value in sorted(replayed.to_dict().items()):
        if recorded.get(key) != value:
            print(f"  {key}: recorded {recorded.get(key)!r} replayed {value!r}")
    return EXIT_INVALID


def _run_sweep(args, world, catalog) -> int:
    name, param, values, fixed = _parse_sweep(args.sweep)
    seeds = list(range(args.seeds))
    categories = ("total", "regular", "irregular", "time_based", "event_based")
    print(
        f"{name} sweep over {param}, {len(seeds)} seeds cycling sessions 5-8"
    )
    print(f"{param:>8}  " + "  ".join(f"{c:>11}" for c in categories))
    rows = []
    for value in values:
        spec = f"{name}:{param}={value}"
        if fixed:
            spec += "," + ",".join(fixed)

        def make_agent(seed, spec=spec):
            return parse_agent_spec(spec, world=world, seed=seed)

        rates = sweep_rates(make_agent, seeds, world=world, catalog=catalog)
        rows.append({"value": value, "rates": rates})
        cells = "  ".join(
            f"{rates.get(c, float('nan')):>11.3f}" for c in categories
        )
        print(f"{value:>8g}  {cells}", flush=True)
    if args.out_json:
        Path(args.out_json).write_text(
            json.dumps(
                {"agent": name, "param": param, "seeds": args.seeds, "rows": rows},
                indent=2,
                sort_keys=True,
            )
            + "\n"
        )
        print(f"sweep table written to {args.out_json}")
    return EXIT_OK


# ----------------------------------------------------------------------
# analyze


def _cmd_analyze(args) -> int:
    if args.check_fixtures:
        result = analytics.check_fixtures()
        for name, check in result["checks"].items():
            status = "ok" if not check["problems"] else "MISMATCH"
            print(f"{name}: {check['rows']} rows {status}")
            for problem in check["problems"]:
                print(f"  {problem}")
        return EXIT_OK if result["ok"] else EXIT_FIXTURE_MISMATCH

    if not args.logs:
        raise CliError("analyze needs --logs (or --check-fixtures)")
    records = analytics.collect_records(args.logs)
    if not records:
        print(f"no .pmtlog files under {args.logs}", file=sys.stderr)
        return EXIT_INVALID
    report = analytics.build_report(
        participants_csv=args.participants,
        ueq_csv=args.ueq,
        jikaku_csv=args.jikaku,
        records_by_participant=records,
    )
    if args.participants and "correlations" not in report:
        print(
            "warning: too few complete score pairs, correlations omitted",
            file=sys.stderr,
        )
    analytics.write_report(report, args.out)
    print(f"report written to {args.out}")
    return EXIT_OK


# ----------------------------------------------------------------------
# validate


def _cmd_validate(args) -> int:
    world_path = _content_file(args.world, "default.world.json")
    catalog_path = _content_file(args.catalog, "default.catalog.json")
    wordbank_path = _content_file(args.wordbank, "default.wordbank.json")
    world = World.load(world_path) if world_path else load_default_world()
    print(f"world: {len(world.locations)} locations, {len(world.npcs)} npcs")
    catalog = (
        TaskCatalog.load(catalog_path) if catalog_path else load_default_catalog()
    )
    cross_validate(catalog, world)
    regular = sum(1 for t in catalog.tasks if t.regularity == "regular")
    print(
        f"catalog: {regular} regular + {len(catalog.tasks) - regular} "
        f"irregular tasks, consistent with the world"
    )
    wordbank = (
        WordBank.load(wordbank_path) if wordbank_path else load_default_wordbank()
    )
    print(f"wordbank: {len(wordbank.pairs)} pairs across 8 levels")
    print("ok")
    return EXIT_OK


# ----------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pmt",
        description="Prospective-memory training sessions: serve, simulate, analyze.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def content_flags(p, wordbank=True):
        p.add_argument("--world", help="world file (default: packaged)")
        p.add_argument("--catalog", help="task catalog file (default: packaged)")
        if wordbank:
            p.add_argument(
                "--wordbank", help="imagery word bank file (default: packaged)"
            )

    p = sub.add_parser("serve", help="host a live session for the web client")
    p.add_argument("--session", type=int, required=True, help="session number 1-8")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--port", type=int, required=True)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument(
        "--factor", type=int, default=20, help="time compression factor"
    )
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--log", help="explicit log path (default sessionN.pmtlog)")
    p.add_argument("--ui-dir", help="static client bundle to serve at /")
    content_flags(p)
    p.set_defaults(func=_cmd_serve)

    p = sub.add_parser("run", help="headless agent session, sweep, or replay")
    p.add_argument("--session", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument(
        "--agent",
        default="perfect",
        help="policy spec, e.g. perfect | retention:p=0.8,bonus=0.5 "
        "| clock_checker:period=45",
    )
    p.add_argument(
        "--agent-seed", type=int, default=0, help="rng seed for the policy"
    )
    p.add_argument("--factor", type=int, default=20)
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--log", help="explicit log path")
    p.add_argument("--replay", help="verify a recorded log instead of running")
    p.add_argument(
        "--sweep",
        help="parameter sweep, e.g. retention:p=0.5..1.0:step0.1",
    )
    p.add_argument("--seeds", type=int, default=50, help="seed count for --sweep")
    p.add_argument("--out-json", help="write the sweep table as json")
    content_flags(p)
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("analyze", help="build a report or check bundled tables")
    p.add_argument("--logs", help="directory of .pmtlog files")
    p.add_argument("--participants", help="participants csv")
    p.add_argument("--ueq", help="ueq-s responses csv")
    p.add_argument("--jikaku", help="jikaku-sho responses csv")
    p.add_argument("--out", default="report.json")
    p.add_argument(
        "--check-fixtures",
        action="store_true",
        help="recompute the bundled reference tables and compare",
    )
    p.set_defaults(func=_cmd_analyze)

    p = sub.add_parser("validate", help="check content files for consistency")
    content_flags(p)
    p.set_defaults(func=_cmd_validate)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (
        CliError,
        AgentError,
        EngineError,
        ProtocolError,
        TaskError,
        VitError,
        WorldError,
        analytics.AnalyticsError,
        FileNotFoundError,
        ValueError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
