"""Statistics over finished sessions.

Achievement aggregation, Pearson correlation with Fisher-z confidence
intervals and exact t-test p-values, per-task min-max normalization of
remember-to-execute durations, and Likert questionnaire scoring. Pure
functions throughout; file I/O sits in the small readers at the bottom
plus build_report.
"""

from __future__ import annotations

import csv
import json
import math
import warnings
from dataclasses import dataclass
from pathlib import Path

from scipy import stats as _scipy_stats

from .engine import SessionRecord
from .protocol import read_log

# normal quantile for the standard 95% interval; pinned so reports do
# not drift with library versions
Z_95 = 1.959964

UEQ_S = "ueq_s"
JIKAKU_SHO = "jikaku_sho"

JIKAKU_CATEGORIES = (
    "drowsiness",
    "instability",
    "uneasiness",
    "dullness",
    "eyestrain",
)

SCORED_SESSIONS = (5, 6, 7, 8)

RATE_CATEGORIES = ("total", "regular", "irregular", "time_based", "event_based")


class AnalyticsError(ValueError):
    pass


# ----------------------------------------------------------------------
# correlation


def pearson(x, y) -> float:
    xs = [float(v) for v in x]
    ys = [float(v) for v in y]
    n = len(xs)
    if n != len(ys):
        raise AnalyticsError(f"length mismatch: {n} vs {len(ys)}")
    if n < 3:
        raise AnalyticsError(f"need at least 3 pairs, got {n}")
    mx = sum(xs) / n
    my = sum(ys) / n
    dx = [v - mx for v in xs]
    dy = [v - my for v in ys]
    sxx = sum(v * v for v in dx)
    syy = sum(v * v for v in dy)
    if sxx == 0 or syy == 0:
        raise AnalyticsError("correlation undefined for a constant vector")
    return sum(a * b for a, b in zip(dx, dy)) / math.sqrt(sxx * syy)


def fisher_ci(r: float, n: int, level: float = 0.95) -> tuple[float, float]:
    """95% interval via the z transform: tanh(atanh(r) -+ q/sqrt(n-3))."""
    if not -1 <= r <= 1:
        raise AnalyticsError(f"r={r} outside [-1, 1]")
    if n < 4:
        raise AnalyticsError(f"need n >= 4 for an interval, got {n}")
    if abs(r) == 1:
        warnings.warn(
            "interval degenerates at |r| = 1", RuntimeWarning, stacklevel=2
        )
        return (r, r)
    if level == 0.95:
        quantile = Z_95
    else:
        quantile = float(_scipy_stats.norm.ppf(1 - (1 - level) / 2))
    z = math.atanh(r)
    half = quantile / math.sqrt(n - 3)
    return (math.tanh(z - half), math.tanh(z + half))


def p_value(r: float, n: int) -> float:
    """Two-sided p from t = r*sqrt(n-2)/sqrt(1-r^2) with n-2 df."""
    if not -1 <= r <= 1:
        raise AnalyticsError(f"r={r} outside [-1, 1]")
    if n < 3:
        raise AnalyticsError(f"need n >= 3 for a test, got {n}")
    if abs(r) == 1:
        import sys

        return sys.float_info.min
    if r == 0:
        return 1.0
    t = r * math.sqrt(n - 2) / math.sqrt(1 - r * r)
    return float(2 * _scipy_stats.t.sf(abs(t), n - 2))


@dataclass(frozen=True, slots=True)
class CorrelationResult:
    r: float
    ci_low: float
    ci_high: float
    p: float
    n: int

    def __post_init__(self) -> None:
        if not -1 <= self.ci_low <= self.r <= self.ci_high <= 1:
            raise AnalyticsError("interval must bracket r within [-1, 1]")
        if not 0 < self.p <= 1:
            raise AnalyticsError("p must lie in (0, 1]")

    def to_dict(self) -> dict:
        return {
            "r": self.r,
            "ci_low": self.ci_low,
            "ci_high": self.ci_high,
            "p": self.p,
            "p_display": format_p(self.p),
            "n": self.n,
        }


def correlate(x, y) -> CorrelationResult:
    r = pearson(x, y)
    lo, hi = fisher_ci(r, len(x))
    return CorrelationResult(r=r, ci_low=lo, ci_high=hi, p=p_value(r, len(x)), n=len(x))


def format_p(p: float) -> str:
    # the exact t-test resolves below printed thresholds; report a
    # threshold rather than implying more precision than the method has
    if p < 0.001:
        return "<0.001"
    return f"{p:.3f}"


# ----------------------------------------------------------------------
# durations


def parse_mmss(text: str) -> int:
    mm, sep, ss = text.strip().partition(":")
    if not sep or not mm.isdigit() or not ss.isdigit() or len(ss) != 2:
        raise AnalyticsError(f"bad duration {text!r}, expected mm:ss")
    seconds = int(mm) * 60 + int(ss)
    return seconds


def format_mmss(seconds: int) -> str:
    if seconds < 0:
        raise AnalyticsError("negative duration")
    return f"{seconds // 60:02d}:{seconds % 60:02d}"


@dataclass(frozen=True, slots=True)
class NormalizedDuration:
    task_id: str
    participant_id: str
    duration: str       # mm:ss
    normalized: float

    def __post_init__(self) -> None:
        if not 0 <= self.normalized <= 1:
            raise AnalyticsError("normalized value outside [0, 1]")


def normalize_durations(
    columns: dict[str, dict[str, int | str]],
) -> dict[str, dict[str, NormalizedDuration]]:
    """Min-max rescale each task column of durations.

    Accepts seconds or mm:ss strings. A column whose entries are all
    equal (including a single entry) maps to 0.0 across the board.
    """
    out: dict[str, dict[str, NormalizedDuration]] = {}
    for task_id, cells in columns.items():
        if not cells:
            raise AnalyticsError(f"empty duration column for {task_id!r}")
        seconds: dict[str, int] = {}
        for participant_id, value in cells.items():
            s = parse_mmss(value) if isinstance(value, str) else int(value)
            if s < 0:
                raise AnalyticsError(
                    f"negative duration for {task_id}/{participant_id}"
                )
            seconds[participant_id] = s
        lo = min(seconds.values())
        hi = max(seconds.values())
        span = hi - lo
        out[task_id] = {
            pid: NormalizedDuration(
                task_id=task_id,
                participant_id=pid,
                duration=format_mmss(s),
                normalized=(s - lo) / span if span else 0.0,
            )
            for pid, s in seconds.items()
        }
    return out


# ----------------------------------------------------------------------
# achievement


def achievement_table(
    records_by_participant: dict[str, list[SessionRecord]],
) -> dict:
    """Per-session and per-category rates, with aggregates across the
    scored sessions. Missing sessions are flagged, never fabricated."""
    table: dict = {}
    for pid, records in records_by_participant.items():
        sessions: dict[int, dict] = {}
        totals: dict[str, list[int]] = {}
        for record in records:
            if not record.scored:
                continue
            per_cat = {}
            for category, (achieved, count) in record.tallies.items():
                per_cat[category] = {
                    "achieved": achieved,
                    "count": count,
                    "rate": achieved / count,
                    "display": f"{achieved / count:.3f}",
                }
                bucket = totals.setdefault(category, [0, 0])
                bucket[0] += achieved
                bucket[1] += count
            sessions[record.session_number] = per_cat
        aggregate = {
            category: {
                "achieved": achieved,
                "count": count,
                "rate": achieved / count,
                "display": f"{achieved / count:.3f}",
            }
            for category, (achieved, count) in totals.items()
        }
        table[pid] = {
            "sessions": sessions,
            "missing_sessions": [
                s for s in SCORED_SESSIONS if s not in sessions
            ],
            "aggregate": aggregate,
        }
    return table


# ----------------------------------------------------------------------
# questionnaires


@dataclass(frozen=True, slots=True)
class QuestionnaireResponse:
    instrument: str
    participant_id: str
    items: tuple[float, ...]

    def __post_init__(self) -> None:
        match self.instrument:
            case "ueq_s":
                expected, lo, hi = 8, -3, 3
            case "jikaku_sho":
                expected, lo, hi = 25, 1, 5
            case other:
                raise AnalyticsError(f"unknown instrument {other!r}")
        if len(self.items) != expected:
            raise AnalyticsError(
                f"{self.instrument} needs {expected} items, "
                f"got {len(self.items)}"
            )
        for index, value in enumerate(self.items, start=1):
            if not lo <= value <= hi:
                raise AnalyticsError(
                    f"{self.instrument} item {index} score {value} "
                    f"outside {lo}..{hi}"
                )


def _mean(values) -> float:
    values = list(values)
    return sum(values) / len(values)


def score_questionnaire(
    responses: list[QuestionnaireResponse],
    groups: dict[str, str] | None = None,
) -> dict:
    """Group means per item, aggregate, or category.

    ueq_s rows yield per-item means plus pragmatic (items 1-4) and
    hedonic (items 5-8) aggregates; jikaku_sho rows yield means for the
    five fatigue categories, each covering five consecutive items.
    """
    if not responses:
        raise AnalyticsError("no responses to score")
    result: dict = {}
    by_instrument: dict[str, dict[str, list[QuestionnaireResponse]]] = {}
    for response in responses:
        group = (groups or {}).get(response.participant_id, "all")
        by_instrument.setdefault(response.instrument, {}).setdefault(
            group, []
        ).append(response)
    for instrument, by_group in by_instrument.items():
        result[instrument] = {}
        for group, rows in sorted(by_group.items()):
            if instrument == UEQ_S:
                item_means = [
                    _mean(row.items[i] for row in rows) for i in range(8)
                ]
                result[instrument][group] = {
                    "items": item_means,
                    "pragmatic": _mean(item_means[0:4]),
                    "hedonic": _mean(item_means[4:8]),
                    "n": len(rows),
                }
            else:
                categories = {
                    name: _mean(
                        _mean(row.items[base : base + 5]) for row in rows
                    )
                    for name, base in zip(
                        JIKAKU_CATEGORIES, range(0, 25, 5)
                    )
                }
                categories["n"] = len(rows)
                result[instrument][group] = categories
    return result


# ----------------------------------------------------------------------
# file readers


@dataclass(frozen=True, slots=True)
class ParticipantScores:
    participant_id: str
    group: str
    mist_total: float
    imagery_score: float | None

    def __post_init__(self) -> None:
        if self.imagery_score is not None and not 0 <= self.imagery_score <= 1:
            raise AnalyticsError("imagery_score outside [0, 1]")


def read_participants(path: str | Path) -> list[ParticipantScores]:
    rows = []
    seen = set()
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            pid = row["id"].strip()
            if pid in seen:
                raise AnalyticsError(f"duplicate participant id {pid!r}")
            seen.add(pid)
            imagery = row.get("imagery_score", "").strip()
            rows.append(
                ParticipantScores(
                    participant_id=pid,
                    group=row["group"].strip(),
                    mist_total=float(row["mist_total"]),
                    imagery_score=float(imagery) if imagery else None,
                )
            )
    return rows


def read_questionnaire_csv(
    path: str | Path, instrument: str
) -> list[QuestionnaireResponse]:
    expected = 8 if instrument == UEQ_S else 25
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise AnalyticsError(f"{path}: empty file")
        for line in reader:
            if not line:
                continue
            pid, *scores = line
            if len(scores) != expected:
                raise AnalyticsError(
                    f"{path}: row {pid!r} has {len(scores)} items, "
                    f"expected {expected}"
                )
            rows.append(
                QuestionnaireResponse(
                    instrument=instrument,
                    participant_id=pid.strip(),
                    items=tuple(float(s) for s in scores),
                )
            )
    return rows


def collect_records(logs_dir: str | Path) -> dict[str, list[SessionRecord]]:
    """Load finished session records from a directory of .pmtlog files.

    The participant id is the filename stem up to the first underscore,
    so "B_s5.pmtlog" belongs to participant B.
    """
    records: dict[str, list[SessionRecord]] = {}
    for path in sorted(Path(logs_dir).glob("*.pmtlog")):
        log = read_log(path)
        if not log.session_ended:
            raise AnalyticsError(f"{path.name}: session never ended")
        ending = next(e for e in log.entries if e.kind == "session_end")
        record = SessionRecord.from_dict(ending.payload["record"])
        pid = path.stem.split("_")[0]
        records.setdefault(pid, []).append(record)
    for pid in records:
        records[pid].sort(key=lambda r: r.session_number)
    return records


# ----------------------------------------------------------------------
# report


def _duration_columns(
    records_by_participant: dict[str, list[SessionRecord]],
) -> dict[str, dict[str, int]]:
    columns: dict[str, dict[str, int]] = {}
    for pid, records in records_by_participant.items():
        for record in records:
            if not record.scored:
                continue
            for task_id, seconds in record.durations.items():
                columns.setdefault(task_id, {})[pid] = seconds
    return columns


def correlation_table(
    records_by_participant: dict[str, list[SessionRecord]],
    participants: list[ParticipantScores],
) -> dict:
    """Aggregate achievement per category against MIST and imagery."""
    achievements = achievement_table(records_by_participant)
    predictors: dict[str, dict[str, float]] = {"mist": {}, "imagery": {}}
    for scores in participants:
        predictors["mist"][scores.participant_id] = scores.mist_total
        if scores.imagery_score is not None:
            predictors["imagery"][scores.participant_id] = scores.imagery_score
    table: dict = {}
    for category in RATE_CATEGORIES:
        table[category] = {}
        for predictor, values in predictors.items():
            pairs = [
                (values[pid], achievements[pid]["aggregate"][category]["rate"])
                for pid in sorted(values)
                if pid in achievements
                and category in achievements[pid]["aggregate"]
            ]
            if len(pairs) < 4:
                table[category][predictor] = None
                continue
            x = [a for a, _ in pairs]
            y = [b for _, b in pairs]
            try:
                table[category][predictor] = correlate(x, y).to_dict()
            except AnalyticsError:
                table[category][predictor] = None
    return table


def build_report(
    logs_dir: str | Path | None = None,
    participants_csv: str | Path | None = None,
    ueq_csv: str | Path | None = None,
    jikaku_csv: str | Path | None = None,
    records_by_participant: dict[str, list[SessionRecord]] | None = None,
) -> dict:
    if records_by_participant is None:
        records_by_participant = (
            collect_records(logs_dir) if logs_dir is not None else {}
        )
    report: dict = {
        "achievement": achievement_table(records_by_participant),
    }
    columns = _duration_columns(records_by_participant)
    if columns:
        normalized = normalize_durations(columns)
        report["durations"] = {
            task_id: {
                pid: {
                    "duration": nd.duration,
                    "normalized": nd.normalized,
                    "display": f"{nd.normalized:.3f}",
                }
                for pid, nd in sorted(cells.items())
            }
            for task_id, cells in sorted(normalized.items())
        }
    groups: dict[str, str] = {}
    if participants_csv is not None:
        participants = read_participants(participants_csv)
        groups = {p.participant_id: p.group for p in participants}
        report["correlations"] = correlation_table(
            records_by_participant, participants
        )
    responses: list[QuestionnaireResponse] = []
    if ueq_csv is not None:
        responses.extend(read_questionnaire_csv(ueq_csv, UEQ_S))
    if jikaku_csv is not None:
        responses.extend(read_questionnaire_csv(jikaku_csv, JIKAKU_SHO))
    if responses:
        report["questionnaires"] = score_questionnaire(responses, groups)
    return report


def write_report(report: dict, path: str | Path) -> None:
    Path(path).write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")


# ----------------------------------------------------------------------
# bundled reference tables


def fixtures_dir() -> Path:
    return Path(__file__).parent / "fixtures"


@dataclass(frozen=True, slots=True)
class FixtureCheck:
    name: str
    rows: int
    problems: tuple[str, ...]

    @property
    def ok(self) -> bool:
        return not self.problems


def check_table4(path: str | Path | None = None) -> FixtureCheck:
    """Recompute CI bounds and p for each published correlation row.

    Exactly printed p-values must match within +-0.001; thresholded
    rows ("<0.0001") must at least fall under 0.0005 with the exact
    t-test, a documented method difference.
    """
    path = Path(path) if path else fixtures_dir() / "table4.csv"
    problems = []
    count = 0
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            count += 1
            label = f"{row['task_type']}/{row['predictor']}"
            r = float(row["r"])
            n = int(row["n"])
            lo, hi = fisher_ci(r, n)
            for name, got, want in (
                ("ci_low", lo, float(row["ci_low"])),
                ("ci_high", hi, float(row["ci_high"])),
            ):
                if abs(got - want) > 0.002:
                    problems.append(
                        f"{label}: {name} {got:.4f} vs printed {want}"
                    )
            p = p_value(r, n)
            printed = row["p"].strip()
            if printed.startswith("<"):
                if p > 0.0005:
                    problems.append(
                        f"{label}: p {p:.6f} not under printed "
                        f"threshold {printed}"
                    )
            elif abs(p - float(printed)) > 0.001:
                problems.append(f"{label}: p {p:.4f} vs printed {printed}")
    return FixtureCheck("table4", count, tuple(problems))


SESSION_TASK_COUNTS = {5: 7, 6: 8, 7: 9, 8: 10}


def check_table5(path: str | Path | None = None) -> FixtureCheck:
    """Every printed rate must be k/n for the session's task count."""
    path = Path(path) if path else fixtures_dir() / "table5.csv"
    problems = []
    count = 0
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            count += 1
            for session, n in SESSION_TASK_COUNTS.items():
                printed = float(row[f"s{session}"])
                k = round(printed * n)
                if abs(printed - k / n) > 0.0005:
                    problems.append(
                        f"{row['participant']}/s{session}: {printed} "
                        f"is not a multiple of 1/{n}"
                    )
    return FixtureCheck("table5", count, tuple(problems))


def check_table7(path: str | Path | None = None) -> FixtureCheck:
    """Recompute the min-max normalization from the raw durations."""
    path = Path(path) if path else fixtures_dir() / "table7.csv"
    columns: dict[str, dict[str, int]] = {}
    printed: dict[tuple[str, str], float] = {}
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            task, pid = row["task"], row["participant"]
            columns.setdefault(task, {})[pid] = parse_mmss(row["duration"])
            printed[(task, pid)] = float(row["normalized"])
    problems = []
    normalized = normalize_durations(columns)
    for (task, pid), want in printed.items():
        got = round(normalized[task][pid].normalized, 3)
        if abs(got - want) > 0.001:
            problems.append(f"{pid}/{task}: {got:.3f} vs printed {want}")
    return FixtureCheck("table7", len(printed), tuple(problems))


def check_fixtures() -> dict:
    checks = [check_table4(), check_table5(), check_table7()]
    return {
        "ok": all(c.ok for c in checks),
        "checks": {
            c.name: {"rows": c.rows, "problems": list(c.problems)}
            for c in checks
        },
    }
