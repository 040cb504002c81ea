"""Wire protocol codec and the append-only session log.

Frames are single lines of canonical JSON with fixed top-level field
order (kind, seq, payload) and sorted payload keys, so a frame is
byte-stable and doubles as the log representation. Log files use the
`.pmtlog` extension: a header entry at seq 0, one entry per line, and a
final checksum line covering every line after the header (the header
carries the only non-deterministic field, its creation timestamp).
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Iterable

CLIENT_TO_ENGINE = "client_to_engine"
ENGINE_TO_CLIENT = "engine_to_client"

CLIENT_KINDS = (
    "join",
    "ack_briefing",
    "move",
    "interact",
    "select_choice",
    "start_distractor",
    "stop_distractor",
    "pause",
    "resume",
    "vit_answer",
)
ENGINE_KINDS = (
    "state_snapshot",
    "clock_tick",
    "task_briefing",
    "task_popup",
    "reminder",
    "alert_sound",
    "dialog_confirm",
    "task_result",
    "vit_item",
    "session_end",
    "error",
)
# log-only record kinds, never sent over the wire
LOG_KINDS = ("log_header", "cue_raised")

HEADER_KIND = "log_header"
LOG_FORMAT = "pmtlog/1"


class ProtocolError(ValueError):
    pass


@dataclass(frozen=True, slots=True)
class ProtocolMessage:
    direction: str
    kind: str
    seq: int
    payload: dict

    def __post_init__(self) -> None:
        if self.direction == CLIENT_TO_ENGINE:
            known = CLIENT_KINDS
        elif self.direction == ENGINE_TO_CLIENT:
            known = ENGINE_KINDS
        else:
            raise ProtocolError(f"unknown direction {self.direction!r}")
        if self.kind not in known:
            raise ProtocolError(f"unknown message kind {self.kind!r}")
        if self.seq < 0:
            raise ProtocolError("seq must be non-negative")


def encode(message: ProtocolMessage) -> str:
    """One canonical line: fixed field order, sorted payload keys."""
    payload = json.dumps(
        message.payload, sort_keys=True, separators=(",", ":")
    )
    return (
        f'{{"kind":{json.dumps(message.kind)},'
        f'"seq":{message.seq},'
        f'"payload":{payload}}}'
    )


def decode(line: str) -> ProtocolMessage:
    try:
        doc = json.loads(line)
    except json.JSONDecodeError as exc:
        raise ProtocolError(f"frame is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ProtocolError("frame must be a JSON object")
    for field in ("kind", "seq", "payload"):
        if field not in doc:
            raise ProtocolError(f"frame missing field {field!r}")
    kind = doc["kind"]
    if kind in CLIENT_KINDS:
        direction = CLIENT_TO_ENGINE
    elif kind in ENGINE_KINDS:
        direction = ENGINE_TO_CLIENT
    else:
        raise ProtocolError(f"unknown message kind {kind!r}")
    seq = doc["seq"]
    if not isinstance(seq, int) or isinstance(seq, bool):
        raise ProtocolError("seq must be an integer")
    payload = doc["payload"]
    if not isinstance(payload, dict):
        raise ProtocolError("payload must be an object")
    return ProtocolMessage(direction=direction, kind=kind, seq=seq, payload=payload)


@dataclass(frozen=True, slots=True)
class EventLogEntry:
    seq: int
    real_ms: int
    vtime: int
    kind: str
    payload: dict


def encode_entry(entry: EventLogEntry) -> str:
    payload = json.dumps(entry.payload, sort_keys=True, separators=(",", ":"))
    return (
        f'{{"seq":{entry.seq},'
        f'"real_ms":{entry.real_ms},'
        f'"vtime":{entry.vtime},'
        f'"kind":{json.dumps(entry.kind)},'
        f'"payload":{payload}}}'
    )


def decode_entry(line: str) -> EventLogEntry:
    try:
        doc = json.loads(line)
    except json.JSONDecodeError as exc:
        raise ProtocolError(f"log line is not valid JSON: {exc}") from exc
    for field in ("seq", "real_ms", "vtime", "kind", "payload"):
        if field not in doc:
            raise ProtocolError(f"log entry missing field {field!r}")
    kind = doc["kind"]
    if kind not in CLIENT_KINDS + ENGINE_KINDS + LOG_KINDS:
        raise ProtocolError(f"unknown log entry kind {kind!r}")
    return EventLogEntry(
        seq=doc["seq"],
        real_ms=doc["real_ms"],
        vtime=doc["vtime"],
        kind=kind,
        payload=doc["payload"],
    )


class LogWriter:
    """Append-only writer enforcing contiguous seq numbers.

    The checksum line hashes the byte content of every entry line after
    the header, newline included, so two runs of the same session are
    identical from line 2 onward.
    """

    def __init__(self, sink: IO[str], header_payload: dict):
        self._sink = sink
        self._hash = hashlib.sha256()
        self._last_seq = 0
        self._closed = False
        header = EventLogEntry(
            seq=0, real_ms=0, vtime=0, kind=HEADER_KIND,
            payload={"format": LOG_FORMAT, **header_payload},
        )
        self._sink.write(encode_entry(header) + "\n")

    def append(self, entry: EventLogEntry) -> None:
        if self._closed:
            raise ProtocolError("log already finalized")
        if entry.seq != self._last_seq + 1:
            raise ProtocolError(
                f"out-of-order seq {entry.seq}, expected {self._last_seq + 1}"
            )
        line = encode_entry(entry) + "\n"
        self._sink.write(line)
        self._hash.update(line.encode("utf-8"))
        self._last_seq = entry.seq

    def close(self) -> None:
        if self._closed:
            return
        self._sink.write(
            json.dumps({"checksum": f"sha256:{self._hash.hexdigest()}"},
                       separators=(",", ":"))
            + "\n"
        )
        self._sink.flush()
        self._closed = True


@dataclass(frozen=True, slots=True)
class LogFile:
    header: EventLogEntry
    entries: tuple[EventLogEntry, ...]
    checksum: str

    @property
    def session_ended(self) -> bool:
        return any(e.kind == "session_end" for e in self.entries)


def read_log(path: str | Path) -> LogFile:
    """Parse and verify a .pmtlog file.

    Raises on bad checksum, missing header, seq gaps, or truncation
    (no checksum line), reporting the last good seq.
    """
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines(keepends=True)
    if not lines:
        raise ProtocolError("log is empty")
    header = decode_entry(lines[0])
    if header.kind != HEADER_KIND or header.seq != 0:
        raise ProtocolError("log does not start with a header entry")
    digest = hashlib.sha256()
    entries: list[EventLogEntry] = []
    checksum: str | None = None
    last_good = 0
    for line in lines[1:]:
        stripped = line.rstrip("\n")
        doc = json.loads(stripped)
        if "checksum" in doc:
            checksum = doc["checksum"]
            break
        entry = decode_entry(stripped)
        if entry.seq != last_good + 1:
            raise ProtocolError(
                f"seq gap after {last_good}: found {entry.seq}"
            )
        digest.update(line.encode("utf-8"))
        entries.append(entry)
        last_good = entry.seq
    if checksum is None:
        raise ProtocolError(
            f"log truncated: no checksum line, last good seq {last_good}"
        )
    actual = f"sha256:{digest.hexdigest()}"
    if checksum != actual:
        raise ProtocolError(
            f"checksum mismatch: file says {checksum}, content is {actual}"
        )
    vtimes = [e.vtime for e in entries]
    if vtimes != sorted(vtimes):
        raise ProtocolError("entries are not ordered by virtual time")
    return LogFile(header=header, entries=tuple(entries), checksum=checksum)


def append_log(writer: LogWriter, entry: EventLogEntry) -> int:
    """Append one entry; returns the entry's seq as acknowledgment."""
    writer.append(entry)
    return entry.seq


def replay(log: LogFile | str | Path, world=None, catalog=None):
    """Re-drive a recorded session; returns the reconstructed record.

    Commands are fed back at their logged engine timestamps, so the
    rebuilt session must equal the recorded one field for field.
    """
    from . import engine as _engine  # imported here to avoid a cycle

    return _engine.replay_log(log, world=world, catalog=catalog)


def entries_of(log: LogFile, *kinds: str) -> Iterable[EventLogEntry]:
    for entry in log.entries:
        if entry.kind in kinds:
            yield entry
