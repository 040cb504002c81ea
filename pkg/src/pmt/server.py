"""Live session endpoint.

One asyncio server on one port speaks three dialects, told apart by the
first bytes of each connection:

- a line starting with ``{`` is a newline-delimited message stream (the
  agent/test transport);
- an HTTP request with an Upgrade header becomes a WebSocket carrying
  one message per text frame (the browser transport);
- any other HTTP GET serves static client files, the world document,
  and the finished record.

Only one session connection may be attached at a time; the engine stays
the single writer, fed by a wall-clock driver task that advances it to
the minute boundaries between commands. The server shuts down once the
session ends.
"""

from __future__ import annotations

import asyncio
import base64
import hashlib
import json
from pathlib import Path

from .engine import EngineError, SessionEngine
from .protocol import (
    CLIENT_TO_ENGINE,
    ProtocolError,
    ProtocolMessage,
    decode,
    encode,
)

WS_GUID = "258EAFA5-E914-47DA-95CA-C5AB0DC85B11"

CONTENT_TYPES = {
    ".html": "text/html; charset=utf-8",
    ".js": "application/javascript",
    ".mjs": "application/javascript",
    ".css": "text/css",
    ".json": "application/json",
    ".map": "application/json",
    ".svg": "image/svg+xml",
    ".png": "image/png",
    ".ico": "image/x-icon",
    ".txt": "text/plain; charset=utf-8",
}

POLL_SECONDS = 0.02


def _server_error_frame(code: str, text: str) -> str:
    # transport-level rejections sit outside the engine's seq stream
    return json.dumps(
        {
            "kind": "error",
            "seq": 0,
            "payload": {"code": code, "text": text},
        },
        sort_keys=True,
        separators=(",", ":"),
    )


class SessionServer:
    def __init__(
        self,
        engine: SessionEngine,
        host: str = "127.0.0.1",
        port: int = 0,
        ui_dir: str | Path | None = None,
    ):
        self.engine = engine
        self.host = host
        self.port = port
        self.ui_dir = Path(ui_dir).resolve() if ui_dir is not None else None
        self._server: asyncio.Server | None = None
        self._driver: asyncio.Task | None = None
        self._send_queue: asyncio.Queue | None = None
        self._last_client_seq = 0
        self._engine_started = False
        self._connections: set[asyncio.Task] = set()
        self.closed = asyncio.Event()

    # ------------------------------------------------------------------
    # lifecycle

    async def start(self) -> None:
        self._server = await asyncio.start_server(
            self._handle_connection, self.host, self.port
        )
        self.port = self._server.sockets[0].getsockname()[1]
        self._driver = asyncio.create_task(self._drive())

    async def serve_until_done(self) -> None:
        await self.start()
        await self.closed.wait()
        await self._shutdown()

    async def _shutdown(self) -> None:
        if self._driver is not None:
            self._driver.cancel()
        if self._server is not None:
            self._server.close()
            await self._server.wait_closed()
        for task in list(self._connections):
            task.cancel()
        if self._connections:
            await asyncio.gather(*self._connections, return_exceptions=True)

    def _ensure_engine_started(self) -> None:
        if not self._engine_started:
            self._engine_started = True
            self.engine.start()

    async def _drive(self) -> None:
        loop = asyncio.get_running_loop()
        last = loop.time()
        carry = 0.0
        while not self.engine.session_ended:
            await asyncio.sleep(POLL_SECONDS)
            now = loop.time()
            carry += (now - last) * 1000
            last = now
            if not self._engine_started:
                continue
            step = int(carry)
            carry -= step
            if (
                step > 0
                and self.engine.day_started
                and not self.engine.paused
            ):
                self.engine.advance(step)
                self._flush()
        self.closed.set()

    def _flush(self) -> None:
        messages = self.engine.drain()
        if self._send_queue is None:
            return
        for message in messages:
            self._send_queue.put_nowait(encode(message))

    # ------------------------------------------------------------------
    # connection dispatch

    async def _handle_connection(
        self, reader: asyncio.StreamReader, writer: asyncio.StreamWriter
    ) -> None:
        task = asyncio.current_task()
        if task is not None:
            self._connections.add(task)
        try:
            first = await reader.read(1)
            if not first:
                return
            if first == b"{":
                await self._serve_ndjson(reader, writer, first)
            else:
                await self._serve_http(reader, writer, first)
        except (
            asyncio.IncompleteReadError,
            ConnectionError,
            asyncio.LimitOverrunError,
        ):
            pass
        finally:
            if task is not None:
                self._connections.discard(task)
            writer.close()
            try:
                await writer.wait_closed()
            except (ConnectionError, OSError):
                pass

    # ------------------------------------------------------------------
    # session transports

    async def _attach_session(self, send_line) -> bool:
        if self._send_queue is not None:
            await send_line(
                _server_error_frame(
                    "session_busy", "Another client holds this session."
                )
            )
            return False
        self._send_queue = asyncio.Queue()
        self._last_client_seq = 0
        self._ensure_engine_started()
        self._flush()
        return True

    def _detach_session(self) -> None:
        self._send_queue = None

    def _apply_command(self, line: str) -> None:
        message = decode(line)
        if message.direction != CLIENT_TO_ENGINE:
            raise ProtocolError(
                f"clients may not send {message.kind!r} frames"
            )
        if message.seq <= self._last_client_seq:
            raise ProtocolError(
                f"client seq {message.seq} not above {self._last_client_seq}"
            )
        self._last_client_seq = message.seq
        self.engine.submit(message)
        self._flush()

    async def _serve_ndjson(
        self,
        reader: asyncio.StreamReader,
        writer: asyncio.StreamWriter,
        first: bytes,
    ) -> None:
        async def send_line(line: str) -> None:
            writer.write(line.encode("utf-8") + b"\n")
            await writer.drain()

        if not await self._attach_session(send_line):
            return
        queue = self._send_queue

        async def pump() -> None:
            while True:
                line = await queue.get()
                await send_line(line)

        sender = asyncio.create_task(pump())
        buffer = first
        try:
            while not self.engine.session_ended:
                chunk = await reader.readline()
                if not chunk:
                    break
                line = (buffer + chunk).decode("utf-8").strip()
                buffer = b""
                if not line:
                    continue
                try:
                    self._apply_command(line)
                except (ProtocolError, EngineError) as exc:
                    await send_line(
                        _server_error_frame("rejected", str(exc))
                    )
            # let queued events (session_end among them) finish sending
            while not queue.empty():
                await send_line(queue.get_nowait())
        finally:
            sender.cancel()
            self._detach_session()

    async def _serve_websocket(
        self,
        reader: asyncio.StreamReader,
        writer: asyncio.StreamWriter,
        headers: dict[str, str],
    ) -> None:
        key = headers.get("sec-websocket-key", "")
        accept = base64.b64encode(
            hashlib.sha1((key + WS_GUID).encode("ascii")).digest()
        ).decode("ascii")
        writer.write(
            b"HTTP/1.1 101 Switching Protocols\r\n"
            b"Upgrade: websocket\r\n"
            b"Connection: Upgrade\r\n"
            b"Sec-WebSocket-Accept: " + accept.encode("ascii") + b"\r\n\r\n"
        )
        await writer.drain()

        async def send_text(line: str) -> None:
            writer.write(_ws_frame(0x1, line.encode("utf-8")))
            await writer.drain()

        if not await self._attach_session(send_text):
            writer.write(_ws_frame(0x8, b""))
            await writer.drain()
            return
        queue = self._send_queue

        async def pump() -> None:
            while True:
                line = await queue.get()
                await send_text(line)

        sender = asyncio.create_task(pump())
        try:
            while not self.engine.session_ended:
                message = await _ws_read_message(reader, writer)
                if message is None:
                    break
                line = message.strip()
                if not line:
                    continue
                try:
                    self._apply_command(line)
                except (ProtocolError, EngineError) as exc:
                    await send_text(_server_error_frame("rejected", str(exc)))
            while not queue.empty():
                await send_text(queue.get_nowait())
            writer.write(_ws_frame(0x8, b""))
            await writer.drain()
        finally:
            sender.cancel()
            self._detach_session()

    # ------------------------------------------------------------------
    # http

    async def _serve_http(
        self,
        reader: asyncio.StreamReader,
        writer: asyncio.StreamWriter,
        first: bytes,
    ) -> None:
        raw = first + await reader.readuntil(b"\r\n\r\n")
        head = raw.decode("latin-1")
        request_line, *header_lines = head.split("\r\n")
        parts = request_line.split(" ")
        if len(parts) != 3:
            await _http_respond(writer, 400, "text/plain", b"bad request")
            return
        method, target, _ = parts
        headers = {}
        for line in header_lines:
            name, sep, value = line.partition(":")
            if sep:
                headers[name.strip().lower()] = value.strip()
        if "websocket" in headers.get("upgrade", "").lower():
            await self._serve_websocket(reader, writer, headers)
            return
        if method != "GET":
            await _http_respond(writer, 405, "text/plain", b"GET only")
            return
        await self._serve_static(writer, target.split("?", 1)[0])

    async def _serve_static(
        self, writer: asyncio.StreamWriter, path: str
    ) -> None:
        if path == "/world":
            body = json.dumps(self.engine.world.to_dict()).encode("utf-8")
            await _http_respond(writer, 200, "application/json", body)
            return
        if path == "/session":
            body = json.dumps(
                {
                    "session": self.engine.plan.session_number,
                    "phase": self.engine.plan.phase,
                    "compression_factor": self.engine.plan.compression_factor,
                    "ended": self.engine.session_ended,
                }
            ).encode("utf-8")
            await _http_respond(writer, 200, "application/json", body)
            return
        if path == "/record":
            if self.engine.record is None:
                await _http_respond(
                    writer, 404, "text/plain", b"session still running"
                )
                return
            body = json.dumps(self.engine.record.to_dict()).encode("utf-8")
            await _http_respond(writer, 200, "application/json", body)
            return
        if self.ui_dir is None:
            await _http_respond(writer, 404, "text/plain", b"no ui bundle")
            return
        name = path.lstrip("/") or "index.html"
        candidate = (self.ui_dir / name).resolve()
        if not candidate.is_relative_to(self.ui_dir) or not candidate.is_file():
            await _http_respond(writer, 404, "text/plain", b"not found")
            return
        content_type = CONTENT_TYPES.get(
            candidate.suffix, "application/octet-stream"
        )
        await _http_respond(writer, 200, content_type, candidate.read_bytes())


async def _http_respond(
    writer: asyncio.StreamWriter, status: int, content_type: str, body: bytes
) -> None:
    reason = {200: "OK", 400: "Bad Request", 404: "Not Found", 405: "Method Not Allowed"}.get(
        status, "OK"
    )
    writer.write(
        f"HTTP/1.1 {status} {reason}\r\n"
        f"Content-Type: {content_type}\r\n"
        f"Content-Length: {len(body)}\r\n"
        f"Access-Control-Allow-Origin: *\r\n"
        f"Connection: close\r\n\r\n".encode("latin-1") + body
    )
    await writer.drain()


# ----------------------------------------------------------------------
# websocket framing (server side of RFC 6455)


def _ws_frame(opcode: int, payload: bytes) -> bytes:
    head = bytes([0x80 | opcode])
    n = len(payload)
    if n < 126:
        head += bytes([n])
    elif n < 1 << 16:
        head += bytes([126]) + n.to_bytes(2, "big")
    else:
        head += bytes([127]) + n.to_bytes(8, "big")
    return head + payload


async def _ws_read_frame(reader: asyncio.StreamReader):
    head = await reader.readexactly(2)
    fin = bool(head[0] & 0x80)
    opcode = head[0] & 0x0F
    masked = bool(head[1] & 0x80)
    length = head[1] & 0x7F
    if length == 126:
        length = int.from_bytes(await reader.readexactly(2), "big")
    elif length == 127:
        length = int.from_bytes(await reader.readexactly(8), "big")
    mask = await reader.readexactly(4) if masked else None
    payload = await reader.readexactly(length) if length else b""
    if mask is not None:
        payload = bytes(b ^ mask[i % 4] for i, b in enumerate(payload))
    elif length:
        # client frames must be masked; treat bare ones as a protocol fault
        raise ProtocolError("unmasked client frame")
    return fin, opcode, payload


async def _ws_read_message(
    reader: asyncio.StreamReader, writer: asyncio.StreamWriter
) -> str | None:
    """Next text message, transparently answering pings. None on close."""
    fragments: list[bytes] = []
    try:
        while True:
            fin, opcode, payload = await _ws_read_frame(reader)
            if opcode == 0x8:
                writer.write(_ws_frame(0x8, b""))
                await writer.drain()
                return None
            if opcode == 0x9:
                writer.write(_ws_frame(0xA, payload))
                await writer.drain()
                continue
            if opcode == 0xA:
                continue
            if opcode in (0x1, 0x0, 0x2):
                fragments.append(payload)
                if fin:
                    return b"".join(fragments).decode("utf-8")
    except (asyncio.IncompleteReadError, ProtocolError, ConnectionError):
        return None


async def serve_session(
    engine: SessionEngine,
    host: str = "127.0.0.1",
    port: int = 0,
    ui_dir: str | Path | None = None,
) -> SessionServer:
    server = SessionServer(engine, host=host, port=port, ui_dir=ui_dir)
    await server.start()
    return server
