"""Socket transports for the session protocol.

Two transports carry the same JSON messages: a raw TCP stream with
4-byte big-endian length prefixes (used by the CLI, tests, and replay
tooling) and WebSocket text frames for the browser console. Each
connection drives at most one session; sessions live in a registry so a
reconnecting client can resume its board with start{resume: id}.
"""
from __future__ import annotations

import asyncio
import json
import struct
from pathlib import Path
from typing import Optional

from .predictor import Models
from .session import (
    OutOfOrderError,
    ProtocolError,
    Session,
    SessionConfig,
    open_session,
    write_session_log,
)

_LEN = struct.Struct(">I")
MAX_FRAME = 1 << 22


def encode_frame(msg: dict) -> bytes:
    payload = json.dumps(msg, sort_keys=True, separators=(",", ":")).encode()
    return _LEN.pack(len(payload)) + payload


class FrameParser:
    """Incremental decoder for length-prefixed JSON frames."""

    def __init__(self):
        self._buf = bytearray()

    def feed(self, data: bytes) -> list[dict]:
        self._buf.extend(data)
        out = []
        while True:
            if len(self._buf) < _LEN.size:
                return out
            (length,) = _LEN.unpack(self._buf[: _LEN.size])
            if length > MAX_FRAME:
                raise ProtocolError(f"frame too large: {length}")
            if len(self._buf) < _LEN.size + length:
                return out
            payload = bytes(self._buf[_LEN.size : _LEN.size + length])
            del self._buf[: _LEN.size + length]
            try:
                out.append(json.loads(payload))
            except json.JSONDecodeError as exc:
                raise ProtocolError(f"bad JSON frame: {exc}")


class SessionServer:
    def __init__(
        self,
        models: Models,
        models_hash: str,
        config: SessionConfig = SessionConfig(),
        log_dir: Optional[str] = None,
    ):
        self.models = models
        self.models_hash = models_hash
        self.config = config
        self.log_dir = Path(log_dir) if log_dir else None
        self.sessions: dict[str, Session] = {}

    # -- transport-independent message handling -----------------------------

    def handle(self, holder: dict, msg: dict) -> list[dict]:
        """holder: per-connection {'session': Session | None}."""
        try:
            if not isinstance(msg, dict):
                raise ProtocolError("message must be a JSON object")
            if msg.get("tag") == "start":
                return self._handle_start(holder, msg)
            session = holder.get("session")
            if session is None:
                raise ProtocolError("first message must be start")
            return session.ingest(msg)
        except (ProtocolError, OutOfOrderError) as exc:
            return [
                {
                    "tag": "error",
                    "t": getattr(holder.get("session"), "clock", 0.0),
                    "code": type(exc).__name__,
                    "detail": str(exc),
                }
            ]

    def _handle_start(self, holder: dict, msg: dict) -> list[dict]:
        if holder.get("session") is not None:
            raise ProtocolError("connection already has a session")
        resume = msg.get("resume")
        if resume is not None:
            session = self.sessions.get(resume)
            if session is None:
                raise ProtocolError(f"no session {resume!r} to resume")
            holder["session"] = session
            return [session._board_msg()]  # resend state, do not re-log start
        try:
            seed = int(msg["seed"])
            mode = str(msg.get("mode", "off"))
        except (KeyError, TypeError, ValueError):
            raise ProtocolError("start needs integer seed")
        session = open_session(
            seed, mode, self.models, self.models_hash, self.config
        )
        responses = session.ingest(msg)
        self.sessions[session.id] = session
        holder["session"] = session
        return responses

    def flush_log(self, session: Optional[Session]) -> Optional[Path]:
        if session is None or self.log_dir is None:
            return None
        self.log_dir.mkdir(parents=True, exist_ok=True)
        path = self.log_dir / f"{session.id}.jsonl"
        write_session_log(session, path)
        return path

    # -- TCP ------------------------------------------------------------------

    async def handle_tcp(self, reader: asyncio.StreamReader,
                         writer: asyncio.StreamWriter) -> None:
        holder: dict = {"session": None}
        parser = FrameParser()
        try:
            while True:
                data = await reader.read(65536)
                if not data:
                    break
                try:
                    msgs = parser.feed(data)
                except ProtocolError as exc:
                    writer.write(encode_frame(
                        {"tag": "error", "t": 0.0, "code": "ProtocolError",
                         "detail": str(exc)}
                    ))
                    await writer.drain()
                    break
                for msg in msgs:
                    for response in self.handle(holder, msg):
                        writer.write(encode_frame(response))
                await writer.drain()
        finally:
            self.flush_log(holder.get("session"))
            writer.close()
            try:
                await writer.wait_closed()
            except (ConnectionError, OSError):
                pass

    async def serve_tcp(self, host: str, port: int) -> asyncio.AbstractServer:
        return await asyncio.start_server(self.handle_tcp, host, port)

    # -- WebSocket -------------------------------------------------------------

    async def handle_ws(self, websocket) -> None:
        holder: dict = {"session": None}
        try:
            async for raw in websocket:
                try:
                    msg = json.loads(raw)
                except json.JSONDecodeError as exc:
                    await websocket.send(json.dumps(
                        {"tag": "error", "t": 0.0, "code": "ProtocolError",
                         "detail": f"bad JSON: {exc}"}
                    ))
                    continue
                for response in self.handle(holder, msg):
                    await websocket.send(
                        json.dumps(response, sort_keys=True,
                                   separators=(",", ":"))
                    )
        finally:
            self.flush_log(holder.get("session"))

    async def serve_ws(self, host: str, port: int):
        import websockets

        return await websockets.serve(self.handle_ws, host, port)


async def serve_forever(
    server: SessionServer,
    tcp_addr: Optional[tuple[str, int]] = None,
    ws_addr: Optional[tuple[str, int]] = None,
    on_ready=None,
) -> None:
    if tcp_addr is None and ws_addr is None:
        raise ValueError("need at least one listen address")
    waiters = []
    bound = []
    if tcp_addr is not None:
        tcp = await server.serve_tcp(*tcp_addr)
        waiters.append(tcp.serve_forever())
        bound.append(("tcp", tcp_addr))
    if ws_addr is not None:
        await server.serve_ws(*ws_addr)
        waiters.append(asyncio.Future())
        bound.append(("ws", ws_addr))
    if on_ready is not None:
        on_ready(bound)
    await asyncio.gather(*waiters)
