"""WebSocket debug protocol server.

Wire format (normative schema in docs/protocol.md): one JSON document per
text frame. Requests carry a client-chosen token that the single matching
response echoes; events (stopped/resumed/ended) carry no token and are
broadcast to every connected client. Command application to the debugger
core is strictly serialized through a single worker, regardless of how many
clients are connected.
"""

from __future__ import annotations

import asyncio
import json
import os
import threading
from concurrent.futures import ThreadPoolExecutor
from typing import Optional

from websockets.asyncio.server import serve

from .expr import ExprError, Value
from .runtime import (
    BreakpointError,
    DebuggerCore,
    DebuggerError,
    FrameSnapshot,
    StopEvent,
)
from .simbackends.base import CapabilityError, SimError
from .symtab import SymbolTableError

DEFAULT_PORT = 8888
PORT_ENV_VAR = "HGDBG_PORT"

_RESUME_COMMANDS = {
    "continue": "continue",
    "step-over": "step_over",
    "reverse-continue": "reverse_continue",
    "reverse-step": "reverse_step",
}


class CommandError(Exception):
    def __init__(self, reason: str):
        super().__init__(reason)
        self.reason = reason


def default_port() -> int:
    raw = os.environ.get(PORT_ENV_VAR)
    if raw:
        try:
            return int(raw)
        except ValueError:
            pass
    return DEFAULT_PORT


# --- serialization ---

def value_to_wire(value) -> object:
    """Values as decimal strings plus width; "x" for unknown; nested trees
    (arrays, bundles) serialize structurally."""
    if value is None:
        return {"value": "unavailable"}
    if isinstance(value, Value):
        return {"value": str(value.bits) if value.known else "x", "width": value.width}
    if isinstance(value, list):
        return [value_to_wire(v) for v in value]
    if isinstance(value, dict):
        return {k: value_to_wire(v) for k, v in value.items()}
    raise TypeError(f"cannot serialize {value!r}")


def source_to_wire(key) -> Optional[dict]:
    if key is None:
        return None
    file, line, column, ordinal = key
    return {"file": file, "line": line, "column": column, "ordinal": ordinal}


def frame_to_wire(frame: FrameSnapshot) -> dict:
    return {
        "thread": frame.thread,
        "breakpoint_id": frame.breakpoint_id,
        "source": source_to_wire(frame.key),
        "time": frame.time,
        "fired": frame.fired,
        "locals": [[name, value_to_wire(v)] for name, v in frame.locals],
        "instance_vars": [[name, value_to_wire(v)] for name, v in frame.instance_vars],
    }


def stop_to_wire(stop: StopEvent) -> dict:
    payload = {
        "stop_id": stop.stop_id,
        "time": stop.time,
        "reason": stop.reason,
        "source": source_to_wire(stop.key),
        "threads": [
            {"instance": f.thread, "breakpoint_id": f.breakpoint_id, "fired": f.fired}
            for f in stop.frames
        ],
    }
    if stop.notice:
        payload["notice"] = stop.notice
    return payload


class DebugServer:
    """Serves one DebuggerCore to any number of protocol clients."""

    def __init__(self, core: DebuggerCore, host: str = "127.0.0.1",
                 port: Optional[int] = None, source_root: str = "."):
        self.core = core
        self.host = host
        self.port = default_port() if port is None else port
        self.source_root = source_root
        self._loop: Optional[asyncio.AbstractEventLoop] = None
        self._thread: Optional[threading.Thread] = None
        self._workload: Optional[threading.Thread] = None
        self._clients: set = set()
        self._ready = threading.Event()
        self._stopping = False
        # Single worker: command application is strictly serialized.
        self._executor = ThreadPoolExecutor(max_workers=1)
        self._allowed_files = {b.file for b in core.table.breakpoints}
        core.add_listener(self._core_event)

    # --- lifecycle ---

    def start(self) -> int:
        """Start serving; returns the bound port (0 requests an ephemeral one)."""
        self._thread = threading.Thread(target=self._serve_thread, daemon=True)
        self._thread.start()
        if not self._ready.wait(timeout=10):
            raise RuntimeError("server failed to start")
        return self.port

    def start_workload(self, paused: bool = True):
        """Run the simulation on a worker thread; paused=True stops at the
        first edge so clients can set breakpoints before anything happens."""
        if paused:
            self.core.pause()
        self._workload = threading.Thread(target=self.core.run, daemon=True)
        self._workload.start()

    def wait_workload(self, timeout: Optional[float] = None):
        if self._workload is not None:
            self._workload.join(timeout)

    def stop(self):
        self._stopping = True
        if self._loop is not None:
            asyncio.run_coroutine_threadsafe(self._shutdown(), self._loop).result(timeout=5)
            self._thread.join(timeout=5)
        self._executor.shutdown(wait=False)

    async def _shutdown(self):
        self._server.close()
        await self._server.wait_closed()
        for task in asyncio.all_tasks(self._loop):
            if task is not asyncio.current_task():
                task.cancel()

    def _serve_thread(self):
        asyncio.run(self._serve_main())

    async def _serve_main(self):
        self._loop = asyncio.get_running_loop()
        async with serve(self._handler, self.host, self.port) as server:
            self._server = server
            self.port = server.sockets[0].getsockname()[1]
            self._ready.set()
            try:
                await asyncio.get_running_loop().create_future()  # run until cancelled
            except asyncio.CancelledError:
                pass

    # --- events ---

    def _core_event(self, kind: str, payload):
        if self._loop is None:
            return
        if kind == "stopped":
            message = {"type": "event", "event": "stopped", "payload": stop_to_wire(payload)}
        elif kind == "resumed":
            message = {"type": "event", "event": "resumed", "payload": payload}
        else:
            message = {"type": "event", "event": kind, "payload": payload}
        try:
            asyncio.run_coroutine_threadsafe(self._broadcast(message), self._loop)
        except RuntimeError:
            pass  # loop already closed during shutdown

    async def _broadcast(self, message: dict):
        text = json.dumps(message, sort_keys=True)
        for client in list(self._clients):
            try:
                await client.send(text)
            except Exception:
                self._clients.discard(client)

    # --- request handling ---

    async def _handler(self, websocket):
        self._clients.add(websocket)
        try:
            async for raw in websocket:
                response = await self._handle_raw(raw)
                await websocket.send(json.dumps(response, sort_keys=True))
        except Exception:
            pass
        finally:
            self._clients.discard(websocket)

    async def _handle_raw(self, raw) -> dict:
        token = ""
        command = ""
        try:
            message = json.loads(raw)
        except (json.JSONDecodeError, UnicodeDecodeError):
            return self._error(token, command, "malformed JSON")
        if not isinstance(message, dict):
            return self._error(token, command, "malformed JSON: expected an object")
        token = message.get("token") if isinstance(message.get("token"), str) else ""
        command = message.get("command", "")
        if message.get("type") != "request":
            return self._error(token, command, "expected a request message")
        if not isinstance(command, str) or not command:
            return self._error(token, command, "missing command")
        payload = message.get("payload", {})
        if not isinstance(payload, dict):
            return self._error(token, command, "payload must be an object")
        loop = asyncio.get_running_loop()
        try:
            result = await loop.run_in_executor(
                self._executor, self._dispatch, command, payload
            )
            return {
                "type": "response", "token": token, "command": command,
                "status": "success", "payload": result,
            }
        except CommandError as e:
            return self._error(token, command, e.reason)
        except CapabilityError:
            return self._error(token, command, "capability")
        except (BreakpointError, DebuggerError, SymbolTableError, SimError,
                ExprError) as e:
            return self._error(token, command, str(e))
        except Exception as e:  # internal
            return self._error(token, command, f"internal error: {e}")

    def _error(self, token: str, command: str, reason: str) -> dict:
        return {
            "type": "response", "token": token, "command": command,
            "status": "error", "reason": reason, "payload": {},
        }

    # --- command dispatch (executes on the single command worker) ---

    def _dispatch(self, command: str, payload: dict):
        core = self.core
        if command == "set-breakpoint":
            file, line = self._need(payload, "file", str), self._need(payload, "line", int)
            ids = core.execute(lambda: core.insert_breakpoint(
                file, line, payload.get("column"), payload.get("condition")))
            return {"ids": ids}
        if command == "remove-breakpoint":
            if "id" in payload:
                bp_id = self._need(payload, "id", int)
                removed = core.execute(lambda: core.remove_breakpoint(bp_id=bp_id))
            else:
                file, line = self._need(payload, "file", str), self._need(payload, "line", int)
                removed = core.execute(lambda: core.remove_breakpoint(
                    file=file, line=line, column=payload.get("column")))
            return {"removed": removed}
        if command == "list-breakpoints":
            rows = core.execute(core.list_breakpoints)
            return {"breakpoints": [
                {
                    "id": ib.id, "file": ib.row.file, "line": ib.row.line,
                    "column": ib.row.column, "ordinal": ib.row.ordinal,
                    "instance": ib.instance, "enable": ib.row.enable,
                    "condition": ib.condition_text,
                }
                for ib in rows
            ]}
        if command in _RESUME_COMMANDS:
            if not core.paused:
                raise CommandError("not paused")
            core.resume(_RESUME_COMMANDS[command])
            return {}
        if command == "pause":
            core.pause()
            return {}
        if command == "frames":
            stop = core.stop(self._need(payload, "stop_id", int))
            return {"frames": [frame_to_wire(f) for f in stop.frames]}
        if command == "evaluate":
            text = self._need(payload, "expr", str)
            value = core.execute(lambda: core.evaluate(text, payload.get("thread")))
            return {"result": value_to_wire(value)}
        if command == "set-value":
            name = self._need(payload, "name", str)
            value = self._need(payload, "value", int)
            core.execute(lambda: core.set_value(name, value, payload.get("thread")))
            return {}
        if command == "set-time":
            t = self._need(payload, "time", int)
            core.execute(lambda: core.sim.set_time(t))
            return {}
        if command == "info":
            return self._info(payload)
        raise CommandError(f"unknown command {command!r}")

    def _need(self, payload: dict, key: str, kind):
        value = payload.get(key)
        if kind is int and isinstance(value, bool):
            raise CommandError(f"field {key!r} must be {kind.__name__}")
        if not isinstance(value, kind):
            raise CommandError(f"field {key!r} must be {kind.__name__}")
        return value

    def _info(self, payload: dict):
        category = self._need(payload, "category", str)
        core = self.core
        if category == "threads":
            return {"threads": core.execute(core.threads)}
        if category == "time":
            return {"time": core.execute(core.sim.get_time)}
        if category == "capabilities":
            return {"capabilities": core.capabilities()}
        if category == "hierarchy":
            def serialize(node):
                return {
                    "name": node.name,
                    "signals": [{"name": n, "width": w} for n, w in node.signals],
                    "children": [serialize(c) for c in node.children],
                }
            return {"hierarchy": core.execute(lambda: serialize(core.sim.get_hierarchy()))}
        if category == "file":
            path = self._need(payload, "path", str)
            if path not in self._allowed_files:
                raise CommandError(f"unknown source file {path!r}")
            full = os.path.join(self.source_root, path)
            try:
                with open(full, encoding="utf-8") as f:
                    return {"path": path, "content": f.read()}
            except OSError as e:
                raise CommandError(f"cannot read {path!r}: {e.strerror}") from None
        raise CommandError(f"unknown info category {category!r}")
