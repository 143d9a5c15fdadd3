"""Debugger core: breakpoint insertion, the per-edge scheduling loop,
condition evaluation, frame reconstruction, and forward/reverse control.

At every rising clock edge the core visits scheduling groups (all inserted
breakpoints sharing one source location) in precomputed order. Each group's
members - one per hardware thread (module instance) - are evaluated
independently and side-effect-free: SSA enable condition AND user condition;
if any member fires, one stop event carrying a frame per firing thread is
emitted and the simulation blocks until a resume command. Visiting groups in
reverse order yields intra-cycle reverse debugging; when the backend can set
time, reversing past the first group steps to the previous edge and restarts
from the last group, extending reversal across cycles.

With no breakpoints inserted the edge callback is a constant-time check, so
an attached but idle debugger adds negligible simulation overhead.
"""

from __future__ import annotations

import threading
from collections import OrderedDict, deque
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

from . import symtab as st
from .expr import (
    EvalError,
    ExprAst,
    Lit,
    Value,
    compile_expr,
    eval_expr,
    identifiers,
    parse_expr,
    truthy,
)
from .simbackends.base import SimBackend, UnknownSignalError
from .simbackends.hiermap import HierarchyMap, map_hierarchy


class DebuggerError(Exception):
    pass


class AttachError(DebuggerError):
    pass


class BreakpointError(DebuggerError):
    pass


class NotPausedError(DebuggerError):
    pass


RESUME_COMMANDS = {
    "continue": +1,
    "step_over": +1,
    "reverse_continue": -1,
    "reverse_step": -1,
}

SourceKey = tuple[str, int, int, int]  # (file, line, column, ordinal)

# Frame values: a Value, None for unavailable, or nested list/dict groupings.
ValueTree = Union[Value, None, list, dict]


@dataclass
class InsertedBreakpoint:
    id: int  # breakpoint row id
    row: st.BreakpointRow
    instance: str
    enable_ast: ExprAst
    condition: Optional[ExprAst] = None
    condition_text: Optional[str] = None
    enabled: bool = True
    # Constant-enable verdict (None when data-dependent); lets the continue
    # fast path skip groups that can never fire without re-evaluating.
    const_enable: Optional[bool] = None
    # Hot-path caches built at insert time: compiled enable and a lookup
    # closure with net-name translations already resolved.
    compiled_enable: Optional[Callable] = None
    compiled_condition: Optional[Callable] = None
    enable_lookup: Optional[Callable[[str], Value]] = None


@dataclass
class SchedulingGroup:
    key: SourceKey
    order: int
    members: list[InsertedBreakpoint]  # sorted by instance path
    never_fires: bool = False


@dataclass
class FrameSnapshot:
    thread: str  # instance path (= hardware thread id)
    breakpoint_id: int
    key: SourceKey
    time: int
    fired: bool
    locals: list[tuple[str, ValueTree]]
    instance_vars: list[tuple[str, ValueTree]]


@dataclass
class StopEvent:
    stop_id: int
    time: int
    reason: str  # "breakpoint" | "step" | "pause" | "boundary"
    key: Optional[SourceKey]
    frames: list[FrameSnapshot] = field(default_factory=list)
    notice: Optional[str] = None


def group_values(pairs: list[tuple[str, ValueTree]]) -> list[tuple[str, ValueTree]]:
    """Regroup flattened names: `data[0]`/`data[1]` fold into a list under
    `data`, bundle members `io.a`/`io.b` nest under `io`."""
    order: list[str] = []
    root: dict[str, ValueTree] = {}

    def insert(container: dict, parts: list[str], index: Optional[int], value):
        head = parts[0]
        if len(parts) == 1:
            if index is None:
                container[head] = value
            else:
                slot = container.setdefault(head, {})
                if isinstance(slot, dict):
                    slot[index] = value
        else:
            sub = container.setdefault(head, {})
            if isinstance(sub, dict):
                insert(sub, parts[1:], index, value)

    for name, value in pairs:
        index = None
        base = name
        if name.endswith("]") and "[" in name:
            base, bracket = name.rsplit("[", 1)
            index = int(bracket[:-1])
        parts = base.split(".")
        if parts[0] not in order:
            order.append(parts[0])
        insert(root, parts, index, value)

    def finalize(node):
        if isinstance(node, dict):
            keys = list(node.keys())
            if keys and all(isinstance(k, int) for k in keys):
                size = max(keys) + 1
                return [finalize(node.get(i)) for i in range(size)]
            return {k: finalize(v) for k, v in node.items()}
        return node

    return [(name, finalize(root[name])) for name in order]


class DebuggerCore:
    """Attach to a simulator handle with a symbol table; drive via run()."""

    def __init__(self, sim: SimBackend, table: st.SymbolTable,
                 hmap: Optional[HierarchyMap] = None):
        clocks = sim.get_clocks()
        if not clocks:
            raise AttachError("no clock found: cannot schedule breakpoints")
        self._sim = sim
        self._table = table
        self._hmap = hmap if hmap is not None else map_hierarchy(table, sim.get_hierarchy())
        self._inserted: dict[int, InsertedBreakpoint] = {}
        self._groups: list[SchedulingGroup] = []
        self._idle = True
        self._pause_requested = False
        self._pending_step: Optional[str] = None
        self._cmds: deque = deque()
        self._cmd_ready = threading.Condition()
        self._controller: Optional[Callable[[StopEvent], str]] = None
        self._listeners: list[Callable[[str, object], None]] = []
        self._stop_counter = 0
        self._stops: OrderedDict[int, StopEvent] = OrderedDict()
        self._current_stop: Optional[StopEvent] = None
        self._paused = False
        self._running = False
        self._lock = threading.Lock()
        self.diagnostics: list[str] = []
        self._edge_stops: list[StopEvent] = []
        self._cb_handle = sim.on_clock_edge(self._edge_callback)

    # --- wiring ---

    @property
    def sim(self) -> SimBackend:
        return self._sim

    @property
    def table(self) -> st.SymbolTable:
        return self._table

    @property
    def hierarchy_map(self) -> HierarchyMap:
        return self._hmap

    def add_listener(self, fn: Callable[[str, object], None]):
        self._listeners.append(fn)

    def set_controller(self, fn: Optional[Callable[[StopEvent], str]]):
        """Synchronous driver: called at each stop, returns the next command.
        Used by tests and headless scripts instead of the command queue."""
        self._controller = fn

    def _emit(self, kind: str, payload):
        for fn in list(self._listeners):
            fn(kind, payload)

    # --- breakpoint management ---

    def _resolve_file(self, file: str) -> str:
        """gdb-style file matching: exact path first, then a unique suffix."""
        known = {b.file for b in self._table.breakpoints}
        if file in known:
            return file
        matches = sorted(c for c in known if c.endswith("/" + file))
        if len(matches) == 1:
            return matches[0]
        if len(matches) > 1:
            raise BreakpointError(f"{file!r} is ambiguous: {matches}")
        return file

    def insert_breakpoint(self, file: str, line: int, column: Optional[int] = None,
                          condition: Optional[str] = None) -> list[int]:
        file = self._resolve_file(file)
        rows = st.breakpoints_at(self._table, file, line, column)
        if not rows:
            raise BreakpointError(f"no breakpoint at {file}:{line}"
                                  + (f":{column}" if column is not None else ""))
        cond_ast = parse_expr(condition) if condition else None  # raises before any insert
        ids = []
        for row in rows:
            enable_ast = parse_expr(row.enable)
            const = bool(enable_ast.value) if isinstance(enable_ast, Lit) else None
            translated: dict[str, str] = {}
            for name in identifiers(enable_ast):
                try:
                    translated[name] = self._hmap.translate(name)
                except Exception:
                    pass  # left to per-evaluation diagnostics

            get_value = self._sim.get_value

            def enable_lookup(name: str, _t=translated, _g=get_value) -> Value:
                try:
                    return _g(_t[name])
                except Exception:
                    raise KeyError(name) from None

            self._inserted[row.id] = InsertedBreakpoint(
                id=row.id,
                row=row,
                instance=self._table.instance(row.instance_id).name,
                enable_ast=enable_ast,
                condition=cond_ast,
                condition_text=condition,
                const_enable=const,
                compiled_enable=compile_expr(enable_ast),
                compiled_condition=compile_expr(cond_ast) if cond_ast else None,
                enable_lookup=enable_lookup,
            )
            ids.append(row.id)
        self._rebuild_groups()
        return ids

    def remove_breakpoint(self, bp_id: Optional[int] = None, file: Optional[str] = None,
                          line: Optional[int] = None, column: Optional[int] = None) -> list[int]:
        removed = []
        if bp_id is not None:
            if self._inserted.pop(bp_id, None) is not None:
                removed.append(bp_id)
        else:
            resolved = self._resolve_file(file or "")
            for row in st.breakpoints_at(self._table, resolved, line or 0, column):
                if self._inserted.pop(row.id, None) is not None:
                    removed.append(row.id)
        self._rebuild_groups()
        return removed

    def list_breakpoints(self) -> list[InsertedBreakpoint]:
        return sorted(self._inserted.values(), key=lambda ib: ib.id)

    def _rebuild_groups(self):
        by_key: dict[SourceKey, list[InsertedBreakpoint]] = {}
        for ib in self._inserted.values():
            if not ib.enabled:
                continue
            key = (ib.row.file, ib.row.line, ib.row.column, ib.row.ordinal)
            by_key.setdefault(key, []).append(ib)
        groups = []
        for key, members in by_key.items():
            members.sort(key=lambda ib: ib.instance)
            order = min(m.row.order_index for m in members)
            never = all(m.const_enable is False for m in members)
            groups.append(SchedulingGroup(key, order, members, never))
        groups.sort(key=lambda g: (g.key[0], g.order))
        self._groups = groups
        # Edges are skipped outright when nothing could ever stop there;
        # pause, stepping, and queued commands still enter the scheduler.
        self._idle = not groups or all(g.never_fires for g in groups)

    # --- command plumbing ---

    def resume(self, command: str):
        """Queue a resume command; consumed while paused at a stop."""
        if command not in RESUME_COMMANDS:
            raise DebuggerError(f"unknown resume command {command!r}")
        with self._cmd_ready:
            self._cmds.append(("resume", command, None))
            self._cmd_ready.notify_all()

    def pause(self):
        self._pause_requested = True

    def execute(self, fn):
        """Run fn on the core thread at the next safe point; block for the
        result. Safe while the simulation is paused or between edges; when
        the core is idle (no run in progress) the call runs immediately."""
        with self._lock:
            if not self._running:
                return fn()
        done = threading.Event()
        box: dict = {}

        def wrapped():
            try:
                box["result"] = fn()
            except BaseException as e:  # noqa: BLE001 - relayed to caller
                box["error"] = e
            done.set()

        with self._cmd_ready:
            self._cmds.append(("call", wrapped, None))
            self._cmd_ready.notify_all()
        done.wait()
        if "error" in box:
            raise box["error"]
        return box["result"]

    def _drain_calls(self):
        while self._cmds:
            kind, payload, _ = self._cmds.popleft()
            if kind == "call":
                payload()
            else:
                # Resume commands are only meaningful while paused; record.
                self.diagnostics.append(f"ignored {payload!r}: not paused")

    def _await_command(self, stop: StopEvent) -> str:
        if self._controller is not None:
            command = self._controller(stop)
            if command not in RESUME_COMMANDS:
                raise DebuggerError(f"controller returned unknown command {command!r}")
            return command
        while True:
            with self._cmd_ready:
                while not self._cmds:
                    self._cmd_ready.wait(timeout=0.1)
                kind, payload, _ = self._cmds.popleft()
            if kind == "call":
                payload()
            else:
                return payload

    # --- execution ---

    def run(self):
        """Drive the backend to completion, dispatching stops along the way."""
        with self._lock:
            self._running = True
        try:
            self._sim.run()
        finally:
            with self._lock:
                self._running = False
            self._emit("ended", {"time": self._sim.get_time()})

    def _edge_callback(self, time: int):
        if self._idle and not self._cmds and not self._pause_requested \
                and self._pending_step is None:
            return
        self._drain_calls()
        if self._idle and not self._pause_requested and self._pending_step is None:
            return
        self.evaluate_edge(time)

    def evaluate_edge(self, time: int) -> list[StopEvent]:
        """The scheduling loop for one rising edge; returns stops emitted."""
        self._edge_stops = []
        self._run_scheduler(time)
        return self._edge_stops

    def _run_scheduler(self, edge_time: int):
        sim = self._sim
        t = edge_time
        gi = 0
        mode = "continue"
        if self._pending_step is not None:
            mode = self._pending_step
            self._pending_step = None
        while True:
            groups = self._groups
            if self._pause_requested:
                self._pause_requested = False
                stop = self._make_stop(t, "pause", None, [])
                mode = self._stop_and_wait(stop)
                gi += RESUME_COMMANDS[mode] if RESUME_COMMANDS[mode] < 0 else 0
                continue
            direction = RESUME_COMMANDS.get(mode, +1)
            if direction > 0 and gi >= len(groups):
                if t == edge_time:
                    break
                t = self._next_edge_after(t, edge_time)
                sim.set_time(t)
                gi = 0
                continue
            if direction < 0 and gi < 0:
                prev = self._prev_edge_before(t)
                if prev is None:
                    where = "origin of the trace" if sim.capabilities.can_set_time \
                        else "start of the current cycle (this backend cannot reverse time)"
                    stop = self._make_stop(t, "boundary", None, [],
                                           notice=f"cannot reverse past the {where}")
                    mode = self._stop_and_wait(stop)
                    gi = 0 if RESUME_COMMANDS[mode] > 0 else -1
                    continue
                t = prev
                sim.set_time(t)
                gi = len(groups) - 1
                continue
            group = groups[gi]
            stepping = mode in ("step_over", "reverse_step")
            if group.never_fires and not stepping:
                gi += direction
                continue
            fired = {m.id: self._member_fires(m) for m in group.members}
            if stepping or any(fired.values()):
                members = group.members if stepping else \
                    [m for m in group.members if fired[m.id]]
                frames = [self._build_member_frame(m, t, fired[m.id]) for m in members]
                reason = "step" if stepping and not any(fired.values()) else "breakpoint"
                stop = self._make_stop(t, reason, group.key, frames)
                mode = self._stop_and_wait(stop)
                gi += RESUME_COMMANDS[mode]
            else:
                gi += direction
        if t != edge_time:
            sim.set_time(edge_time)
        if mode == "step_over":
            self._pending_step = "step_over"

    def _next_edge_after(self, t: int, limit: int) -> int:
        edges = getattr(self._sim, "edge_times", None)
        if edges is None:
            return limit
        for e in edges:
            if t < e <= limit:
                return e
        return limit

    def _prev_edge_before(self, t: int) -> Optional[int]:
        if not self._sim.capabilities.can_set_time:
            return None
        edges = getattr(self._sim, "edge_times", None)
        if edges is None:
            return None
        previous = None
        for e in edges:
            if e >= t:
                break
            previous = e
        return previous

    def _make_stop(self, time: int, reason: str, key, frames, notice=None) -> StopEvent:
        self._stop_counter += 1
        stop = StopEvent(self._stop_counter, time, reason, key, frames, notice)
        self._stops[stop.stop_id] = stop
        while len(self._stops) > 128:
            self._stops.popitem(last=False)
        return stop

    def _stop_and_wait(self, stop: StopEvent) -> str:
        self._edge_stops.append(stop)
        self._current_stop = stop
        self._paused = True
        self._emit("stopped", stop)
        try:
            command = self._await_command(stop)
        finally:
            self._paused = False
            self._current_stop = None
        self._emit("resumed", {"stop_id": stop.stop_id, "command": command})
        return command

    # --- condition evaluation ---

    def _read_net(self, rtl_name: str) -> Value:
        return self._sim.get_value(self._hmap.translate(rtl_name))

    def _enable_lookup(self, name: str) -> Value:
        try:
            return self._read_net(name)
        except (UnknownSignalError, KeyError, Exception) as e:
            if isinstance(e, (UnknownSignalError,)):
                raise KeyError(name) from None
            raise KeyError(name) from None

    def _member_fires(self, member: InsertedBreakpoint) -> bool:
        if member.const_enable is False:
            return False
        try:
            if member.const_enable is not True and \
                    not truthy(member.compiled_enable(member.enable_lookup)):
                return False
        except EvalError as e:
            self.diagnostics.append(f"breakpoint {member.id} enable: {e}")
            return False
        if member.compiled_condition is None:
            return True
        try:
            return truthy(member.compiled_condition(self._scope_lookup(member.row)))
        except EvalError as e:
            self.diagnostics.append(f"breakpoint {member.id} condition: {e}")
            return False

    def _scope_lookup(self, row: st.BreakpointRow):
        def lookup(name: str) -> Value:
            try:
                rtl = st.resolve(self._table, row, name)
            except st.SymbolTableError:
                raise KeyError(name) from None
            try:
                return self._read_net(rtl)
            except Exception:
                raise KeyError(name) from None

        return lookup

    # --- frames ---

    def _read_var(self, rtl_name: str) -> ValueTree:
        try:
            return self._read_net(rtl_name)
        except Exception:
            return None  # unavailable (e.g. optimized away or absent in trace)

    def _build_member_frame(self, member: InsertedBreakpoint, time: int,
                            fired: bool) -> FrameSnapshot:
        locals_pairs = [
            (name, self._read_var(var.rtl_name))
            for name, var in st.scope_of(self._table, member.id)
        ]
        ivars = [
            (var.source_name, self._read_var(var.rtl_name))
            for var in self._table.instance_variables(member.row.instance_id)
        ]
        key = (member.row.file, member.row.line, member.row.column, member.row.ordinal)
        return FrameSnapshot(
            thread=member.instance,
            breakpoint_id=member.id,
            key=key,
            time=time,
            fired=fired,
            locals=group_values(locals_pairs),
            instance_vars=group_values(ivars),
        )

    def build_frame(self, breakpoint_id: int) -> FrameSnapshot:
        """Frame for one inserted breakpoint at the current time."""
        member = self._inserted.get(breakpoint_id)
        if member is None:
            raise BreakpointError(f"breakpoint {breakpoint_id} is not inserted")
        return self._build_member_frame(member, self._sim.get_time(),
                                        self._member_fires(member))

    def stop(self, stop_id: int) -> StopEvent:
        stop = self._stops.get(stop_id)
        if stop is None:
            raise DebuggerError(f"unknown stop id {stop_id}")
        return stop

    @property
    def current_stop(self) -> Optional[StopEvent]:
        return self._current_stop

    @property
    def paused(self) -> bool:
        return self._paused

    # --- interactive evaluation ---

    def _context_row(self, thread: Optional[str]) -> Optional[st.BreakpointRow]:
        stop = self._current_stop
        if stop is None or not stop.frames:
            return None
        frames = stop.frames
        if thread is not None:
            frames = [f for f in frames if f.thread == thread] or stop.frames
        return self._table.breakpoint(frames[0].breakpoint_id)

    def resolve_name(self, name: str, thread: Optional[str] = None) -> str:
        """Source name -> backend signal name, using the stop context."""
        row = self._context_row(thread)
        if row is not None:
            try:
                return self._hmap.translate(st.resolve(self._table, row, name))
            except st.SymbolTableError:
                pass
        instance = thread or self._table.instances[0].name
        try:
            return self._hmap.translate(st.resolve(self._table, instance, name))
        except st.SymbolTableError:
            pass
        # Fall back to raw hierarchical RTL names (relative, then absolute).
        if "." in name:
            try:
                return self._hmap.translate(name)
            except Exception:
                return name
        raise EvalError(f"unresolved identifier {name!r}")

    def evaluate(self, text: str, thread: Optional[str] = None) -> Value:
        ast = parse_expr(text)

        def lookup(name: str) -> Value:
            try:
                resolved = self.resolve_name(name, thread)
            except EvalError:
                raise KeyError(name) from None
            try:
                return self._sim.get_value(resolved)
            except Exception:
                raise KeyError(name) from None

        return eval_expr(ast, lookup)

    def set_value(self, name: str, value: int, thread: Optional[str] = None):
        resolved = self.resolve_name(name, thread)
        current = self._sim.get_value(resolved)
        if not 0 <= value < (1 << current.width):
            raise DebuggerError(f"value {value} does not fit {name!r} ({current.width} bits)")
        self._sim.set_value(resolved, Value(current.width, value))

    # --- info ---

    def threads(self) -> list[dict]:
        stop = self._current_stop
        if stop is not None and stop.frames:
            return [
                {"instance": f.thread, "breakpoint_id": f.breakpoint_id, "fired": f.fired}
                for f in stop.frames
            ]
        return [{"instance": i.name} for i in self._table.instances]

    def capabilities(self) -> dict:
        caps = self._sim.capabilities
        return {
            "can_set_value": caps.can_set_value,
            "can_set_time": caps.can_set_time,
            "reverse": "full" if caps.can_set_time else "intra-cycle",
        }

    def detach(self):
        self._sim.remove_callback(self._cb_handle)
