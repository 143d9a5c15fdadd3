"""Simulation-overhead microbenchmark.

Measures wall time of (a) bare trace replay, (b) replay with the debugger
runtime attached and zero breakpoints inserted, and (c) replay with
never-firing conditional breakpoints, and reports the overhead ratios. The
attached-idle case isolates the cost of the per-edge callback, which is the
only work the debugger adds when nothing is inserted.
"""

from __future__ import annotations

import random
import statistics
import time
from typing import Callable, Optional

from ..expr import Value
from ..runtime import DebuggerCore
from ..simbackends import ReplayBackend, parse_vcd
from ..simbackends.hiermap import HierarchyMap
from ..simbackends.vcd import SignalTrace, TraceStore
from ..simbackends.base import HierarchyNode
from ..symtab import BreakpointRow, InstanceRow, SymbolTable, VariableRow

MIN_EDGES = 10_000
TARGET_RATIO = 1.05  # the headline claim
GATE_RATIO = 1.10  # CI gate, absorbing machine noise

BENCH_FILE = "bench.mh"


class BenchError(Exception):
    pass


def synthetic_trace(edges: int, signals: int, seed: int = 1) -> TraceStore:
    """A clock plus `signals` 8-bit nets, each changing on roughly half the
    cycles; rich enough that per-edge replay work dominates callback cost."""
    rng = random.Random(seed)
    store = TraceStore()
    clock = SignalTrace("bench.clk", 1)
    names = [f"bench.s{k}" for k in range(signals)]
    sigs = [SignalTrace(name, 8) for name in names]
    stream = store.stream
    high, low = Value(1, 1), Value(1, 0)
    values = [Value(8, rng.randrange(256)) for _ in range(signals)]
    for sig, v in zip(sigs, values):
        sig.changes_t.append(0)
        sig.changes_v.append(v)
    for k in range(edges):
        t = k * 10
        clock.changes_t.append(t)
        clock.changes_v.append(high)
        stream.append((t, "bench.clk", high))
        if k == 0:
            for name, sig in zip(names, sigs):
                stream.append((0, name, sig.changes_v[0]))
        else:
            for i in range(signals):
                if rng.random() < 0.5:
                    v = Value(8, rng.randrange(256))
                    sigs[i].changes_t.append(t)
                    sigs[i].changes_v.append(v)
                    stream.append((t, names[i], v))
        clock.changes_t.append(t + 5)
        clock.changes_v.append(low)
        stream.append((t + 5, "bench.clk", low))
    store.signals["bench.clk"] = clock
    for name, sig in zip(names, sigs):
        store.signals[name] = sig
    node = HierarchyNode("bench", [("clk", 1)] + [(f"s{k}", 8) for k in range(signals)])
    store.hierarchy = node
    store.end_time = (edges - 1) * 10 + 5 if edges else 0
    return store


def bench_symtab(trace: TraceStore, breakpoints: int, enable: str = "0") -> SymbolTable:
    """Synthesized table over the trace: one instance, never-firing rows."""
    table = SymbolTable()
    table.instances.append(InstanceRow(0, "bench", "bench"))
    for k, name in enumerate(sorted(trace.signals)):
        leaf = name.split(".", 1)[1]
        table.variables.append(VariableRow(k, name, leaf, True, 0))
    for k in range(breakpoints):
        table.breakpoints.append(BreakpointRow(
            id=k, instance_id=0, file=BENCH_FILE, line=k + 1, column=1,
            ordinal=0, enable=enable, order_index=k,
        ))
    return table


def _median_time(make_run: Callable[[], Callable[[], None]], runs: int) -> tuple[float, list[float]]:
    times = []
    for _ in range(runs):
        run = make_run()
        start = time.perf_counter()
        run()
        times.append(time.perf_counter() - start)
    return statistics.median(times), times


def run_bench(edges: int = 100_000, signals: int = 64, breakpoints: int = 16,
              runs: int = 5, vcd_path: Optional[str] = None, seed: int = 1,
              echo: Callable[[str], None] = print) -> dict:
    if vcd_path:
        trace = parse_vcd(vcd_path)
    else:
        trace = synthetic_trace(edges, signals, seed)
    clocks = None
    if "bench.clk" in trace.signals:
        clocks = ["bench.clk"]
    probe = ReplayBackend(trace, clocks=clocks)
    n_edges = len(probe.edge_times)
    if n_edges < MIN_EDGES:
        raise BenchError(
            f"workload has {n_edges} rising edges; need at least {MIN_EDGES} "
            "for a statistically meaningful measurement"
        )
    table = bench_symtab(trace, breakpoints)
    hmap = HierarchyMap({"bench": probe.get_hierarchy().name})

    def bare():
        backend = ReplayBackend(trace, clocks=clocks)
        return backend.run

    def attached_idle():
        backend = ReplayBackend(trace, clocks=clocks)
        DebuggerCore(backend, table, hmap)
        return backend.run

    stop_count = [0]

    def count_stops(kind, payload):
        if kind == "stopped":
            stop_count[0] += 1

    def attached_with(bench_table):
        def make():
            backend = ReplayBackend(trace, clocks=clocks)
            core = DebuggerCore(backend, bench_table, hmap)
            core.set_controller(lambda stop: "continue")
            core.add_listener(count_stops)
            for row in bench_table.breakpoints:
                core.insert_breakpoint(row.file, row.line)
            return backend.run
        return make

    attached_conditional = attached_with(table)
    # Data-dependent never-firing conditions cannot be constant-folded, so
    # this measures the genuine per-edge evaluation cost.
    data_signal = next((n for n in sorted(trace.signals) if n != "bench.clk"), None)
    dependent_table = None
    if data_signal is not None and breakpoints:
        width = trace.signals[data_signal].width
        impossible = f"{data_signal} > {2 ** width}"
        dependent_table = bench_symtab(trace, breakpoints, enable=impossible)

    changes = len(trace.stream)
    echo(f"workload: {n_edges} rising edges, {len(trace.signals)} signals, "
         f"{changes} value changes")
    bare_median, bare_times = _median_time(bare, runs)
    echo(f"bare replay:                 median {bare_median:.4f} s "
         f"({_fmt(bare_times)})")
    idle_median, idle_times = _median_time(attached_idle, runs)
    idle_ratio = idle_median / bare_median
    echo(f"attached, zero breakpoints:  median {idle_median:.4f} s "
         f"({_fmt(idle_times)})  overhead {100 * (idle_ratio - 1):+.2f}%")
    cond_median, cond_times = _median_time(attached_conditional, runs) \
        if breakpoints else (idle_median, idle_times)
    cond_ratio = cond_median / bare_median
    dep_median, dep_ratio = None, None
    if breakpoints:
        echo(f"attached, {breakpoints:3d} never-firing (constant):  "
             f"median {cond_median:.4f} s  overhead {100 * (cond_ratio - 1):+.2f}%")
    if dependent_table is not None:
        dep_median, dep_times = _median_time(attached_with(dependent_table), runs)
        dep_ratio = dep_median / bare_median
        echo(f"attached, {breakpoints:3d} never-firing (evaluated): "
             f"median {dep_median:.4f} s  overhead {100 * (dep_ratio - 1):+.2f}%")
    if breakpoints:
        echo(f"stop events with never-firing conditions: {stop_count[0]}")
    echo(f"idle overhead target < {100 * (TARGET_RATIO - 1):.0f}% "
         f"(gate < {100 * (GATE_RATIO - 1):.0f}%): "
         f"{'PASS' if idle_ratio < GATE_RATIO else 'FAIL'}")
    return {
        "edges": n_edges,
        "signals": len(trace.signals),
        "changes": changes,
        "bare_median": bare_median,
        "idle_median": idle_median,
        "idle_ratio": idle_ratio,
        "conditional_median": cond_median,
        "conditional_ratio": cond_ratio,
        "dependent_median": dep_median,
        "dependent_ratio": dep_ratio,
        "stops": stop_count[0],
        "target_ratio": TARGET_RATIO,
        "gate_ratio": GATE_RATIO,
    }


def _fmt(times: list[float]) -> str:
    return "runs: " + ", ".join(f"{t:.4f}" for t in times)
