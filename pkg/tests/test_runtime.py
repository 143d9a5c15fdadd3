"""Debugger core tests: scheduling, frames, forward/reverse control.

The soundness/completeness oracle: with every breakpoint inserted and a
continue-only driver, the multiset of (cycle, source key, instance) stop
hits must equal the reference interpreter's statement-execution log.
"""

import io
import random
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))
from corpus import random_program, random_stimulus

from hgdbg.expr import Value
from hgdbg.frontend import interpret, parse
from hgdbg.lowering import compile_program
from hgdbg.runtime import (
    AttachError,
    BreakpointError,
    DebuggerCore,
    group_values,
)
from hgdbg.simbackends import CycleSim, ReplayBackend, TICKS_PER_CYCLE, parse_vcd
from hgdbg.expr import ExprError

from conftest import SUM_LINE
from test_simbackends import net_stimulus

SUM_STIM = [
    {"data": [3, 2], "rst": 0},
    {"data": [1, 1], "rst": 0},
    {"data": [0, 0], "rst": 0},
]


def make_cycle_core(program, stimulus, level="debug", file="sum.mh"):
    netlist, _anns, table = compile_program(program, level)
    sim = CycleSim(netlist, net_stimulus(program, stimulus))
    return DebuggerCore(sim, table), table


def make_replay_core(program, stimulus, level="debug"):
    netlist, _anns, table = compile_program(program, level)
    sim = CycleSim(netlist, net_stimulus(program, stimulus))
    buffer = io.StringIO()
    sim.dump_vcd(buffer)
    sim.run()
    sim.close()
    replay = ReplayBackend(parse_vcd(io.StringIO(buffer.getvalue())))
    return DebuggerCore(replay, table), table


def run_collecting(core, commands="continue"):
    """Drive with a controller; `commands` is a fixed reply or a callable."""
    stops = []

    def controller(stop):
        stops.append(stop)
        return commands if isinstance(commands, str) else commands(stop, stops)

    core.set_controller(controller)
    core.run()
    return stops


def local(frame, name):
    return dict(frame.locals)[name]


class TestAttach:
    def test_attach_requires_clock(self):
        program = parse("module m { in x: 4; out q: 4; comb { q = x; } }", "m.mh")
        netlist, _anns, table = compile_program(program, "debug")
        with pytest.raises(AttachError, match="no clock"):
            DebuggerCore(CycleSim(netlist), table)

    def test_attach_refuses_trace_without_clock(self, sum_program):
        import io as _io

        from hgdbg.lowering import compile_program
        from hgdbg.simbackends import parse_vcd

        table = compile_program(sum_program, "debug")[2]
        no_clock = (
            "$scope module acc $end\n$var wire 1 ! data_0 $end\n"
            "$upscope $end\n$enddefinitions $end\n#0\n0!\n"
        )
        replay = ReplayBackend(parse_vcd(_io.StringIO(no_clock)))
        assert replay.get_clocks() == []
        with pytest.raises(AttachError, match="no clock"):
            DebuggerCore(replay, table)

    def test_no_breakpoints_runs_to_completion(self, sum_program):
        core, _ = make_cycle_core(sum_program, SUM_STIM)
        events = []
        core.add_listener(lambda kind, payload: events.append(kind))
        stops = run_collecting(core)
        assert stops == []
        assert events == ["ended"]

    def test_replay_reports_full_reverse_capability(self, sum_program):
        core, _ = make_replay_core(sum_program, SUM_STIM)
        assert core.capabilities() == {
            "can_set_value": False, "can_set_time": True, "reverse": "full",
        }

    def test_cycle_sim_reports_intra_cycle_reverse(self, sum_program):
        core, _ = make_cycle_core(sum_program, SUM_STIM)
        assert core.capabilities()["reverse"] == "intra-cycle"


class TestInsert:
    def test_accumulation_line_inserts_two(self, sum_program):
        core, table = make_cycle_core(sum_program, SUM_STIM)
        ids = core.insert_breakpoint("sum.mh", SUM_LINE)
        assert len(ids) == 2
        assert len(core._groups) == 2  # one group per ordinal

    def test_three_instances_three_members_per_group(self):
        src = """
module leaf {
  in clk: 1;
  in a: 4;
  out y: 4;
  reg r: 4 @clk;
  comb { y = a + 1; }
  seq (clk) { r = y; }
}
module top {
  in clk: 1;
  in a: 4;
  out q0: 4;
  out q1: 4;
  out q2: 4;
  inst u0: leaf(clk = clk, a = a, y = q0);
  inst u1: leaf(clk = clk, a = a, y = q1);
  inst u2: leaf(clk = clk, a = a, y = q2);
}
"""
        program = parse(src, "three.mh")
        core, _ = make_cycle_core(program, [{"a": 1}])
        ids = core.insert_breakpoint("three.mh", 7)  # leaf's y = a + 1
        assert len(ids) == 3
        (group,) = core._groups
        assert [m.instance for m in group.members] == ["top.u0", "top.u1", "top.u2"]

    def test_condition_parse_error_inserts_nothing(self, sum_program):
        core, _ = make_cycle_core(sum_program, SUM_STIM)
        with pytest.raises(ExprError):
            core.insert_breakpoint("sum.mh", SUM_LINE, condition="sum >")
        assert core.list_breakpoints() == []

    def test_unknown_location(self, sum_program):
        core, _ = make_cycle_core(sum_program, SUM_STIM)
        with pytest.raises(BreakpointError, match="no breakpoint"):
            core.insert_breakpoint("sum.mh", 2)

    def test_remove_by_id_and_location(self, sum_program):
        core, _ = make_cycle_core(sum_program, SUM_STIM)
        ids = core.insert_breakpoint("sum.mh", SUM_LINE)
        assert core.remove_breakpoint(bp_id=ids[0]) == [ids[0]]
        assert core.remove_breakpoint(file="sum.mh", line=SUM_LINE) == [ids[1]]
        assert core.list_breakpoints() == []


class TestEvaluateEdge:
    def test_single_fire_with_pre_statement_sum(self, sum_program):
        core, _ = make_cycle_core(sum_program, [{"data": [3, 2], "rst": 0}])
        core.insert_breakpoint("sum.mh", SUM_LINE)
        stops = run_collecting(core)
        assert len(stops) == 1
        stop = stops[0]
        assert stop.reason == "breakpoint"
        assert stop.key == ("sum.mh", SUM_LINE, stop.key[2], 0)  # ordinal 0
        (frame,) = stop.frames
        assert local(frame, "sum") == Value(8, 0)
        assert local(frame, "i") == Value(1, 0)
        assert local(frame, "data") == [Value(8, 3), Value(8, 2)]

    def test_both_fire_in_one_edge(self, sum_program):
        core, _ = make_cycle_core(sum_program, [{"data": [1, 1], "rst": 0}])
        core.insert_breakpoint("sum.mh", SUM_LINE)
        stops = run_collecting(core)
        assert len(stops) == 2
        assert [s.key[3] for s in stops] == [0, 1]
        assert [local(s.frames[0], "sum") for s in stops] == [Value(8, 0), Value(8, 1)]
        assert stops[0].time == stops[1].time == 0

    def test_no_fire_resumes_silently(self, sum_program):
        core, _ = make_cycle_core(sum_program, [{"data": [0, 0], "rst": 0}])
        core.insert_breakpoint("sum.mh", SUM_LINE)
        assert run_collecting(core) == []

    def test_user_condition_ands_with_enable(self, sum_program):
        stim = [{"data": [1, 1], "rst": 0}, {"data": [3, 1], "rst": 0}]
        core, _ = make_cycle_core(sum_program, stim)
        core.insert_breakpoint("sum.mh", SUM_LINE, condition="data[0] > 1")
        stops = run_collecting(core)
        # Cycle 0: enable fires on both ordinals but data[0]=1 fails the user
        # condition. Cycle 1: data[0]=3 passes on both ordinals.
        assert [(s.time, s.key[3]) for s in stops] == [
            (TICKS_PER_CYCLE, 0), (TICKS_PER_CYCLE, 1),
        ]

    def test_condition_evaluation_error_records_diagnostic(self, sum_program):
        core, _ = make_cycle_core(sum_program, [{"data": [1, 1], "rst": 0}])
        core.insert_breakpoint("sum.mh", SUM_LINE, condition="ghost == 1")
        assert run_collecting(core) == []
        assert any("ghost" in d for d in core.diagnostics)


@pytest.mark.parametrize("level", ["debug", "optimized"])
@pytest.mark.parametrize("seed", range(8))
def test_stops_match_interpreter_log(seed, level):
    """Enable conditions neither over- nor under-fire vs. the oracle."""
    rng = random.Random(74_000 + seed)
    program = random_program(rng)
    stimulus = random_stimulus(rng, program, 6)
    oracle = interpret(program, stimulus)

    netlist, _anns, table = compile_program(program, level)
    core = DebuggerCore(CycleSim(netlist, net_stimulus(program, stimulus)), table)
    for file, line in sorted({(b.file, b.line) for b in table.breakpoints}):
        core.insert_breakpoint(file, line)
    stops = run_collecting(core)

    got = sorted(
        (s.time // TICKS_PER_CYCLE, s.key, f.thread)
        for s in stops for f in s.frames if f.fired
    )
    surviving = {
        (b.file, b.line, b.column, b.ordinal, table.instance(b.instance_id).name)
        for b in table.breakpoints
    }
    want = sorted(
        (k, (e.loc.file, e.loc.line, e.loc.col, e.ordinal), e.instance)
        for k, cycle in enumerate(oracle.cycles)
        for e in cycle.log
        if (e.loc.file, e.loc.line, e.loc.col, e.ordinal, e.instance) in surviving
    )
    assert got == want


@pytest.mark.parametrize("seed", range(4))
def test_frame_locals_match_oracle_pre_statement_values(seed):
    rng = random.Random(75_000 + seed)
    program = random_program(rng)
    stimulus = random_stimulus(rng, program, 5)
    oracle = interpret(program, stimulus)

    netlist, _anns, table = compile_program(program, "debug")
    core = DebuggerCore(CycleSim(netlist, net_stimulus(program, stimulus)), table)
    for file, line in sorted({(b.file, b.line) for b in table.breakpoints}):
        core.insert_breakpoint(file, line)
    stops = run_collecting(core)

    expected = {}
    for k, cycle in enumerate(oracle.cycles):
        for e in cycle.log:
            expected[(k, (e.loc.file, e.loc.line, e.loc.col, e.ordinal), e.instance)] = e.pre

    for stop in stops:
        for frame in stop.frames:
            if not frame.fired:
                continue
            pre = expected[(stop.time // TICKS_PER_CYCLE, frame.key, frame.thread)]
            for name, value in frame.locals:
                if name not in pre:
                    continue
                want = pre[name]
                if isinstance(want, list):
                    assert [v.bits for v in value] == want, (name, frame)
                else:
                    assert value is not None and value.bits == want, (name, frame)


class TestFrames:
    def test_pre_statement_chaining_across_ordinals(self, sum_program):
        # Frame `sum` at ordinal 1 equals ordinal 0's post-statement value.
        oracle = interpret(sum_program, [{"data": [1, 1], "rst": 0}])
        post0 = [e for e in oracle.cycles[0].log if e.loc.line == SUM_LINE][0].post["sum"]
        core, _ = make_cycle_core(sum_program, [{"data": [1, 1], "rst": 0}])
        core.insert_breakpoint("sum.mh", SUM_LINE)
        stops = run_collecting(core)
        assert local(stops[1].frames[0], "sum").bits == post0

    def test_optimized_frame_omits_eliminated_temp(self):
        # `t = a + 0` folds to a pure alias of `a`; the optimizer forwards
        # and removes it, so the optimized frame has no `t` to show.
        src = """
module m {
  in clk: 1;
  in a: 8;
  out q: 8;
  reg r: 8 @clk;
  comb {
    t = a + 0;
    q = t;
  }
  seq (clk) { r = q; }
}
"""
        program = parse(src, "m.mh")
        stim = [{"a": 5}]

        def names_at_assignment(level):
            core, table = make_cycle_core(program, stim, level)
            core.insert_breakpoint("m.mh", 9)  # q = t
            stops = run_collecting(core)
            return [n for n, _v in stops[0].frames[0].locals]

        assert names_at_assignment("debug") == ["t", "a"]
        assert names_at_assignment("optimized") == ["a"]

    def test_child_instance_bundle_grouping(self):
        src = """
module child {
  in clk: 1;
  in io.a: 4;
  in io.b: 4;
  out io.y: 4;
  reg r: 4 @clk;
  comb { io.y = io.a + io.b; }
  seq (clk) { r = io.y; }
}
module top {
  in clk: 1;
  in p: 4;
  in q: 4;
  out r_out: 4;
  inst c0: child(clk = clk, io.a = p, io.b = q, io.y = r_out);
}
"""
        program = parse(src, "b.mh")
        core, _ = make_cycle_core(program, [{"p": 2, "q": 3}])
        core.insert_breakpoint("b.mh", 8)  # io.y = io.a + io.b
        stops = run_collecting(core)
        frame = stops[0].frames[0]
        assert frame.thread == "top.c0"
        ivars = dict(frame.instance_vars)
        assert ivars["io"] == {"a": Value(4, 2), "b": Value(4, 3), "y": Value(4, 5)}

    def test_group_values_arrays_and_bundles(self):
        pairs = [
            ("sum", Value(8, 0)),
            ("data[0]", Value(8, 3)),
            ("data[1]", Value(8, 2)),
            ("io.a", Value(4, 1)),
            ("io.b", Value(4, 2)),
        ]
        grouped = group_values(pairs)
        assert grouped == [
            ("sum", Value(8, 0)),
            ("data", [Value(8, 3), Value(8, 2)]),
            ("io", {"a": Value(4, 1), "b": Value(4, 2)}),
        ]


class TestStepAndReverse:
    def test_step_over_stops_at_non_firing_group(self, sum_program):
        core, _ = make_cycle_core(sum_program, [{"data": [3, 2], "rst": 0}])
        core.insert_breakpoint("sum.mh", SUM_LINE)

        def driver(stop, stops):
            return "step_over"

        stops = run_collecting(core, driver)
        # Ordinal 0 fires (breakpoint), step lands on ordinal 1 (not firing).
        assert [(s.key[3], s.reason) for s in stops[:2]] == [(0, "breakpoint"), (1, "step")]
        fired = [f.fired for s in stops[:2] for f in s.frames]
        assert fired == [True, False]

    def test_intra_cycle_reverse_is_exact_reversal(self, sum_program):
        # Forward step_over through every group at one edge, then reverse_step
        # back: visit order must be the exact reverse.
        core, _ = make_cycle_core(sum_program, [{"data": [1, 1], "rst": 0}])
        for line in (8, SUM_LINE, 10, 13):
            core.insert_breakpoint("sum.mh", line)
        n_groups = len(core._groups)
        forward = []
        backward = []
        done = {"reversing": False, "finished": False}

        def driver(stop, stops):
            if done["finished"]:
                return "continue"
            if not done["reversing"]:
                forward.append(stop.key)
                if len(forward) < n_groups:
                    return "step_over"
                done["reversing"] = True
                return "reverse_step"
            if stop.reason == "boundary":
                done["finished"] = True
                return "continue"
            backward.append(stop.key)
            return "reverse_step"

        run_collecting(core, driver)
        assert backward == list(reversed(forward[:-1]))

    def test_reverse_on_cycle_sim_hits_intra_cycle_boundary(self, sum_program):
        core, _ = make_cycle_core(sum_program, [{"data": [3, 2], "rst": 0}])
        core.insert_breakpoint("sum.mh", SUM_LINE)
        reasons = []
        hit_wall = {"done": False}

        def driver(stop, stops):
            reasons.append(stop.reason)
            if hit_wall["done"]:
                return "continue"
            if stop.reason == "boundary":
                assert "cannot reverse" in stop.notice
                hit_wall["done"] = True
                return "continue"
            return "reverse_continue"

        run_collecting(core, driver)
        assert reasons[:2] == ["breakpoint", "boundary"]

    def test_full_reverse_round_trip_on_replay(self, sum_program):
        stim = [
            {"data": [3, 2], "rst": 0},
            {"data": [1, 1], "rst": 0},
            {"data": [3, 3], "rst": 0},
        ]
        core, _ = make_replay_core(sum_program, stim)
        core.insert_breakpoint("sum.mh", SUM_LINE)

        forward: list = []
        reverse: list = []
        forward_again: list = []
        phase = {"current": "forward"}
        n_forward = 5  # hand count: d0 odd, d0+d1 odd, d0+d1 odd -> 1+2+2

        def driver(stop):
            if phase["current"] == "forward":
                forward.append(stop)
                if len(forward) == n_forward:
                    phase["current"] = "reverse"
                    return "reverse_continue"
                return "continue"
            if phase["current"] == "reverse":
                if stop.reason == "boundary":
                    phase["current"] = "forward_again"
                    return "continue"
                reverse.append(stop)
                return "reverse_continue"
            forward_again.append(stop)
            return "continue"

        core.set_controller(driver)
        core.run()

        assert len(forward) == n_forward
        # Reverse visits the previous stops in exactly reversed order.
        assert [(s.time, s.key) for s in reverse] == [
            (s.time, s.key) for s in reversed(forward[:-1])
        ]
        # Forward after reverse reproduces the identical stop sequence,
        # frames bit-identical.
        assert [(s.time, s.key, s.frames) for s in forward_again] == [
            (s.time, s.key, s.frames) for s in forward
        ]

    def test_reverse_at_time_zero_boundary_notice(self, sum_program):
        core, _ = make_replay_core(sum_program, [{"data": [1, 1], "rst": 0}])
        core.insert_breakpoint("sum.mh", SUM_LINE)
        seen = []
        hit_wall = {"done": False}

        def driver(stop, stops):
            seen.append(stop.reason)
            if hit_wall["done"]:
                return "continue"
            if stop.reason == "boundary":
                hit_wall["done"] = True
                return "continue"
            return "reverse_continue"

        run_collecting(core, driver)
        assert seen[0] == "breakpoint"
        assert "boundary" in seen


class TestInteractive:
    def test_evaluate_scope_name_at_stop(self, sum_program):
        core, _ = make_cycle_core(sum_program, [{"data": [3, 2], "rst": 0}])
        core.insert_breakpoint("sum.mh", SUM_LINE)
        results = []

        def driver(stop, stops):
            results.append(core.evaluate("sum"))
            results.append(core.evaluate("data[0] % 2"))
            results.append(core.evaluate("total"))
            return "continue"

        run_collecting(core, driver)
        assert results[0] == Value(8, 0)  # pre-statement SSA mapping
        assert (results[1].bits, results[1].known) == (1, True)
        assert results[2] == Value(8, 0)

    def test_set_value_on_cycle_sim(self, sum_program):
        core, _ = make_cycle_core(sum_program, [{"data": [3, 2], "rst": 0}])
        core.insert_breakpoint("sum.mh", SUM_LINE)

        def driver(stop, stops):
            core.set_value("data[1]", 7)
            assert core.evaluate("data[1]").bits == 7
            return "continue"

        stops = run_collecting(core, driver)
        # Forcing data[1] odd makes the ordinal-1 group fire as well.
        assert len(stops) == 2

    def test_set_value_capability_error_on_replay(self, sum_program):
        from hgdbg.simbackends import CapabilityError

        core, _ = make_replay_core(sum_program, [{"data": [1, 1], "rst": 0}])
        core.insert_breakpoint("sum.mh", SUM_LINE)

        def driver(stop, stops):
            with pytest.raises(CapabilityError):
                core.set_value("data[1]", 7)
            return "continue"

        run_collecting(core, driver)

    def test_pause_stops_at_next_edge(self, sum_program):
        core, _ = make_cycle_core(sum_program, SUM_STIM)
        core.pause()
        stops = run_collecting(core)
        assert stops[0].reason == "pause"
        assert stops[0].frames == []

    def test_threads_info(self, sum_program):
        core, _ = make_cycle_core(sum_program, [{"data": [3, 2], "rst": 0}])
        ids = core.insert_breakpoint("sum.mh", SUM_LINE)
        seen = []

        def driver(stop, stops):
            seen.append(core.threads())
            return "continue"

        run_collecting(core, driver)
        assert seen == [[{"instance": "acc", "breakpoint_id": ids[0], "fired": True}]]
