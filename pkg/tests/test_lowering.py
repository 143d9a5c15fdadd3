"""Lowering tests: SSA/unroll annotations, optimization, symbol collection.

Enable conditions are checked semantically by truth table, not textually:
the two accumulation breakpoints must fire exactly on odd data[0] / data[1]
for all four parity combinations.
"""

import random
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))
from corpus import random_program

from hgdbg import expr
from hgdbg.expr import Binary, Ident, Lit, Value, eval_expr
from hgdbg.frontend import parse
from hgdbg.lowering import (
    collect_symbols,
    compile_program,
    emit_verilog_like,
    optimize,
    unroll_and_ssa,
)
from hgdbg.lowering.optimize import fold
from hgdbg.symtab import breakpoints_at, scope_of

from conftest import SUM_LINE


def eval_enable(enable_ast, values: dict[str, int], width: int = 8) -> bool:
    v = eval_expr(enable_ast, lambda n: Value.of(values[n], width))
    return v.known and v.bits != 0


def sum_line_annotations(annotations):
    return sorted(
        (a for a in annotations.annotations if a.loc.line == SUM_LINE),
        key=lambda a: a.ordinal,
    )


class TestUnrollAndSsa:
    def test_two_annotations_with_parity_enables(self, sum_program):
        _netlist, anns = unroll_and_ssa(sum_program)
        line_anns = sum_line_annotations(anns)
        assert [a.ordinal for a in line_anns] == [0, 1]
        # Truth table over all four parities: ordinal k fires iff data[k] is odd.
        for d0 in (0, 1):
            for d1 in (0, 1):
                values = {"acc.data_0": d0, "acc.data_1": d1}
                assert eval_enable(line_anns[0].enable, values) == bool(d0)
                assert eval_enable(line_anns[1].enable, values) == bool(d1)

    def test_top_level_statement_enable_is_constant_true(self, sum_program):
        _netlist, anns = unroll_and_ssa(sum_program)
        init = [a for a in anns.annotations if a.loc.line == 8]
        assert len(init) == 1
        assert init[0].enable == Lit(1, 1)

    def test_nested_conditions_and_reduce(self):
        src = """
module m {
  in a: 1;
  in b: 1;
  out q: 4;
  comb {
    x = 0;
    if a { if b { x = 3; } }
    q = x;
  }
}
"""
        _netlist, anns = unroll_and_ssa(parse(src, "m.mh"))
        guarded = [a for a in anns.annotations if a.loc.line == 8]
        assert len(guarded) == 1
        for a_val in (0, 1):
            for b_val in (0, 1):
                fired = eval_enable(guarded[0].enable, {"m.a": a_val, "m.b": b_val}, width=1)
                assert fired == bool(a_val and b_val)

    def test_variable_mapping_tracks_ssa_versions(self, sum_program):
        _netlist, anns = unroll_and_ssa(sum_program)
        first, second = sum_line_annotations(anns)
        assert dict(first.mapping)["sum"] == "acc.sum__0"
        assert dict(second.mapping)["sum"] == "acc.sum__1"

    def test_loop_variable_maps_to_constant_nets(self, sum_program):
        netlist, anns = unroll_and_ssa(sum_program)
        first, second = sum_line_annotations(anns)
        assert netlist.nets[dict(first.mapping)["i"]].driver == Lit(0, 1)
        assert netlist.nets[dict(second.mapping)["i"]].driver == Lit(1, 1)

    def test_ssa_single_assignment_and_acyclic(self, sum_program):
        netlist, _ = unroll_and_ssa(sum_program)
        netlist.check_acyclic()
        assert {"acc.sum__0", "acc.sum__1", "acc.sum__2", "acc.sum"} <= set(netlist.nets)

    def test_guarded_accumulate_is_a_mux(self, sum_program):
        netlist, _ = unroll_and_ssa(sum_program)
        driver = netlist.nets["acc.sum__1"].driver
        assert isinstance(driver, expr.Ternary)
        assert driver.other == Ident("acc.sum__0")


class TestOptimize:
    def test_zero_addition_folds_to_identity(self):
        widths = {"x": 8}
        folded = fold(Binary("+", Lit(0, 1), Ident("x")), widths.__getitem__, True)
        assert folded == Ident("x")
        folded = fold(Binary("+", Ident("x"), Lit(0, 1)), widths.__getitem__, True)
        assert folded == Ident("x")

    def test_constant_folding_is_width_exact(self):
        folded = fold(Binary("+", Lit(255, 8), Lit(1, 1)), {}.__getitem__, True)
        assert folded == Lit(0, 8)

    def test_enable_folding_preserves_unknown_propagation(self):
        # v || 1 must not fold in enable (conservative) mode: an unknown v
        # would change from "no fire" to "fire".
        e = Binary("||", Ident("v"), Lit(1, 1))
        assert fold(e, {"v": 1}.__getitem__, False) == e
        assert fold(e, {"v": 1}.__getitem__, True) == Lit(1, 1)

    def test_dead_net_removed_only_when_optimized(self):
        src = """
module m {
  in a: 8;
  out q: 8;
  comb {
    t = a + 1;
    q = a;
  }
}
"""
        program = parse(src, "m.mh")
        netlist, anns = unroll_and_ssa(program)
        debug_nl, _ = optimize(netlist, anns, "debug")
        assert "m.t__0" in debug_nl.nets and "m.t" in debug_nl.nets
        opt_nl, _ = optimize(netlist, anns, "optimized")
        assert "m.t__0" not in opt_nl.nets and "m.t" not in opt_nl.nets
        assert "m.q" in opt_nl.nets  # outputs always survive

    def test_optimized_symtab_drops_dead_temporary(self):
        src = """
module m {
  in a: 8;
  out q: 8;
  comb {
    t = a + 1;
    q = a;
  }
}
"""
        program = parse(src, "m.mh")
        _, _, debug_table = compile_program(program, "debug")
        _, _, opt_table = compile_program(program, "optimized")
        debug_names = {v.source_name for v in debug_table.variables}
        opt_names = {v.source_name for v in opt_table.variables}
        assert "t" in debug_names
        assert "t" not in opt_names
        # The dead statement's breakpoint disappears too, and is counted.
        assert len(debug_table.breakpoints) == 2
        assert len(opt_table.breakpoints) == 1
        assert opt_table.dropped_annotations == 1

    @pytest.mark.parametrize("seed", range(12))
    def test_debug_variables_superset_of_optimized(self, seed):
        rng = random.Random(8800 + seed)
        program = random_program(rng)
        _, _, debug_table = compile_program(program, "debug")
        _, _, opt_table = compile_program(program, "optimized")
        inst_name = {i.id: i.name for i in debug_table.instances}
        opt_inst_name = {i.id: i.name for i in opt_table.instances}
        debug_vars = {(inst_name[v.instance_id], v.source_name, v.rtl_name)
                      for v in debug_table.variables}
        opt_vars = {(opt_inst_name[v.instance_id], v.source_name, v.rtl_name)
                    for v in opt_table.variables}
        assert opt_vars <= debug_vars

    def test_register_reset_mux_survives(self, sum_program):
        netlist, anns = unroll_and_ssa(sum_program)
        opt_nl, _ = optimize(netlist, anns, "optimized")
        assert "acc.total__next" in opt_nl.nets
        assert opt_nl.registers["acc.total"].next_net == "acc.total__next"


class TestCollectSymbols:
    def test_two_breakpoints_share_the_accumulation_line(self, sum_program):
        _, _, table = compile_program(sum_program, "debug")
        rows = breakpoints_at(table, "sum.mh", SUM_LINE)
        assert len(rows) == 2
        assert [r.ordinal for r in rows] == [0, 1]
        assert rows[0].column == rows[1].column  # same unrolled statement
        assert rows[0].order_index < rows[1].order_index

    def test_program_with_no_statements(self):
        program = parse("module empty { in clk: 1; }", "e.mh")
        _, _, table = compile_program(program, "debug")
        assert len(table.instances) == 1
        assert table.breakpoints == []

    def test_two_instances_duplicate_breakpoints(self):
        src = """
module leaf {
  in a: 4;
  out y: 4;
  comb { y = a + 1; }
}
module top {
  in a: 4;
  out q0: 4;
  out q1: 4;
  inst u0: leaf(a = a, y = q0);
  inst u1: leaf(a = a, y = q1);
}
"""
        program = parse(src, "two.mh")
        _, _, table = compile_program(program, "debug")
        assert [i.name for i in table.instances] == ["top", "top.u0", "top.u1"]
        rows = breakpoints_at(table, "two.mh", 5)  # leaf's `y = a + 1`
        assert len(rows) == 2
        assert {table.instance(r.instance_id).name for r in rows} == {"top.u0", "top.u1"}
        # Instance-qualified RTL names in each copy's scope.
        for row in rows:
            scope = dict((name, var.rtl_name) for name, var in scope_of(table, row.id))
            prefix = table.instance(row.instance_id).name
            assert scope["a"] == f"{prefix}.a"

    def test_breakpoint_order_is_strict_total_per_instance(self, sum_program):
        _, _, table = compile_program(sum_program, "debug")
        keys = [(b.line, b.column, b.ordinal) for b in table.breakpoints]
        assert len(set(keys)) == len(keys)
        assert keys == sorted(keys)


class TestEmit:
    def test_contains_select_for_guarded_accumulate(self, sum_program):
        netlist, _ = unroll_and_ssa(sum_program)
        text = emit_verilog_like(netlist)
        assert "select(acc.data_0 % 2, acc.sum__0 + acc.data_0, acc.sum__0)" in text

    def test_empty_module_is_header_and_footer(self):
        program = parse("module empty { in clk: 1; }", "e.mh")
        netlist, _ = unroll_and_ssa(program)
        text = emit_verilog_like(netlist)
        lines = [l for l in text.strip().splitlines() if l and not l.startswith("//")]
        assert lines[0] == "module empty;"
        assert lines[-1] == "endmodule"
        assert len(lines) == 3  # header, clk input, footer

    def test_identical_netlists_identical_bytes(self, sum_program):
        a = emit_verilog_like(unroll_and_ssa(sum_program)[0])
        b = emit_verilog_like(unroll_and_ssa(sum_program)[0])
        assert a == b
