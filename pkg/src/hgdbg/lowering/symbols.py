"""Second pass of symbol extraction: turn surviving annotations into the
relational symbol table.

An annotation survives only if the SSA net its statement defines is still in
the netlist and its enable condition references only surviving nets; in
optimized builds, statements eliminated by the compiler therefore have no
breakpoints, and variables whose nets were removed simply do not appear.
"""

from __future__ import annotations

from .. import expr
from ..symtab import (
    BreakpointRow,
    InstanceRow,
    ScopeVariableRow,
    SymbolTable,
    VariableRow,
    check_integrity,
)
from .netlist import AnnotationSet, Netlist


def collect_symbols(netlist: Netlist, annotations: AnnotationSet) -> SymbolTable:
    table = SymbolTable()
    instance_ids: dict[str, int] = {}
    for i, (path, module_name) in enumerate(netlist.instances):
        instance_ids[path] = i
        table.instances.append(InstanceRow(i, path, module_name))

    surviving = []
    dropped = annotations.dropped
    for ann in annotations.annotations:
        if ann.target_net not in netlist.nets:
            dropped += 1
            continue
        if any(name not in netlist.nets for name in expr.identifiers(ann.enable)):
            dropped += 1
            continue
        surviving.append(ann)

    # Evaluation order: dense per file over (line, column, ordinal), with the
    # instance path as a deterministic tie-break across hardware threads.
    surviving.sort(key=lambda a: (a.loc.file, a.loc.line, a.loc.col, a.ordinal, a.instance))
    order_by_file: dict[str, int] = {}

    variables: dict[tuple[int, str, str], VariableRow] = {}

    def intern_variable(instance_id: int, rtl: str, source: str,
                        is_instance_var: bool) -> VariableRow:
        key = (instance_id, rtl, source)
        row = variables.get(key)
        if row is None:
            row = VariableRow(len(table.variables), rtl, source, is_instance_var, instance_id)
            table.variables.append(row)
            variables[key] = row
        return row

    for path, signals in annotations.instance_signals.items():
        if path not in instance_ids:
            continue
        instance_id = instance_ids[path]
        for source, net in signals:
            if net in netlist.nets:
                intern_variable(instance_id, net, source, True)

    for bp_id, ann in enumerate(surviving):
        file = ann.loc.file
        order = order_by_file.get(file, 0)
        order_by_file[file] = order + 1
        instance_id = instance_ids[ann.instance]
        table.breakpoints.append(BreakpointRow(
            bp_id, instance_id, file, ann.loc.line, ann.loc.col, ann.ordinal,
            expr.to_text(ann.enable), order,
        ))
        for source, net in ann.mapping:
            var = intern_variable(instance_id, net, source, False)
            table.scope_variables.append(ScopeVariableRow(bp_id, var.id, source))

    table.dropped_annotations = dropped
    check_integrity(table)
    return table
