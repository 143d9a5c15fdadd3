"""Relational symbol table: instances, breakpoints, variables, scope variables.

The on-disk canonical format is a single SQLite v3 database (tables
`instance`, `breakpoint`, `variable`, `scope_variable` plus a `meta` table
carrying the schema version); a JSON export with identical row content is
provided for debugging and for the web UI. Loaded tables are immutable by
convention and safe to share.

Breakpoint `order_index` is the precomputed global evaluation order: dense
0..N-1 within each file, consistent with (line, column, ordinal) and
tie-broken by instance path, so the runtime never sorts per query.
"""

from __future__ import annotations

import json
import os
import sqlite3
import tempfile
from dataclasses import asdict, dataclass, field
from typing import Iterable, Optional, Union

SCHEMA_VERSION = 1
FILE_SUFFIX = ".hgdb"


class SymbolTableError(Exception):
    pass


@dataclass
class InstanceRow:
    id: int
    name: str  # hierarchical path relative to the generated top, e.g. acc.child
    module_name: str


@dataclass
class BreakpointRow:
    id: int
    instance_id: int
    file: str
    line: int
    column: int
    ordinal: int  # unroll copy index
    enable: str  # condition text over hierarchical RTL net names
    order_index: int


@dataclass
class VariableRow:
    id: int
    rtl_name: str
    source_name: str
    is_instance_var: bool
    instance_id: int


@dataclass
class ScopeVariableRow:
    breakpoint_id: int
    variable_id: int
    source_name: str  # SSA-context name override at this breakpoint


@dataclass
class SymbolTable:
    instances: list[InstanceRow] = field(default_factory=list)
    breakpoints: list[BreakpointRow] = field(default_factory=list)
    variables: list[VariableRow] = field(default_factory=list)
    scope_variables: list[ScopeVariableRow] = field(default_factory=list)
    # Build-time diagnostics; not persisted, not part of equality.
    dropped_annotations: int = field(default=0, compare=False)

    # --- indexes (built lazily; tables are immutable once constructed) ---

    def _index(self):
        if getattr(self, "_by_id", None) is not None:
            return
        self._by_id = {b.id: b for b in self.breakpoints}
        self._inst_by_id = {i.id: i for i in self.instances}
        self._inst_by_name = {i.name: i for i in self.instances}
        self._var_by_id = {v.id: v for v in self.variables}
        self._by_loc: dict[tuple[str, int], list[BreakpointRow]] = {}
        for b in self.breakpoints:
            self._by_loc.setdefault((b.file, b.line), []).append(b)
        for rows in self._by_loc.values():
            rows.sort(key=lambda b: (b.order_index, b.instance_id))
        self._scope_by_bp: dict[int, list[ScopeVariableRow]] = {}
        for s in self.scope_variables:
            self._scope_by_bp.setdefault(s.breakpoint_id, []).append(s)
        self._ivars_by_inst: dict[int, list[VariableRow]] = {}
        for v in self.variables:
            if v.is_instance_var:
                self._ivars_by_inst.setdefault(v.instance_id, []).append(v)

    def instance(self, key: Union[int, str]) -> InstanceRow:
        self._index()
        try:
            return self._inst_by_id[key] if isinstance(key, int) else self._inst_by_name[key]
        except KeyError:
            raise SymbolTableError(f"unknown instance {key!r}") from None

    def breakpoint(self, bp_id: int) -> BreakpointRow:
        self._index()
        try:
            return self._by_id[bp_id]
        except KeyError:
            raise SymbolTableError(f"unknown breakpoint id {bp_id}") from None

    def variable(self, var_id: int) -> VariableRow:
        self._index()
        return self._var_by_id[var_id]

    def instance_variables(self, instance_id: int) -> list[VariableRow]:
        self._index()
        return list(self._ivars_by_inst.get(instance_id, []))


# --- query primitives ---

def breakpoints_at(table: SymbolTable, file: str, line: int,
                   column: Optional[int] = None) -> list[BreakpointRow]:
    """All breakpoints at (file, line[, column]) across instances, in
    evaluation order. No match is an empty list, not an error."""
    table._index()
    rows = table._by_loc.get((file, line), [])
    if column is not None:
        rows = [b for b in rows if b.column == column]
    return list(rows)


def scope_of(table: SymbolTable, breakpoint_id: int) -> list[tuple[str, VariableRow]]:
    """Frame-local variables visible at a breakpoint, SSA context applied."""
    table.breakpoint(breakpoint_id)  # raises on unknown id
    table._index()
    return [
        (s.source_name, table.variable(s.variable_id))
        for s in table._scope_by_bp.get(breakpoint_id, [])
    ]


def resolve(table: SymbolTable,
            context: Union[BreakpointRow, InstanceRow, int, str],
            source_name: str) -> str:
    """Resolve a source-level name to a hierarchical RTL net name.

    A breakpoint context (row or id) consults the breakpoint's scope first,
    then its instance's variables; an instance context (row or path) consults
    instance variables only.
    """
    if isinstance(context, int):
        context = table.breakpoint(context)
    elif isinstance(context, str):
        context = table.instance(context)
    if isinstance(context, BreakpointRow):
        for name, var in scope_of(table, context.id):
            if name == source_name:
                return var.rtl_name
        instance_id = context.instance_id
    elif isinstance(context, InstanceRow):
        instance_id = context.id
    else:
        raise TypeError(f"bad resolve context: {context!r}")
    for var in table.instance_variables(instance_id):
        if var.source_name == source_name:
            return var.rtl_name
    raise SymbolTableError(f"unknown name {source_name!r} in this context")


# --- reference (naive relational) implementations, used to cross-check ---

def relational_breakpoints_at(table, file, line, column=None):
    rows = [
        b for b in table.breakpoints
        if b.file == file and b.line == line and (column is None or b.column == column)
    ]
    return sorted(rows, key=lambda b: (b.order_index, b.instance_id))


def relational_scope_of(table, breakpoint_id):
    if not any(b.id == breakpoint_id for b in table.breakpoints):
        raise SymbolTableError(f"unknown breakpoint id {breakpoint_id}")
    by_id = {v.id: v for v in table.variables}
    return [
        (s.source_name, by_id[s.variable_id])
        for s in table.scope_variables
        if s.breakpoint_id == breakpoint_id
    ]


# --- integrity ---

def check_integrity(table: SymbolTable):
    """Foreign keys resolve, unique keys hold, order_index is dense per file."""
    inst_ids = {i.id for i in table.instances}
    if len(inst_ids) != len(table.instances):
        raise SymbolTableError("duplicate instance ids")
    if len({i.name for i in table.instances}) != len(table.instances):
        raise SymbolTableError("duplicate instance paths")
    bp_ids = set()
    bp_keys = set()
    for b in table.breakpoints:
        if b.id in bp_ids:
            raise SymbolTableError("duplicate breakpoint ids")
        bp_ids.add(b.id)
        key = (b.instance_id, b.file, b.line, b.column, b.ordinal)
        if key in bp_keys:
            raise SymbolTableError(f"duplicate breakpoint key {key}")
        bp_keys.add(key)
        if b.instance_id not in inst_ids:
            raise SymbolTableError(f"breakpoint {b.id} references missing instance")
    var_ids = set()
    for v in table.variables:
        if v.id in var_ids:
            raise SymbolTableError("duplicate variable ids")
        var_ids.add(v.id)
        if v.instance_id not in inst_ids:
            raise SymbolTableError(f"variable {v.id} references missing instance")
    scope_keys = set()
    for s in table.scope_variables:
        if s.breakpoint_id not in bp_ids:
            raise SymbolTableError("scope variable references missing breakpoint")
        if s.variable_id not in var_ids:
            raise SymbolTableError("scope variable references missing variable")
        key = (s.breakpoint_id, s.source_name)
        if key in scope_keys:
            raise SymbolTableError(f"duplicate scope variable {key}")
        scope_keys.add(key)
    by_file: dict[str, list[int]] = {}
    for b in table.breakpoints:
        by_file.setdefault(b.file, []).append(b.order_index)
    for file, indexes in by_file.items():
        if sorted(indexes) != list(range(len(indexes))):
            raise SymbolTableError(f"order_index not dense 0..N-1 for {file!r}")


# --- persistence: SQLite v3 ---

_SCHEMA = """
CREATE TABLE meta (key TEXT PRIMARY KEY, value TEXT NOT NULL);
CREATE TABLE instance (
    id INTEGER PRIMARY KEY,
    name TEXT NOT NULL UNIQUE,
    module_name TEXT NOT NULL
);
CREATE TABLE breakpoint (
    id INTEGER PRIMARY KEY,
    instance_id INTEGER NOT NULL REFERENCES instance(id),
    file TEXT NOT NULL,
    line INTEGER NOT NULL,
    column INTEGER NOT NULL,
    ordinal INTEGER NOT NULL,
    enable TEXT NOT NULL,
    order_index INTEGER NOT NULL,
    UNIQUE (instance_id, file, line, column, ordinal)
);
CREATE TABLE variable (
    id INTEGER PRIMARY KEY,
    rtl_name TEXT NOT NULL,
    source_name TEXT NOT NULL,
    is_instance_var INTEGER NOT NULL,
    instance_id INTEGER NOT NULL REFERENCES instance(id)
);
CREATE TABLE scope_variable (
    seq INTEGER PRIMARY KEY,
    breakpoint_id INTEGER NOT NULL REFERENCES breakpoint(id),
    variable_id INTEGER NOT NULL REFERENCES variable(id),
    source_name TEXT NOT NULL,
    UNIQUE (breakpoint_id, source_name)
);
"""


def store(table: SymbolTable, path: Union[str, os.PathLike]):
    """Write atomically: a reader never observes a partial table."""
    path = os.fspath(path)
    directory = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(prefix=".symtab-", suffix=FILE_SUFFIX, dir=directory)
    os.close(fd)
    try:
        con = sqlite3.connect(tmp)
        try:
            con.executescript(_SCHEMA)
            con.execute("INSERT INTO meta VALUES ('schema_version', ?)", (str(SCHEMA_VERSION),))
            con.executemany(
                "INSERT INTO instance VALUES (?, ?, ?)",
                [(i.id, i.name, i.module_name) for i in table.instances],
            )
            con.executemany(
                "INSERT INTO breakpoint VALUES (?, ?, ?, ?, ?, ?, ?, ?)",
                [(b.id, b.instance_id, b.file, b.line, b.column, b.ordinal,
                  b.enable, b.order_index) for b in table.breakpoints],
            )
            con.executemany(
                "INSERT INTO variable VALUES (?, ?, ?, ?, ?)",
                [(v.id, v.rtl_name, v.source_name, int(v.is_instance_var), v.instance_id)
                 for v in table.variables],
            )
            con.executemany(
                "INSERT INTO scope_variable VALUES (?, ?, ?, ?)",
                [(i, s.breakpoint_id, s.variable_id, s.source_name)
                 for i, s in enumerate(table.scope_variables)],
            )
            con.commit()
        finally:
            con.close()
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def load(path: Union[str, os.PathLike]) -> SymbolTable:
    path = os.fspath(path)
    if not os.path.exists(path):
        raise SymbolTableError(f"no such file: {path}")
    try:
        con = sqlite3.connect(f"file:{path}?mode=ro", uri=True)
        try:
            version = con.execute(
                "SELECT value FROM meta WHERE key = 'schema_version'"
            ).fetchone()
            if version is None:
                raise SymbolTableError("malformed symbol table: missing schema version")
            if int(version[0]) != SCHEMA_VERSION:
                raise SymbolTableError(
                    f"schema version mismatch: file has {version[0]}, expected {SCHEMA_VERSION}"
                )
            table = SymbolTable()
            for row in con.execute("SELECT id, name, module_name FROM instance ORDER BY id"):
                table.instances.append(InstanceRow(*row))
            for row in con.execute(
                "SELECT id, instance_id, file, line, column, ordinal, enable, order_index "
                "FROM breakpoint ORDER BY id"
            ):
                table.breakpoints.append(BreakpointRow(*row))
            for row in con.execute(
                "SELECT id, rtl_name, source_name, is_instance_var, instance_id "
                "FROM variable ORDER BY id"
            ):
                table.variables.append(VariableRow(row[0], row[1], row[2], bool(row[3]), row[4]))
            for row in con.execute(
                "SELECT breakpoint_id, variable_id, source_name FROM scope_variable ORDER BY seq"
            ):
                table.scope_variables.append(ScopeVariableRow(*row))
        finally:
            con.close()
    except sqlite3.DatabaseError as e:
        raise SymbolTableError(f"malformed symbol table file: {e}") from e
    check_integrity(table)
    return table


# --- JSON export (same row content; for debugging and the web UI) ---

def to_json(table: SymbolTable) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "instances": [asdict(i) for i in table.instances],
        "breakpoints": [asdict(b) for b in table.breakpoints],
        "variables": [asdict(v) for v in table.variables],
        "scope_variables": [asdict(s) for s in table.scope_variables],
    }


def from_json(data: dict) -> SymbolTable:
    if data.get("schema_version") != SCHEMA_VERSION:
        raise SymbolTableError("schema version mismatch in JSON symbol table")
    table = SymbolTable(
        instances=[InstanceRow(**r) for r in data["instances"]],
        breakpoints=[BreakpointRow(**r) for r in data["breakpoints"]],
        variables=[VariableRow(**r) for r in data["variables"]],
        scope_variables=[ScopeVariableRow(**r) for r in data["scope_variables"]],
    )
    check_integrity(table)
    return table


def save_json(table: SymbolTable, path: Union[str, os.PathLike]):
    with open(path, "w", encoding="utf-8") as f:
        json.dump(to_json(table), f, indent=2, sort_keys=True)
        f.write("\n")


def load_json(path: Union[str, os.PathLike]) -> SymbolTable:
    with open(path, encoding="utf-8") as f:
        return from_json(json.load(f))
