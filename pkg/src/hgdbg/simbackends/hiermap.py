"""Locate the generated design inside an enclosing testbench hierarchy.

The symbol table knows only the generated design's relative hierarchy; the
backend exposes the full simulated tree. Matching finds the backend subtree
whose child-instance structure contains the symbol table's hierarchy, scores
candidates by how many signal leaf names they share, and tie-breaks on the
lexicographically smallest path (with a warning when genuinely ambiguous).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

from ..symtab import SymbolTable
from .base import HierarchyNode, SimError


class MappingError(SimError):
    pass


@dataclass
class HierarchyMap:
    """Injective mapping from generated-top-relative instance paths to
    testbench-absolute paths."""

    prefix_map: dict[str, str] = field(default_factory=dict)

    def translate(self, rtl_name: str) -> str:
        if "." not in rtl_name:
            raise MappingError(f"{rtl_name!r} is not hierarchical")
        instance, leaf = rtl_name.rsplit(".", 1)
        mapped = self.prefix_map.get(instance)
        if mapped is None:
            raise MappingError(f"instance {instance!r} is not mapped")
        return f"{mapped}.{leaf}"

    @staticmethod
    def identity(paths) -> "HierarchyMap":
        return HierarchyMap({p: p for p in paths})


def _structural_match(children: dict[str, dict], node: HierarchyNode) -> bool:
    """Every symbol-table child instance name must appear, recursively."""
    for name, sub in children.items():
        backend_child = node.child(name)
        if backend_child is None or not _structural_match(sub, backend_child):
            return False
    return True


def map_hierarchy(table: SymbolTable, hierarchy: HierarchyNode) -> HierarchyMap:
    if not table.instances:
        raise MappingError("symbol table has no instances")
    paths = [i.name for i in table.instances]
    root_path = min(paths, key=len)
    # Child-name tree of the symbol table's hierarchy.
    tree: dict[str, dict] = {}
    for path in paths:
        if path == root_path:
            continue
        rel = path[len(root_path) + 1:].split(".")
        node = tree
        for part in rel:
            node = node.setdefault(part, {})

    # Signal leaves per relative instance path (from variable rows).
    leaves: dict[str, set[str]] = {p: set() for p in paths}
    for var in table.variables:
        if "." in var.rtl_name:
            inst, leaf = var.rtl_name.rsplit(".", 1)
            if inst in leaves:
                leaves[inst].add(leaf)

    candidates: list[tuple[int, str, HierarchyNode]] = []
    for path, node in hierarchy.walk():
        if not _structural_match(tree, node):
            continue
        score = 0
        for sym_path in paths:
            rel = sym_path[len(root_path) + 1:]
            backend_node = node
            ok = True
            for part in (rel.split(".") if rel else []):
                backend_node = backend_node.child(part)
                if backend_node is None:
                    ok = False
                    break
            if not ok:
                continue
            names = {leaf for leaf, _w in backend_node.signals}
            score += len(leaves[sym_path] & names)
        candidates.append((score, path, node))

    if not candidates:
        raise MappingError("no backend subtree matches the symbol table hierarchy")
    candidates.sort(key=lambda c: (-c[0], c[1]))
    best_score, best_path, _node = candidates[0]
    ties = [c for c in candidates if c[0] == best_score]
    if len(ties) > 1:
        warnings.warn(
            f"ambiguous hierarchy mapping: {[c[1] for c in ties]} all score {best_score}; "
            f"picking {best_path!r}",
            stacklevel=2,
        )

    prefix_map = {}
    for sym_path in paths:
        rel = sym_path[len(root_path) + 1:]
        prefix_map[sym_path] = f"{best_path}.{rel}" if rel else best_path
    return HierarchyMap(prefix_map)
