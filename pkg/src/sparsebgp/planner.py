"""Graph-based query planning by direction- or degree-driven DFS.

A plan is a forest of *occurrences*: every time a group centred at ``v``
reaches a neighbour ``w`` a child occurrence of ``w`` is created, so a vertex
reached along two routes (a cycle) occurs twice. Occurrences that are popped
while their vertex still has unevaluated edges become group centres. The
root-to-leaf occurrence sequences are the traversal paths, and the depth of a
centre is the level of every edge in its group.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal

from .query import QueryGraph, classify_edges

__all__ = [
    "PlanModeError",
    "Occurrence",
    "Group",
    "QueryPlan",
    "plan_direction",
    "plan_degree",
    "plan_query",
    "compute_levels_paths",
    "is_cyclic",
]

Traversal = Literal["direction", "degree"]
EdgeClass = Literal["consistent", "opposite"]


class PlanModeError(ValueError):
    pass


@dataclass
class Occurrence:
    id: int
    vertex: int
    root: int
    parent: int | None
    # edges linking the parent to this occurrence; "out" means the parent is the source
    via: tuple[tuple[int, str], ...]
    depth: int
    group: int | None = None
    children: list[int] = field(default_factory=list)


@dataclass
class Group:
    index: int
    center: int
    occurrence: int
    root: int
    level: int
    edges: tuple[int, ...]
    self_loops: tuple[int, ...]


@dataclass
class QueryPlan:
    traversal: Traversal
    roots: list[int]
    groups: list[Group]
    occurrences: list[Occurrence]
    root_occurrences: list[int]
    light: tuple[int, ...] = ()
    edge_level: dict[int, int] = field(default_factory=dict)
    edge_class: dict[int, EdgeClass] = field(default_factory=dict)
    paths: list[list[tuple[int, ...]]] = field(default_factory=list)
    path_occurrences: list[list[tuple[int, ...]]] = field(default_factory=list)
    lr: list[int] = field(default_factory=list)
    l_max: int = 0

    def group_edges(self) -> list[tuple[int, list[int]]]:
        return [(g.center, list(g.edges)) for g in self.groups]

    def root_groups(self, r: int) -> list[Group]:
        return [g for g in self.groups if g.root == r]

    def level_groups(self, r: int, level: int) -> list[Group]:
        return [g for g in self.groups if g.root == r and g.level == level]

    def to_json(self, g: QueryGraph | None = None) -> dict:
        def name(v):
            return g.vertices[v].label if g is not None else v

        return {
            "traversal": self.traversal,
            "roots": [name(v) for v in self.roots],
            "groups": [
                {
                    "root": grp.root,
                    "center": name(grp.center),
                    "level": grp.level,
                    "edges": list(grp.edges),
                }
                for grp in self.groups
            ],
            "light": list(self.light),
            "edge_level": {str(k): v for k, v in sorted(self.edge_level.items())},
            "edge_class": {str(k): v for k, v in sorted(self.edge_class.items())},
            "paths": [[[name(v) for v in p] for p in ps] for ps in self.paths],
            "lr": list(self.lr),
            "L": self.l_max,
        }


def _traverse(g: QueryGraph, traversal: Traversal) -> QueryPlan:
    light_set, heavy_set = classify_edges(g)
    light = tuple(sorted(e.index for e in light_set))
    heavy = {e.index for e in heavy_set}
    n = len(g.vertices)
    out_e: list[list[int]] = [[] for _ in range(n)]
    in_e: list[list[int]] = [[] for _ in range(n)]
    for e in g.edges:
        if e.index in heavy:
            out_e[e.src].append(e.index)
            if e.dst != e.src:
                in_e[e.dst].append(e.index)

    unevaluated = set(heavy)
    visited: set[int] = {v.id for v in g.constants}
    const_adjacent = set()
    for e in light_set:
        const_adjacent.update(x for x in (e.src, e.dst) if g.vertices[x].is_variable)

    def n_out(v):
        return sum(1 for e in out_e[v] if e in unevaluated)

    def n_in(v):
        return sum(1 for e in in_e[v] if e in unevaluated)

    def n_all(v):
        return n_out(v) + n_in(v)

    # connected components over heavy edges; roots are opened component by component
    comp = list(range(n))

    def find(x):
        while comp[x] != x:
            comp[x] = comp[comp[x]]
            x = comp[x]
        return x

    for ei in heavy:
        e = g.edges[ei]
        comp[find(e.src)] = find(e.dst)

    def pick_root() -> int:
        first = min(v for v in range(n) if n_all(v) > 0)
        c = find(first)
        free = [v.id for v in g.variables if v.id not in visited and find(v.id) == c]
        if traversal == "direction":
            cands = [v for v in free if n_in(v) == 0 and n_out(v) > 0]
            if not cands:
                cands = [v for v in free if n_out(v) > 0]
            if not cands:
                cands = [v.id for v in g.variables if n_out(v.id) > 0 and find(v.id) == c]
            return min(cands, key=lambda v: (-n_out(v), v))
        cands = [v for v in free if n_all(v) > 0]
        preferred = [v for v in cands if v in const_adjacent]
        if preferred:
            cands = preferred
        if not cands:
            cands = [v.id for v in g.variables if n_all(v.id) > 0 and find(v.id) == c]
        return min(cands, key=lambda v: (-n_all(v), -n_out(v), v))

    roots: list[int] = []
    root_occ: list[int] = []
    occs: list[Occurrence] = []
    groups: list[Group] = []

    while unevaluated:
        root = pick_root()
        r = len(roots)
        roots.append(root)
        visited.add(root)
        occ = Occurrence(len(occs), root, r, None, (), 0)
        occs.append(occ)
        root_occ.append(occ.id)
        stack = [occ]
        while stack:
            o = stack.pop()
            v = o.vertex
            if traversal == "direction":
                es = [e for e in out_e[v] if e in unevaluated]
            else:
                es = sorted(e for e in out_e[v] + in_e[v] if e in unevaluated)
            if not es:
                continue
            unevaluated.difference_update(es)
            nbrs: dict[int, list[tuple[int, str]]] = {}
            loops = []
            for ei in es:
                e = g.edges[ei]
                if e.src == e.dst:
                    loops.append(ei)
                elif e.src == v:
                    nbrs.setdefault(e.dst, []).append((ei, "out"))
                else:
                    nbrs.setdefault(e.src, []).append((ei, "in"))
            o.group = len(groups)
            groups.append(Group(len(groups), v, o.id, r, o.depth, tuple(es), tuple(loops)))
            visited.update(nbrs)
            if traversal == "direction":
                order = sorted(nbrs, key=lambda w: (n_out(w), w))
            else:
                order = sorted(nbrs, key=lambda w: (n_all(w), n_out(w), w))
            pushed = []
            for w in order:
                child = Occurrence(len(occs), w, r, o.id, tuple(nbrs[w]), o.depth + 1)
                occs.append(child)
                pushed.append(child)
                stack.append(child)
            # children listed in pop order
            o.children = [c.id for c in reversed(pushed)]

    edge_class: dict[int, EdgeClass] = {}
    for grp in groups:
        for ei in grp.edges:
            edge_class[ei] = "consistent" if g.edges[ei].src == grp.center else "opposite"
    plan = QueryPlan(traversal, roots, groups, occs, root_occ, light, edge_class=edge_class)
    return compute_levels_paths(plan, g)


def plan_direction(g: QueryGraph) -> QueryPlan:
    """Direction-driven traversal: groups hold the unevaluated out-edges of each popped vertex."""
    if g.constants:
        raise PlanModeError(
            "query has constant vertices; direction-driven planning is not defined for them, use degree-driven planning"
        )
    return _traverse(g, "direction")


def plan_degree(g: QueryGraph) -> QueryPlan:
    """Degree-driven traversal: groups hold every unevaluated edge incident to the popped vertex.

    Constant-incident edges are light and pre-evaluated; roots are then
    chosen among the constants' neighbours.
    """
    return _traverse(g, "degree")


def plan_query(g: QueryGraph, traversal: str = "auto") -> QueryPlan:
    if traversal in ("auto", "degree"):
        return plan_degree(g)
    if traversal == "direction":
        return plan_direction(g)
    raise ValueError(f"unknown traversal {traversal!r}")


def compute_levels_paths(plan: QueryPlan, g: QueryGraph) -> QueryPlan:
    """Fill edge levels, per-root paths and level counts from the occurrence forest."""
    plan.edge_level = {ei: grp.level for grp in plan.groups for ei in grp.edges}
    plan.paths = []
    plan.path_occurrences = []
    for ro in plan.root_occurrences:
        paths: list[tuple[int, ...]] = []
        stack = [(ro, (ro,))]
        while stack:
            oid, seq = stack.pop()
            kids = plan.occurrences[oid].children
            if not kids:
                paths.append(seq)
            for c in reversed(kids):
                stack.append((c, seq + (c,)))
        plan.path_occurrences.append(paths)
        plan.paths.append([tuple(plan.occurrences[o].vertex for o in p) for p in paths])
    plan.lr = [
        1 + max(grp.level for grp in plan.groups if grp.root == r) for r in range(len(plan.roots))
    ]
    plan.l_max = max(plan.lr, default=0)
    return plan


def is_cyclic(g: QueryGraph) -> bool:
    """True if the undirected multigraph underlying the query has a cycle."""
    parent = list(range(len(g.vertices)))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for e in g.edges:
        a, b = find(e.src), find(e.dst)
        if a == b:
            return True
        parent[a] = b
    return False
