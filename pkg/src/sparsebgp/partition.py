"""Multi-stage partitioning of LSpM rows/columns over ``np`` nodes x ``nt`` workers.

First stage: the rows and/or columns a root's level-0 group is evaluated on
are split into contiguous blocks, one per worker. Next stage: each node
additionally receives the rows/columns its deeper levels can reach from its
first-stage data.

First-stage shares are computed per root, so roots whose level-0 groups
differ in direction never drop each other's rows.
"""

from __future__ import annotations

import json
from collections.abc import Iterator, Mapping
from dataclasses import dataclass, field

import numpy as np

from .lspm import LspmCsc, LspmCsr, _Compressed
from .planner import QueryPlan

__all__ = [
    "ABSENT",
    "PartitionSpec",
    "RootShare",
    "WorkerShare",
    "NodeAssignment",
    "Partitioning",
    "root_requirements",
    "partition_first_stage",
    "partition_next_stage",
    "partition_with_constants",
    "partition",
]

ABSENT = -1


@dataclass(frozen=True)
class PartitionSpec:
    np: int = 1
    nt: int = 1

    def __post_init__(self) -> None:
        if self.np < 1 or self.nt < 1:
            raise ValueError("np and nt must be >= 1")

    @property
    def parts(self) -> int:
        return self.np * self.nt


@dataclass(frozen=True)
class RootShare:
    bindings: tuple[int, ...]
    uses_rows: bool
    uses_cols: bool


@dataclass
class WorkerShare:
    node: int
    thread: int
    roots: dict[int, RootShare] = field(default_factory=dict)

    @property
    def rows(self) -> list[int]:
        return sorted({b for s in self.roots.values() if s.uses_rows for b in s.bindings})

    @property
    def cols(self) -> list[int]:
        return sorted({b for s in self.roots.values() if s.uses_cols for b in s.bindings})

    @property
    def empty(self) -> bool:
        return not any(s.bindings for s in self.roots.values())


@dataclass
class NodeAssignment:
    node_id: int
    n: int
    workers: list[WorkerShare]
    au_rows: np.ndarray
    au_cols: np.ndarray
    extra_rows: dict[int, list[int]] = field(default_factory=dict)
    extra_cols: dict[int, list[int]] = field(default_factory=dict)
    ir: np.ndarray = field(default=None)
    ic: np.ndarray = field(default=None)

    def __post_init__(self) -> None:
        self.rebuild_index()

    @property
    def first_stage(self) -> list[tuple[list[int], list[int]]]:
        return [(w.rows, w.cols) for w in self.workers]

    @property
    def held_rows(self) -> np.ndarray:
        extra = [r for rs in self.extra_rows.values() for r in rs]
        return np.union1d(self.au_rows, np.asarray(extra, dtype=np.int64))

    @property
    def held_cols(self) -> np.ndarray:
        extra = [c for cs in self.extra_cols.values() for c in cs]
        return np.union1d(self.au_cols, np.asarray(extra, dtype=np.int64))

    def rebuild_index(self) -> None:
        self.ir = np.full(self.n, ABSENT, dtype=np.int64)
        self.ic = np.full(self.n, ABSENT, dtype=np.int64)
        rows, cols = self.held_rows, self.held_cols
        self.ir[rows] = np.arange(len(rows))
        self.ic[cols] = np.arange(len(cols))

    def to_json(self) -> dict:
        return {
            "node": self.node_id,
            "workers": [
                {
                    "thread": w.thread,
                    "rows": w.rows,
                    "cols": w.cols,
                    "roots": {str(r): list(s.bindings) for r, s in w.roots.items()},
                }
                for w in self.workers
            ],
            "au_rows": self.au_rows.tolist(),
            "au_cols": self.au_cols.tolist(),
            "extra_rows": {str(k): v for k, v in sorted(self.extra_rows.items())},
            "extra_cols": {str(k): v for k, v in sorted(self.extra_cols.items())},
            "ir": self.ir.tolist(),
            "ic": self.ic.tolist(),
        }


@dataclass
class Partitioning:
    spec: PartitionSpec
    nodes: list[NodeAssignment]
    root_order: list[int]
    eligible: dict[int, tuple[int, ...]]
    dropped_rows: dict[int, tuple[int, ...]] = field(default_factory=dict)
    dropped_cols: dict[int, tuple[int, ...]] = field(default_factory=dict)
    empty: bool = False

    def __iter__(self) -> Iterator[NodeAssignment]:
        return iter(self.nodes)

    def __len__(self) -> int:
        return len(self.nodes)

    def __getitem__(self, i: int) -> NodeAssignment:
        return self.nodes[i]

    def to_json(self) -> dict:
        return {
            "np": self.spec.np,
            "nt": self.spec.nt,
            "empty": self.empty,
            "root_order": self.root_order,
            "eligible": {str(r): list(v) for r, v in self.eligible.items()},
            "dropped_rows": {str(r): list(v) for r, v in self.dropped_rows.items()},
            "dropped_cols": {str(r): list(v) for r, v in self.dropped_cols.items()},
            "nodes": [a.to_json() for a in self.nodes],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2)


def root_requirements(plan: QueryPlan, r: int) -> tuple[bool, bool]:
    """(needs rows, needs columns) for evaluating root ``r``'s level-0 group."""
    occ = plan.occurrences[plan.root_occurrences[r]]
    grp = plan.groups[occ.group]
    classes = {plan.edge_class[e] for e in grp.edges}
    return "consistent" in classes, "opposite" in classes


def _stored(mat: _Compressed | None) -> np.ndarray:
    return mat.stored() if mat is not None else np.zeros(0, dtype=np.int64)


def _gather(mat: _Compressed | None, indices: np.ndarray) -> np.ndarray:
    """Minor indices of all nonzeros in the given original rows (CSR) / columns (CSC)."""
    if mat is None or len(indices) == 0:
        return np.zeros(0, dtype=np.int64)
    indices = np.asarray(indices, dtype=np.int64)
    indices = indices[(mat.m[indices + 1] - mat.m[indices]) > 0]
    k = mat.m[indices]
    starts, ends = mat.p[k], mat.p[k + 1]
    lengths = ends - starts
    if lengths.sum() == 0:
        return np.zeros(0, dtype=np.int64)
    offs = np.repeat(starts - np.concatenate(([0], np.cumsum(lengths)[:-1])), lengths)
    return np.unique(mat.idx[np.arange(lengths.sum()) + offs])


def _eligible(plan, r, csr, csc, bindings):
    uses_rows, uses_cols = root_requirements(plan, r)
    rows = _stored(csr) if uses_rows else None
    cols = _stored(csc) if uses_cols else None
    dropped_r: tuple[int, ...] = ()
    dropped_c: tuple[int, ...] = ()
    if rows is not None and cols is not None:
        both = np.intersect1d(rows, cols)
        dropped_r = tuple(np.setdiff1d(rows, both).tolist())
        dropped_c = tuple(np.setdiff1d(cols, both).tolist())
        elig = both
    else:
        elig = rows if rows is not None else cols
    if bindings is not None:
        elig = np.intersect1d(elig, np.fromiter(bindings, dtype=np.int64))
    return uses_rows, uses_cols, elig, dropped_r, dropped_c


def partition_first_stage(
    csr: LspmCsr,
    csc: LspmCsc | None,
    plan: QueryPlan,
    spec: PartitionSpec,
    root_bindings: Mapping[int, set[int]] | None = None,
    root_order: list[int] | None = None,
) -> Partitioning:
    """Split each root's eligible rows/columns into ``np * nt`` contiguous blocks.

    Eligible indices: stored CSR rows when the root's level-0 edges are all
    direction-consistent, stored CSC columns when all are opposite, and the
    indices stored in both otherwise. ``root_bindings`` (light-query results)
    further restricts a root to its bindings.
    """
    n = csr.n
    order = list(root_order) if root_order is not None else list(range(len(plan.roots)))
    workers = [[WorkerShare(node, t) for t in range(spec.nt)] for node in range(spec.np)]
    eligible: dict[int, tuple[int, ...]] = {}
    dropped_rows: dict[int, tuple[int, ...]] = {}
    dropped_cols: dict[int, tuple[int, ...]] = {}
    for r in order:
        b = root_bindings.get(r) if root_bindings is not None else None
        uses_rows, uses_cols, elig, dr, dc = _eligible(plan, r, csr, csc, b)
        eligible[r] = tuple(elig.tolist())
        if dr:
            dropped_rows[r] = dr
        if dc:
            dropped_cols[r] = dc
        for k, block in enumerate(np.array_split(elig, spec.parts)):
            node, t = divmod(k, spec.nt)
            workers[node][t].roots[r] = RootShare(tuple(block.tolist()), uses_rows, uses_cols)
    nodes = []
    for node in range(spec.np):
        ws = workers[node]
        rows = sorted({x for w in ws for x in w.rows})
        cols = sorted({x for w in ws for x in w.cols})
        nodes.append(
            NodeAssignment(node, n, ws, np.asarray(rows, dtype=np.int64), np.asarray(cols, dtype=np.int64))
        )
    return Partitioning(spec, nodes, order, eligible, dropped_rows, dropped_cols)


def partition_next_stage(
    parts: Partitioning, csr: LspmCsr, csc: LspmCsc | None, plan: QueryPlan
) -> Partitioning:
    """Attach, per node and level, the rows/columns reachable from the previous level.

    Reachability follows the edges connecting level l-1 centres to level l
    centres: through the stored rows when they are direction-consistent and
    through the stored columns when opposite. Level-l groups then need rows
    (columns) at the reached indices for their consistent (opposite) edges.
    """
    stored_rows = _stored(csr)
    stored_cols = _stored(csc)
    for a in parts.nodes:
        held_r = set(a.au_rows.tolist())
        held_c = set(a.au_cols.tolist())
        extra_r: dict[int, set[int]] = {}
        extra_c: dict[int, set[int]] = {}
        for r in parts.root_order:
            frontier = np.asarray(
                sorted({b for w in a.workers for b in w.roots[r].bindings}), dtype=np.int64
            )
            for level in range(1, plan.lr[r]):
                groups = plan.level_groups(r, level)
                dirs = {d for grp in groups for _, d in plan.occurrences[grp.occurrence].via}
                reached = np.zeros(0, dtype=np.int64)
                if "out" in dirs:
                    reached = np.union1d(reached, _gather(csr, frontier))
                if "in" in dirs:
                    reached = np.union1d(reached, _gather(csc, frontier))
                classes = {plan.edge_class[e] for grp in groups for e in grp.edges}
                if "consistent" in classes:
                    add = set(np.intersect1d(reached, stored_rows).tolist()) - held_r
                    if add:
                        extra_r.setdefault(level, set()).update(add)
                        held_r |= add
                if "opposite" in classes:
                    add = set(np.intersect1d(reached, stored_cols).tolist()) - held_c
                    if add:
                        extra_c.setdefault(level, set()).update(add)
                        held_c |= add
                frontier = reached
        a.extra_rows = {lv: sorted(v) for lv, v in sorted(extra_r.items())}
        a.extra_cols = {lv: sorted(v) for lv, v in sorted(extra_c.items())}
        a.rebuild_index()
    return parts


def partition(
    csr: LspmCsr,
    csc: LspmCsc | None,
    plan: QueryPlan,
    spec: PartitionSpec,
) -> Partitioning:
    return partition_next_stage(partition_first_stage(csr, csc, plan, spec), csr, csc, plan)


def partition_with_constants(light, csr: LspmCsr, csc: LspmCsc | None, plan: QueryPlan, spec: PartitionSpec) -> Partitioning:
    """Partition using light-query bindings of the constant-adjacent roots.

    Roots with fewer light bindings come first. A root left without bindings
    makes the whole query empty, and every share is then empty.
    """
    bindings: dict[int, set[int]] = {}
    for r, v in enumerate(plan.roots):
        if v in light.bindings:
            bindings[r] = set(light.bindings[v])
    order = sorted(range(len(plan.roots)), key=lambda r: (len(bindings[r]) if r in bindings else float("inf"), r))
    dead = not light.satisfiable or any(not b for b in bindings.values())
    if dead:
        bindings = {r: set() for r in range(len(plan.roots))}
    parts = partition_first_stage(csr, csc, plan, spec, bindings, order)
    parts.empty = dead
    return partition_next_stage(parts, csr, csc, plan)
