"""Query evaluation: light edges on the triple store, heavy edges per worker.

Each worker walks its first-stage rows/columns one at a time. A centre
binding survives when every edge of its group has a match in the binding's
row (consistent edges) or column (opposite edges); the neighbours found become
the candidate bindings of the next-level centres, evaluated depth-first. With
pre-pruning, a binding whose group or descendants fail is dropped at once and
its sub-trees are never built.
"""

from __future__ import annotations

import os
import time
from collections.abc import Mapping
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields

import numpy as np

from .lspm import LspmCsc, LspmCsr, _Compressed
from .partition import ABSENT, NodeAssignment, Partitioning, WorkerShare
from .planner import Group, QueryPlan
from .query import QueryEdge, QueryGraph
from .rdf import Dictionary, TripleSet
from .trees import BindingTree, TreeNode, serialized_size

__all__ = [
    "SufficiencyError",
    "LightResult",
    "ExecStats",
    "NodeView",
    "keep_sets",
    "eval_light",
    "eval_vertex_group",
    "run_worker",
    "run_all",
]


class SufficiencyError(RuntimeError):
    """A worker needed a row/column its node was not assigned."""


@dataclass
class LightResult:
    bindings: dict[int, set[int]] = field(default_factory=dict)
    pairs: dict[int, set[tuple[int, int]]] = field(default_factory=dict)
    satisfiable: bool = True


@dataclass
class ExecStats:
    light_s: float = 0.0
    partition_s: float = 0.0
    host_to_device_s: float = 0.0
    host_to_device_bytes: int = 0
    evaluation_s: float = 0.0
    device_to_host_s: float = 0.0
    device_to_host_bytes: int = 0
    postprocess_s: float = 0.0
    rows_scanned: int = 0
    bindings: int = 0
    trees_formed: int = 0
    trees_deleted: int = 0
    misses: int = 0

    def add_counts(self, other: "ExecStats") -> None:
        for name in ("rows_scanned", "bindings", "trees_formed", "trees_deleted", "misses"):
            setattr(self, name, getattr(self, name) + getattr(other, name))

    def phases(self) -> dict[str, float]:
        return {
            "Light Evaluation": self.light_s,
            "Partition": self.partition_s,
            "Host to Device": self.host_to_device_s,
            "Evaluation": self.evaluation_s,
            "Device to Host": self.device_to_host_s,
            "Post-processing": self.postprocess_s,
        }

    def to_json(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


def keep_sets(plan: QueryPlan, g: QueryGraph, dictionary: Dictionary) -> tuple[set[int], set[int]]:
    """Predicate ids stored row-wise and column-wise.

    Consistent edges go row-wise and opposite edges column-wise; edges out of
    a constant count as consistent and edges into a constant as opposite.
    """
    csr: set[int] = set()
    csc: set[int] = set()
    for e in g.edges:
        pid = dictionary.predicate_id(e.predicate)
        if pid is None:
            continue
        if e.index in plan.edge_class:
            (csr if plan.edge_class[e.index] == "consistent" else csc).add(pid)
        else:
            if not g.vertices[e.src].is_variable:
                csr.add(pid)
            if not g.vertices[e.dst].is_variable:
                csc.add(pid)
    return csr, csc


def eval_light(t: TripleSet, dictionary: Dictionary, g: QueryGraph, light: list[QueryEdge] | None = None) -> LightResult:
    """Evaluate constant-incident edges by scanning the triple arrays."""
    if light is None:
        light = [e for e in g.edges if not (g.vertices[e.src].is_variable and g.vertices[e.dst].is_variable)]
    res = LightResult()
    for e in light:
        pid = dictionary.predicate_id(e.predicate)
        mask = t.vals == (pid if pid is not None else -1)
        ends = []
        for x in (e.src, e.dst):
            v = g.vertices[x]
            ends.append(None if v.is_variable else dictionary.entity_id(v.term))
        if ends[0] is not None or not g.vertices[e.src].is_variable:
            mask &= t.rows == (ends[0] if ends[0] is not None else -1)
        if ends[1] is not None or not g.vertices[e.dst].is_variable:
            mask &= t.cols == (ends[1] if ends[1] is not None else -1)
        if e.src == e.dst:
            mask &= t.rows == t.cols
        pairs = set(zip(t.rows[mask].tolist(), t.cols[mask].tolist()))
        res.pairs[e.index] = pairs
        if not pairs:
            res.satisfiable = False
        for x, pos in ((e.src, 0), (e.dst, 1)):
            if g.vertices[x].is_variable:
                b = {pr[pos] for pr in pairs}
                res.bindings[x] = res.bindings[x] & b if x in res.bindings else b
                if not res.bindings[x]:
                    res.satisfiable = False
    return res


def _int32_bytes(*arrays) -> int:
    return sum(4 * len(a) for a in arrays)


class _LocalStore:
    """The rows (or columns) one node holds, re-packed into compressed form."""

    def __init__(self, mat: _Compressed | None, held: np.ndarray, index: np.ndarray):
        self.mat = mat
        self.index = index
        if mat is None or len(held) == 0:
            self.p = np.zeros(1, dtype=np.int64)
            self.val = np.zeros(0, dtype=np.int64)
            self.idx = np.zeros(0, dtype=np.int64)
            return
        spans = [mat.span(int(i)) for i in held]
        lengths = np.array([b - a for a, b in spans], dtype=np.int64)
        self.p = np.concatenate(([0], np.cumsum(lengths)))
        take = np.concatenate([np.arange(a, b) for a, b in spans]) if spans else np.zeros(0, dtype=np.int64)
        self.val = mat.val[take]
        self.idx = mat.idx[take]

    def nbytes(self) -> int:
        return _int32_bytes(self.p, self.val, self.idx)


class NodeView:
    """Read-only data of one node: local CSR rows and CSC columns plus the index maps."""

    def __init__(self, assignment: NodeAssignment, csr: LspmCsr | None, csc: LspmCsc | None, strict: bool = False):
        self.assignment = assignment
        self.csr, self.csc = csr, csc
        self.strict = strict
        self.rows = _LocalStore(csr, assignment.held_rows, assignment.ir)
        self.cols = _LocalStore(csc, assignment.held_cols, assignment.ic)

    def nbytes(self) -> int:
        a = self.assignment
        return _int32_bytes(a.au_rows, a.au_cols, a.ir, a.ic) + self.rows.nbytes() + self.cols.nbytes()

    def matches(self, x: int, pid: int, consistent: bool, stats: ExecStats) -> np.ndarray:
        """Other endpoints of predicate ``pid`` in row (consistent) or column x."""
        store = self.rows if consistent else self.cols
        mat = store.mat
        if mat is None or not mat.has(x):
            return np.zeros(0, dtype=np.int64)
        stats.rows_scanned += 1
        k = store.index[x]
        if k == ABSENT:
            stats.misses += 1
            if self.strict:
                kind = "row" if consistent else "column"
                raise SufficiencyError(f"{kind} {x} not assigned to node {self.assignment.node_id}")
            a, b = mat.span(x)
            val, idx = mat.val[a:b], mat.idx[a:b]
        else:
            a, b = store.p[k], store.p[k + 1]
            val, idx = store.val[a:b], store.idx[a:b]
        return idx[val == pid]


def eval_vertex_group(
    view: NodeView,
    center_binding: int,
    group: Group,
    g: QueryGraph,
    pids: Mapping[int, int | None],
    stats: ExecStats | None = None,
    stop_on_empty: bool = True,
) -> dict[int, np.ndarray] | None:
    """Matches of every edge of ``group`` for one centre binding.

    Returns edge index -> other-endpoint bindings, or None when some edge has
    no match and the remaining edges are skipped. With ``stop_on_empty`` off
    every edge is scanned and the partial map is returned; empty arrays then
    mark the failing edges.
    """
    stats = stats if stats is not None else ExecStats()
    out: dict[int, np.ndarray] = {}
    ok = True
    for ei in group.edges:
        e = g.edges[ei]
        pid = pids[ei]
        if pid is None:
            m = np.zeros(0, dtype=np.int64)
        else:
            m = view.matches(center_binding, pid, e.src == group.center, stats)
            if e.src == e.dst:
                m = m[m == center_binding]
        out[ei] = m
        if len(m) == 0:
            ok = False
            if stop_on_empty:
                return None
    return out if ok else (None if stop_on_empty else out)


# A sub-result maps each child occurrence to {binding: sub-result of that binding}.
Sub = dict[int, dict[int, "Sub"]]


def _evaluate(view, plan, g, pids, light, stats, pre_pruning):
    memo: dict[tuple[int, int], Sub | None] = {}

    def center(oid: int, x: int) -> Sub | None:
        key = (oid, x)
        if key in memo:
            return memo[key]
        occ = plan.occurrences[oid]
        grp = plan.groups[occ.group]
        m = eval_vertex_group(view, x, grp, g, pids, stats, stop_on_empty=pre_pruning)
        if m is None:
            memo[key] = None
            return None
        # without pre-pruning everything below x is still evaluated; x is dropped afterwards
        failed = any(len(v) == 0 for v in m.values())
        sub: Sub = {}
        for c in occ.children:
            child = plan.occurrences[c]
            cand: set[int] | None = None
            for ei, _ in child.via:
                s = set(m[ei].tolist())
                cand = s if cand is None else cand & s
            cand = cand or set()
            if child.vertex in light.bindings:
                cand &= light.bindings[child.vertex]
            stats.bindings += len(cand)
            kept: dict[int, Sub] = {}
            for y in sorted(cand):
                if child.group is None:
                    kept[y] = {}
                    continue
                s = center(c, y)
                if s is not None:
                    kept[y] = s
            if not kept:
                failed = True
                if pre_pruning:
                    # no usable binding for this child: drop everything built under x
                    break
            sub[c] = kept
        result = None if failed else sub
        memo[key] = result
        return result

    return center


def _build_path_tree(
    plan: QueryPlan, path_occ: tuple[int, ...], binding: int, sub: Sub, cache: dict | None = None
) -> TreeNode:
    # sub-results are shared through the evaluation memo, so equal subtrees can be shared too
    cache = {} if cache is None else cache

    def build(pos: int, b: int, s: Sub) -> TreeNode:
        key = (path_occ, pos, b, id(s))
        node = cache.get(key)
        if node is not None:
            return node
        if pos + 1 == len(path_occ):
            node = TreeNode(b, ())
        else:
            kids = s.get(path_occ[pos + 1], {})
            node = TreeNode(b, tuple(build(pos + 1, y, kids[y]) for y in sorted(kids)))
        cache[key] = node
        return node

    return build(0, binding, sub)


def run_worker(
    view: NodeView,
    share: WorkerShare,
    plan: QueryPlan,
    g: QueryGraph,
    pids: Mapping[int, int | None],
    light: LightResult | None = None,
    pre_pruning: bool = True,
    root_order: list[int] | None = None,
    stats: ExecStats | None = None,
) -> list[BindingTree]:
    """Evaluate one worker's share, returning its binding trees in (root, binding, path) order."""
    stats = stats if stats is not None else ExecStats()
    light = light if light is not None else LightResult()
    center = _evaluate(view, plan, g, pids, light, stats, pre_pruning)
    out: list[BindingTree] = []
    cache: dict = {}
    order = root_order if root_order is not None else sorted(share.roots)
    for r in order:
        rs = share.roots.get(r)
        if rs is None:
            continue
        ro = plan.root_occurrences[r]
        root_vertex = plan.roots[r]
        for b in rs.bindings:
            if root_vertex in light.bindings and b not in light.bindings[root_vertex]:
                continue
            sub = center(ro, b)
            if sub is None:
                continue
            for k, path_occ in enumerate(plan.path_occurrences[r]):
                tree = BindingTree(r, b, k, plan.paths[r][k], _build_path_tree(plan, path_occ, b, sub, cache))
                stats.trees_formed += 1
                out.append(tree)
    return out


def _pid_map(g: QueryGraph, dictionary: Dictionary) -> dict[int, int | None]:
    return {e.index: dictionary.predicate_id(e.predicate) for e in g.edges}


def run_all(
    parts: Partitioning,
    csr: LspmCsr | None,
    csc: LspmCsc | None,
    plan: QueryPlan,
    g: QueryGraph,
    dictionary: Dictionary,
    light: LightResult | None = None,
    pre_pruning: bool = True,
    strict: bool = False,
    max_threads: int | None = None,
    stats: ExecStats | None = None,
) -> tuple[list[list[BindingTree]], ExecStats]:
    """Run every worker share concurrently; trees come back grouped by node, in worker order."""
    stats = stats if stats is not None else ExecStats()
    pids = _pid_map(g, dictionary)

    t0 = time.perf_counter()
    views = [NodeView(a, csr, csc, strict) for a in parts.nodes]
    stats.host_to_device_bytes += sum(v.nbytes() for v in views)
    stats.host_to_device_s += time.perf_counter() - t0

    jobs = [(n, w) for n, a in enumerate(parts.nodes) for w in a.workers]
    worker_stats = [ExecStats() for _ in jobs]

    def job(k: int) -> list[BindingTree]:
        n, w = jobs[k]
        if w.empty:
            return []
        return run_worker(views[n], w, plan, g, pids, light, pre_pruning, parts.root_order, worker_stats[k])

    t0 = time.perf_counter()
    threads = max_threads or min(len(jobs), os.cpu_count() or 1)
    if threads <= 1 or len(jobs) <= 1:
        results = [job(k) for k in range(len(jobs))]
    else:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            results = list(ex.map(job, range(len(jobs))))
    stats.evaluation_s += time.perf_counter() - t0

    t0 = time.perf_counter()
    per_node: list[list[BindingTree]] = [[] for _ in parts.nodes]
    for (n, _), trees in zip(jobs, results):
        per_node[n].extend(trees)
        stats.device_to_host_bytes += sum(serialized_size(t) for t in trees)
    for ws in worker_stats:
        stats.add_counts(ws)
    stats.device_to_host_s += time.perf_counter() - t0
    return per_node, stats
