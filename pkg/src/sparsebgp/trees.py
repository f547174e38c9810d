"""Binding trees, local/global tree pruning and final solution enumeration.

A binding tree belongs to one root binding and one plan path; the node at
depth d holds a binding of the d-th vertex on the path, and its children are
the bindings of the next vertex found under it. The trees of all paths of a
root binding are joined on their shared variables to form solutions.
"""

from __future__ import annotations

import csv
import io
import json
from collections import Counter, defaultdict
from collections.abc import Iterable, Mapping
from dataclasses import dataclass
from typing import Literal

import numpy as np

from .planner import QueryPlan, is_cyclic
from .query import QueryGraph

__all__ = [
    "TreeNode",
    "BindingTree",
    "SolutionSet",
    "serialize_tree",
    "serialized_size",
    "group_pools",
    "pool_trees",
    "select_postprocessing",
    "omega",
    "phi",
    "local_prune",
    "global_prune",
    "postprocess",
    "enumerate_solutions",
    "natural_join",
]

Mode = Literal["none", "local", "global", "local_then_global"]


@dataclass(frozen=True)
class TreeNode:
    binding: int
    children: tuple["TreeNode", ...] = ()

    def count(self) -> int:
        return 1 + sum(c.count() for c in self.children)

    def depth(self) -> int:
        return 1 + max((c.depth() for c in self.children), default=0)

    def bindings_at(self, pos: int) -> set[int]:
        if pos == 0:
            return {self.binding}
        return set().union(*(c.bindings_at(pos - 1) for c in self.children)) if self.children else set()

    def branches(self) -> list[tuple[int, ...]]:
        if not self.children:
            return [(self.binding,)]
        return [(self.binding,) + b for c in self.children for b in c.branches()]

    def to_json(self):
        if not self.children:
            return self.binding
        return {str(self.binding): [c.to_json() for c in self.children]}


@dataclass(frozen=True)
class BindingTree:
    root_index: int
    root_binding: int
    path_index: int
    path: tuple[int, ...]
    node: TreeNode

    def complete(self) -> bool:
        return self.node.depth() == len(self.path)

    def to_json(self, g: QueryGraph | None = None) -> dict:
        return {
            "root": self.root_index,
            "binding": self.root_binding,
            "path": [g.vertices[v].label if g else v for v in self.path],
            "tree": self.node.to_json(),
        }


def serialized_size(tree: BindingTree) -> int:
    """Length in bytes of :func:`serialize_tree` output, without building it."""
    return 4 * (4 + 2 * tree.node.count())


def serialize_tree(tree: BindingTree) -> bytes:
    """int32 header (root, binding, path, depth) then preorder (binding, child count) pairs."""
    out = [tree.root_index, tree.root_binding, tree.path_index, len(tree.path)]
    stack = [tree.node]
    while stack:
        n = stack.pop()
        out += [n.binding, len(n.children)]
        stack.extend(reversed(n.children))
    return np.asarray(out, dtype="<i4").tobytes()


# root index -> root binding -> path index -> tree node
Pool = dict[int, dict[int, dict[int, TreeNode]]]


def group_pools(trees: Iterable[BindingTree]) -> Pool:
    pools: Pool = defaultdict(dict)
    for t in trees:
        pools[t.root_index].setdefault(t.root_binding, {})[t.path_index] = t.node
    return {r: dict(sorted(v.items())) for r, v in sorted(pools.items())}


def pool_trees(pools: Pool, plan: QueryPlan) -> list[BindingTree]:
    return [
        BindingTree(r, b, k, plan.paths[r][k], node)
        for r, groups in pools.items()
        for b, trees in groups.items()
        for k, node in sorted(trees.items())
    ]


def select_postprocessing(g: QueryGraph, plan: QueryPlan) -> Mode:
    """Pick the pruning steps needed from the number of roots, cycles and constants."""
    cyclic = is_cyclic(g)
    n_const = len(g.constants)
    if len(plan.roots) <= 1:
        return "local" if cyclic or n_const > 1 else "none"
    shared = bool(phi(plan))
    if n_const == 0:
        return "local_then_global" if cyclic else "global"
    if cyclic or n_const > 1:
        return "local_then_global" if shared else "local"
    return "global" if shared else "none"


def omega(plan: QueryPlan, r: int) -> set[int]:
    """Variables of root r that occur on two paths, or twice on one path."""
    seen: Counter[int] = Counter()
    for path in plan.paths[r]:
        c = Counter(path)
        seen.update(c.keys())
        seen.update(v for v, k in c.items() if k > 1)
    return {v for v, k in seen.items() if k > 1}


def phi(plan: QueryPlan) -> set[int]:
    """Variables occurring under more than one root."""
    seen: Counter[int] = Counter()
    for paths in plan.paths:
        seen.update({v for p in paths for v in p})
    return {v for v, k in seen.items() if k > 1}


def _tree_bindings(node: TreeNode, path: tuple[int, ...], v: int) -> set[int]:
    out: set[int] = set()
    for pos, x in enumerate(path):
        if x == v:
            out |= node.bindings_at(pos)
    return out


def _prune_tree(node: TreeNode, path: tuple[int, ...], allowed: Mapping[int, set[int]], pos: int = 0) -> TreeNode | None:
    v = path[pos]
    if v in allowed and node.binding not in allowed[v]:
        return None
    if pos == len(path) - 1:
        return node
    kids = tuple(k for k in (_prune_tree(c, path, allowed, pos + 1) for c in node.children) if k is not None)
    if not kids:
        return None
    if len(kids) == len(node.children) and all(a is b for a, b in zip(kids, node.children)):
        return node
    return TreeNode(node.binding, kids)


def _prune_group(trees: dict[int, TreeNode], paths, allowed) -> dict[int, TreeNode] | None:
    out = {}
    for k, node in trees.items():
        pruned = _prune_tree(node, paths[k], allowed)
        if pruned is None:
            return None
        out[k] = pruned
    return out


def local_prune(trees: dict[int, TreeNode], plan: QueryPlan, r: int, omega_vars: set[int] | None = None) -> dict[int, TreeNode] | None:
    """Prune the trees of one root binding until every variable in Ω agrees across them.

    Returns None when some tree loses all its branches, meaning the root
    binding has no solution.
    """
    paths = plan.paths[r]
    om = omega(plan, r) if omega_vars is None else omega_vars
    if len(trees) < len(paths):
        return None
    while om:
        allowed: dict[int, set[int]] = {}
        for v in om:
            sets = [_tree_bindings(node, paths[k], v) for k, node in trees.items() if v in paths[k]]
            if sets:
                allowed[v] = set.intersection(*sets)
        pruned = _prune_group(trees, paths, allowed)
        if pruned is None:
            return None
        if all(pruned[k] is trees[k] for k in trees):
            break
        trees = pruned
    return trees


def _local_all(pools: Pool, plan: QueryPlan) -> tuple[Pool, int]:
    out: Pool = {}
    deleted = 0
    for r, groups in pools.items():
        om = omega(plan, r)
        kept = {}
        for b, trees in groups.items():
            res = local_prune(trees, plan, r, om)
            if res is None:
                deleted += len(trees)
            else:
                kept[b] = res
        out[r] = kept
    return out, deleted


def global_prune(pools: Pool, plan: QueryPlan, phi_vars: set[int] | None = None) -> tuple[Pool, int]:
    """Restrict variables shared across roots to bindings present under every root, then prune locally."""
    ph = phi(plan) if phi_vars is None else phi_vars
    n_roots = len(plan.roots)
    deleted = 0
    while True:
        if any(not pools.get(r) for r in range(n_roots)):
            deleted += sum(len(t) for gs in pools.values() for t in gs.values())
            return {r: {} for r in range(n_roots)}, deleted
        allowed: dict[int, set[int]] = {}
        for v in ph:
            per_root = []
            for r in range(n_roots):
                ks = [k for k, p in enumerate(plan.paths[r]) if v in p]
                if not ks:
                    continue
                s: set[int] = set()
                for trees in pools[r].values():
                    for k in ks:
                        if k in trees:
                            s |= _tree_bindings(trees[k], plan.paths[r][k], v)
                per_root.append(s)
            allowed[v] = set.intersection(*per_root)
        changed = False
        new: Pool = {}
        for r, groups in pools.items():
            kept = {}
            for b, trees in groups.items():
                res = _prune_group(trees, plan.paths[r], allowed)
                if res is not None:
                    res = local_prune(res, plan, r)
                if res is None:
                    deleted += len(trees)
                    changed = True
                    continue
                if any(res[k] is not trees[k] for k in trees):
                    changed = True
                kept[b] = res
            new[r] = kept
        pools = new
        if not changed:
            return pools, deleted


def postprocess(pools: Pool, plan: QueryPlan, mode: Mode) -> tuple[Pool, int]:
    deleted = 0
    if mode in ("local", "local_then_global"):
        pools, d = _local_all(pools, plan)
        deleted += d
    if mode in ("global", "local_then_global"):
        pools, d = global_prune(pools, plan)
        deleted += d
    return pools, deleted


# -- enumeration -------------------------------------------------------------

Relation = tuple[tuple[int, ...], set[tuple[int, ...]]]


def natural_join(a: Relation, b: Relation) -> Relation:
    av, ar = a
    bv, br = b
    shared = [v for v in av if v in bv]
    ai = [av.index(v) for v in shared]
    bi = [bv.index(v) for v in shared]
    extra = [i for i, v in enumerate(bv) if v not in av]
    index: dict[tuple[int, ...], list[tuple[int, ...]]] = defaultdict(list)
    for row in br:
        index[tuple(row[i] for i in bi)].append(row)
    out = set()
    for row in ar:
        for other in index.get(tuple(row[i] for i in ai), ()):
            out.add(row + tuple(other[i] for i in extra))
    return av + tuple(bv[i] for i in extra), out


def _branch_relation(node: TreeNode, path: tuple[int, ...]) -> Relation:
    vars_ = tuple(dict.fromkeys(path))
    pos = {v: [i for i, x in enumerate(path) if x == v] for v in vars_}
    rows = set()
    for br in node.branches():
        if len(br) != len(path):
            continue
        if all(len({br[i] for i in ps}) == 1 for ps in pos.values()):
            rows.add(tuple(br[pos[v][0]] for v in vars_))
    return vars_, rows


def _root_relation(groups: dict[int, dict[int, TreeNode]], plan: QueryPlan, r: int) -> Relation:
    vars_ = tuple(dict.fromkeys(v for p in plan.paths[r] for v in p))
    rows: set[tuple[int, ...]] = set()
    for trees in groups.values():
        rel: Relation = ((), {()})
        for k, path in enumerate(plan.paths[r]):
            part = _branch_relation(trees[k], path) if k in trees else (tuple(dict.fromkeys(path)), set())
            rel = natural_join(rel, part)
            if not rel[1]:
                break
        if rel[1]:
            perm = [rel[0].index(v) for v in vars_]
            rows |= {tuple(row[i] for i in perm) for row in rel[1]}
    return vars_, rows


def _verify(rel: Relation, g: QueryGraph, const_ids: Mapping[int, int | None], edge_pairs: Mapping[int, set[tuple[int, int]]]) -> set[tuple[int, ...]]:
    vars_, rows = rel
    pos = {v: i for i, v in enumerate(vars_)}
    out = set()
    for row in rows:
        ok = True
        for e in g.edges:
            s = row[pos[e.src]] if e.src in pos else const_ids.get(e.src)
            o = row[pos[e.dst]] if e.dst in pos else const_ids.get(e.dst)
            if s is None or o is None or (s, o) not in edge_pairs[e.index]:
                ok = False
                break
        if ok:
            out.add(row)
    return out


@dataclass(frozen=True)
class SolutionSet:
    variables: tuple[str, ...]
    rows: tuple[tuple[int, ...], ...]

    def __len__(self) -> int:
        return len(self.rows)

    @classmethod
    def from_rows(cls, variables: Iterable[str], rows: Iterable[tuple[int, ...]]) -> "SolutionSet":
        return cls(tuple(variables), tuple(sorted(set(rows))))

    def mappings(self) -> list[dict[str, int]]:
        return [dict(zip(self.variables, r)) for r in self.rows]

    def decoded(self, dictionary) -> list[dict[str, str]]:
        return [{v: dictionary.entity(x) for v, x in zip(self.variables, r)} for r in self.rows]

    def to_csv(self, dictionary) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.variables)
        for r in self.rows:
            w.writerow([dictionary.entity(x) for x in r])
        return buf.getvalue()

    def to_json(self, dictionary) -> str:
        return json.dumps(self.decoded(dictionary), indent=2) + "\n"


def edge_pairs(t, dictionary, g: QueryGraph) -> dict[int, set[tuple[int, int]]]:
    """(subject, object) pairs of every query edge's predicate."""
    by_pred: dict[str, set[tuple[int, int]]] = {}
    out = {}
    for e in g.edges:
        if e.predicate not in by_pred:
            pid = dictionary.predicate_id(e.predicate)
            mask = t.vals == (pid if pid is not None else -1)
            by_pred[e.predicate] = set(zip(t.rows[mask].tolist(), t.cols[mask].tolist()))
        out[e.index] = by_pred[e.predicate]
    return out


def enumerate_solutions(
    pools: Pool,
    g: QueryGraph,
    plan: QueryPlan,
    light=None,
    dictionary=None,
    t=None,
    verify: bool = True,
) -> SolutionSet:
    """Join the branches of all trees (and the light-edge bindings) into projected solutions.

    Within a root binding the paths are equi-joined on shared variables,
    then roots are joined with each other and with every light edge. With
    ``verify`` each joined mapping is re-checked against the triples.
    """
    rel: Relation = ((), {()})
    for r in range(len(plan.roots)):
        rel = natural_join(rel, _root_relation(pools.get(r, {}), plan, r))
        if not rel[1]:
            break
    const_ids: dict[int, int | None] = {}
    for v in g.constants:
        const_ids[v.id] = dictionary.entity_id(v.term) if dictionary is not None else None
    if light is not None and rel[1]:
        if not light.satisfiable:
            rel = (rel[0], set())
        for ei in plan.light:
            if not rel[1]:
                break
            e = g.edges[ei]
            ends = [x for x in (e.src, e.dst) if g.vertices[x].is_variable]
            pairs = light.pairs.get(ei, set())
            if not ends:
                lrel: Relation = ((), {()} if pairs else set())
            else:
                pos = 0 if g.vertices[e.src].is_variable else 1
                lrel = ((ends[0],), {(p[pos],) for p in pairs})
            rel = natural_join(rel, lrel)
    if verify and t is not None and dictionary is not None and rel[1]:
        rel = (rel[0], _verify(rel, g, const_ids, edge_pairs(t, dictionary, g)))
    if not rel[1]:
        return SolutionSet.from_rows(g.projection, ())
    pos = {g.vertices[v].term: i for i, v in enumerate(rel[0])}
    proj = [pos[p] for p in g.projection]
    return SolutionSet.from_rows(g.projection, (tuple(row[i] for i in proj) for row in rel[1]))
