"""Reference evaluator: backtracking nested-loop join straight over the triples."""

from __future__ import annotations

from collections import defaultdict

from .query import QueryGraph
from .rdf import Dictionary, TripleSet
from .trees import SolutionSet

__all__ = ["brute_force", "BudgetExceeded"]


class BudgetExceeded(RuntimeError):
    """The search visited more partial mappings than allowed."""


def brute_force(t: TripleSet, g: QueryGraph, dictionary: Dictionary, budget: int | None = None) -> SolutionSet:
    """All variable mappings satisfying every edge of ``g``, projected and sorted.

    ``budget`` caps the number of partial mappings visited; exceeding it
    raises :class:`BudgetExceeded`.
    """
    fixed: dict[int, int] = {}
    for v in g.constants:
        eid = dictionary.entity_id(v.term)
        if eid is None:
            return SolutionSet.from_rows(g.projection, ())
        fixed[v.id] = eid

    pairs: dict[int, list[tuple[int, int]]] = {}
    by_s: dict[int, dict[int, list[int]]] = {}
    by_o: dict[int, dict[int, list[int]]] = {}
    for e in g.edges:
        pid = dictionary.predicate_id(e.predicate)
        mask = t.vals == (pid if pid is not None else -1)
        ps = sorted(set(zip(t.rows[mask].tolist(), t.cols[mask].tolist())))
        pairs[e.index] = ps
        s_idx, o_idx = defaultdict(list), defaultdict(list)
        for s, o in ps:
            s_idx[s].append(o)
            o_idx[o].append(s)
        by_s[e.index], by_o[e.index] = s_idx, o_idx

    remaining = sorted(g.edges, key=lambda e: (len(pairs[e.index]), e.index))
    results: set[tuple[int, ...]] = set()
    proj = [g.variable(p).id for p in g.projection]

    def candidates(e, a):
        s, o = a.get(e.src), a.get(e.dst)
        if s is not None and o is not None:
            return [(s, o)] if o in by_s[e.index].get(s, ()) else []
        if s is not None:
            return [(s, x) for x in by_s[e.index].get(s, ())]
        if o is not None:
            return [(x, o) for x in by_o[e.index].get(o, ())]
        return pairs[e.index]

    steps = 0

    def search(todo, a):
        nonlocal steps
        steps += 1
        if budget is not None and steps > budget:
            raise BudgetExceeded(f"more than {budget} search steps")
        if not todo:
            results.add(tuple(a[v] for v in proj))
            return
        # bound-endpoint edges first, then fewest matches
        e = min(todo, key=lambda x: (-((x.src in a) + (x.dst in a)), len(pairs[x.index]), x.index))
        rest = [x for x in todo if x is not e]
        for s, o in candidates(e, a):
            if e.src == e.dst and s != o:
                continue
            new = dict(a)
            if new.setdefault(e.src, s) != s or new.setdefault(e.dst, o) != o:
                continue
            search(rest, new)

    search(remaining, dict(fixed))
    return SolutionSet.from_rows(g.projection, results)
