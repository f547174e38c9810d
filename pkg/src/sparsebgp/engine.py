"""End-to-end query pipeline: plan, light edges, storage, partition, evaluate, prune, enumerate."""

from __future__ import annotations

import time
from dataclasses import dataclass, field

from .executor import ExecStats, LightResult, eval_light, keep_sets, run_all
from .lspm import LspmCsc, LspmCsr, build_csc, build_csr
from .partition import PartitionSpec, Partitioning, partition, partition_with_constants
from .planner import QueryPlan, plan_query
from .query import QueryGraph, parse_query
from .rdf import Dictionary, TripleSet, encode, parse_ntriples
from .trees import BindingTree, Pool, SolutionSet, enumerate_solutions, group_pools, postprocess, select_postprocessing

__all__ = ["Dataset", "QueryRun", "run_query", "build_storage"]


@dataclass(frozen=True)
class Dataset:
    dictionary: Dictionary
    triples: TripleSet

    @classmethod
    def from_ntriples(cls, stream, entities=None) -> "Dataset":
        d, t = encode(parse_ntriples(stream), entities=entities)
        return cls(d, t)


@dataclass
class QueryRun:
    graph: QueryGraph
    plan: QueryPlan
    solutions: SolutionSet
    stats: ExecStats
    light: LightResult
    mode: str
    partitioning: Partitioning | None = None
    csr: LspmCsr | None = None
    csc: LspmCsc | None = None
    trees: list[list[BindingTree]] = field(default_factory=list)
    pools: Pool = field(default_factory=dict)


def build_storage(ds: Dataset, g: QueryGraph, plan: QueryPlan) -> tuple[LspmCsr, LspmCsc | None]:
    """Row- and column-wise stores holding only the predicates each side needs."""
    csr_keep, csc_keep = keep_sets(plan, g, ds.dictionary)
    csr = build_csr(ds.triples, csr_keep)
    csc = build_csc(ds.triples, csc_keep) if plan.traversal == "degree" else None
    return csr, csc


def run_query(
    ds: Dataset,
    query: QueryGraph | str,
    traversal: str = "auto",
    spec: PartitionSpec | None = None,
    pre_pruning: bool = True,
    verify: bool = True,
    strict: bool = False,
    max_threads: int | None = None,
) -> QueryRun:
    g = parse_query(query) if isinstance(query, str) else query
    spec = spec or PartitionSpec()
    plan = plan_query(g, traversal)
    stats = ExecStats()

    t0 = time.perf_counter()
    light = eval_light(ds.triples, ds.dictionary, g, [g.edges[i] for i in plan.light])
    stats.light_s = time.perf_counter() - t0

    run = QueryRun(g, plan, SolutionSet.from_rows(g.projection, ()), stats, light, select_postprocessing(g, plan))
    heavy_missing = any(ds.dictionary.predicate_id(g.edges[e].predicate) is None for e in plan.edge_class)
    if not light.satisfiable or heavy_missing:
        return run

    if plan.roots:
        t0 = time.perf_counter()
        csr, csc = build_storage(ds, g, plan)
        if light.bindings:
            parts = partition_with_constants(light, csr, csc, plan, spec)
        else:
            parts = partition(csr, csc, plan, spec)
        stats.partition_s = time.perf_counter() - t0
        run.partitioning, run.csr, run.csc = parts, csr, csc
        if parts.empty:
            return run
        run.trees, _ = run_all(parts, csr, csc, plan, g, ds.dictionary, light, pre_pruning, strict, max_threads, stats)

    t0 = time.perf_counter()
    pools = group_pools(t for node in run.trees for t in node)
    pools, deleted = postprocess(pools, plan, run.mode)
    stats.trees_deleted += deleted
    run.pools = pools
    run.solutions = enumerate_solutions(pools, g, plan, light, ds.dictionary, ds.triples, verify)
    stats.postprocess_s = time.perf_counter() - t0
    return run
