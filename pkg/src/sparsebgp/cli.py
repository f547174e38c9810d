"""Command-line front end: load, plan, partition, query, oracle, bench, generate."""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import random
import struct
import sys
import time
from dataclasses import dataclass

import numpy as np

from .datagen import WATDIV_QUERIES, random_case, watdiv_dataset
from .engine import Dataset, build_storage, run_query
from .lspm import build_csc, build_csr
from .oracle import brute_force
from .partition import PartitionSpec, partition, partition_with_constants
from .planner import PlanModeError, plan_query
from .query import QuerySyntaxError, dump_graph, parse_query
from .rdf import Dictionary, NTriplesSyntaxError, TripleSet, encode, parse_ntriples

__all__ = ["main", "RunConfig", "CACHE_MAGIC", "CACHE_VERSION", "save_cache", "load_cache"]

CACHE_MAGIC = b"SBGPCACH"
CACHE_VERSION = 1


class CliError(Exception):
    pass


@dataclass(frozen=True)
class RunConfig:
    data: str | None
    query: str | None
    traversal: str = "auto"
    np: int = 1
    nt: int = 1
    format: str = "csv"
    stats: bool = False
    cache: str | None = None

    def __post_init__(self) -> None:
        if self.np < 1 or self.nt < 1:
            raise CliError("--np and --nt must be >= 1")
        if self.traversal not in ("direction", "degree", "auto"):
            raise CliError(f"unknown traversal {self.traversal!r}")


# -- cache --------------------------------------------------------------------


def save_cache(path: str, ds: Dataset) -> None:
    buf = io.BytesIO()
    np.savez(
        buf,
        entities=np.frombuffer(json.dumps(list(ds.dictionary.entities)).encode(), dtype=np.uint8),
        predicates=np.frombuffer(json.dumps(list(ds.dictionary.predicates)).encode(), dtype=np.uint8),
        rows=ds.triples.rows,
        cols=ds.triples.cols,
        vals=ds.triples.vals,
    )
    with open(path, "wb") as f:
        f.write(CACHE_MAGIC + struct.pack("<I", CACHE_VERSION))
        f.write(buf.getvalue())


def load_cache(path: str) -> Dataset | None:
    """The cached dataset, or None when the file is missing or from another format version."""
    try:
        with open(path, "rb") as f:
            head = f.read(len(CACHE_MAGIC) + 4)
            if len(head) < len(CACHE_MAGIC) + 4 or head[: len(CACHE_MAGIC)] != CACHE_MAGIC:
                return None
            (version,) = struct.unpack("<I", head[len(CACHE_MAGIC):])
            if version != CACHE_VERSION:
                return None
            z = np.load(io.BytesIO(f.read()))
            d = Dictionary(
                tuple(json.loads(z["entities"].tobytes())), tuple(json.loads(z["predicates"].tobytes()))
            )
            t = TripleSet(len(d.entities), z["rows"], z["cols"], z["vals"], len(d.predicates))
            return Dataset(d, t)
    except (OSError, ValueError, KeyError):
        return None


def _read_dataset(path: str, timings: dict | None = None) -> Dataset:
    t0 = time.perf_counter()
    try:
        with open(path, "rb") as f:
            raw = parse_ntriples(f)
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc.strerror}") from None
    t1 = time.perf_counter()
    d, t = encode(raw)
    t2 = time.perf_counter()
    if timings is not None:
        timings["read_s"] = t1 - t0
        timings["encode_s"] = t2 - t1
    return Dataset(d, t)


def _dataset(cfg: RunConfig) -> Dataset:
    if cfg.data is None:
        raise CliError("a data file is required")
    if cfg.cache:
        fresh = os.path.exists(cfg.cache) and os.path.getmtime(cfg.cache) >= os.path.getmtime(cfg.data)
        ds = load_cache(cfg.cache) if fresh else None
        if ds is not None:
            return ds
        if os.path.exists(cfg.cache):
            print(f"note: cache {cfg.cache} is stale or unreadable, rebuilding", file=sys.stderr)
        ds = _read_dataset(cfg.data)
        save_cache(cfg.cache, ds)
        return ds
    return _read_dataset(cfg.data)


def _query_text(args) -> str:
    if args.query is not None:
        return args.query
    if args.query_file is not None:
        try:
            with open(args.query_file, encoding="utf-8") as f:
                return f.read()
        except OSError as exc:
            raise CliError(f"cannot read {args.query_file}: {exc.strerror}") from None
    raise CliError("give --query or --query-file")


def _config(args) -> RunConfig:
    return RunConfig(
        data=getattr(args, "data", None),
        query=_query_text(args) if hasattr(args, "query") else None,
        traversal=getattr(args, "traversal", "auto"),
        np=getattr(args, "np", 1),
        nt=getattr(args, "nt", 1),
        format=getattr(args, "format", "csv"),
        stats=getattr(args, "stats", False),
        cache=getattr(args, "cache", None),
    )


def _emit(args, text: str) -> None:
    if getattr(args, "out", None):
        with open(args.out, "w", encoding="utf-8") as f:
            f.write(text)
    else:
        sys.stdout.write(text)


# -- subcommands ----------------------------------------------------------------


def cmd_load(args) -> int:
    timings: dict[str, float] = {}
    ds = _read_dataset(args.data, timings)
    t0 = time.perf_counter()
    preds = range(1, len(ds.dictionary.predicates) + 1)
    csr = build_csr(ds.triples, preds)
    csc = build_csc(ds.triples, preds)
    timings["lspm_s"] = time.perf_counter() - t0
    if args.cache:
        save_cache(args.cache, ds)
    report = {
        "entities": ds.dictionary.n_entities,
        "predicates": ds.dictionary.n_predicates,
        "triples": len(ds.triples),
        "csr_rows": csr.n_stored,
        "csc_cols": csc.n_stored,
        **timings,
    }
    _emit(args, json.dumps(report, indent=2) + "\n")
    return 0


def cmd_plan(args) -> int:
    cfg = _config(args)
    g = parse_query(cfg.query)
    plan = plan_query(g, cfg.traversal)
    _emit(args, json.dumps(plan.to_json(g), indent=2) + "\n")
    return 0


def cmd_partition(args) -> int:
    cfg = _config(args)
    ds = _dataset(cfg)
    g = parse_query(cfg.query)
    plan = plan_query(g, cfg.traversal)
    spec = PartitionSpec(cfg.np, cfg.nt)
    if not plan.roots:
        _emit(args, json.dumps({"np": cfg.np, "nt": cfg.nt, "nodes": []}, indent=2) + "\n")
        return 0
    csr, csc = build_storage(ds, g, plan)
    if g.constants:
        from .executor import eval_light

        light = eval_light(ds.triples, ds.dictionary, g, [g.edges[i] for i in plan.light])
        parts = partition_with_constants(light, csr, csc, plan, spec)
    else:
        parts = partition(csr, csc, plan, spec)
    _emit(args, parts.dumps() + "\n")
    return 0


def _format(sol, ds, fmt) -> str:
    return sol.to_csv(ds.dictionary) if fmt == "csv" else sol.to_json(ds.dictionary)


def cmd_query(args) -> int:
    cfg = _config(args)
    ds = _dataset(cfg)
    g = parse_query(cfg.query)
    if args.dump_graph:
        print(dump_graph(g), file=sys.stderr)
    run = run_query(ds, g, cfg.traversal, PartitionSpec(cfg.np, cfg.nt), pre_pruning=not args.no_pre_pruning)
    _emit(args, _format(run.solutions, ds, cfg.format))
    if args.dump_trees:
        trees = [t.to_json(g) for node in run.trees for t in node]
        print(json.dumps(trees, indent=2), file=sys.stderr)
    if cfg.stats:
        print(json.dumps({"mode": run.mode, **run.stats.to_json()}, indent=2), file=sys.stderr)
    return 0


def cmd_oracle(args) -> int:
    cfg = _config(args)
    ds = _dataset(cfg)
    g = parse_query(cfg.query)
    _emit(args, _format(brute_force(ds.triples, g, ds.dictionary), ds, cfg.format))
    return 0


BENCH_SPECS = ((1, 1), (2, 2), (2, 4))


def cmd_bench(args) -> int:
    if args.data:
        ds = _read_dataset(args.data)
        queries = {"q": _query_text(args)} if (args.query or args.query_file) else None
        if queries is None:
            raise CliError("bench on a data file needs --query or --query-file")
    else:
        ds = Dataset.from_ntriples(watdiv_dataset(args.seed, args.triples))
        queries = dict(WATDIV_QUERIES)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    phases = None
    for name, text in queries.items():
        g = parse_query(text)
        for traversal in ("degree", "direction"):
            if traversal == "direction" and g.constants:
                continue
            for np_, nt in BENCH_SPECS:
                t0 = time.perf_counter()
                run = run_query(ds, g, traversal, PartitionSpec(np_, nt))
                total = time.perf_counter() - t0
                ph = run.stats.phases()
                if phases is None:
                    phases = list(ph)
                    w.writerow(
                        ["query", "traversal", "np", "nt", "results", "total_s", *phases,
                         "host_to_device_bytes", "device_to_host_bytes", "rows_scanned"]
                    )
                w.writerow(
                    [name, traversal, np_, nt, len(run.solutions), f"{total:.6f}",
                     *(f"{ph[k]:.6f}" for k in phases),
                     run.stats.host_to_device_bytes, run.stats.device_to_host_bytes, run.stats.rows_scanned]
                )
    _emit(args, buf.getvalue())
    return 0


def cmd_generate(args) -> int:
    if args.kind == "watdiv":
        _emit(args, watdiv_dataset(args.seed, args.triples))
        return 0
    case = random_case(args.seed)
    _emit(args, case.data)
    if args.query_out:
        with open(args.query_out, "w", encoding="utf-8") as f:
            f.write(case.query)
    else:
        print(case.query, file=sys.stderr, end="")
    return 0


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sparsebgp", description="Sparse-matrix evaluation of SPARQL basic graph patterns.")
    sub = p.add_subparsers(dest="command", required=True)

    def add_query(sp, data=True, data_optional=False):
        if data:
            sp.add_argument("data", nargs="?" if data_optional else None, help="N-Triples file")
        sp.add_argument("--query", help="query text")
        sp.add_argument("--query-file", help="file holding the query")
        sp.add_argument("--out", help="write output here instead of stdout")

    def add_run(sp):
        sp.add_argument("--traversal", choices=("direction", "degree", "auto"), default="auto")
        sp.add_argument("--np", type=int, default=1, help="logical nodes")
        sp.add_argument("--nt", type=int, default=1, help="workers per node")
        sp.add_argument("--cache", help="binary cache of the encoded dataset")

    sp = sub.add_parser("load", help="parse, encode and store a dataset, reporting timings")
    sp.add_argument("data")
    sp.add_argument("--cache")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_load)

    sp = sub.add_parser("plan", help="print the query plan as JSON")
    add_query(sp, data=True, data_optional=True)
    sp.add_argument("--traversal", choices=("direction", "degree", "auto"), default="auto")
    sp.set_defaults(func=cmd_plan)

    sp = sub.add_parser("partition", help="print per-node row/column assignments as JSON")
    add_query(sp)
    add_run(sp)
    sp.set_defaults(func=cmd_partition)

    sp = sub.add_parser("query", help="evaluate a query")
    add_query(sp)
    add_run(sp)
    sp.add_argument("--format", choices=("csv", "json"), default="csv")
    sp.add_argument("--stats", action="store_true", help="print execution statistics to stderr")
    sp.add_argument("--dump-graph", action="store_true", help="print the parsed query graph to stderr")
    sp.add_argument("--dump-trees", action="store_true", help="print binding trees to stderr")
    sp.add_argument("--no-pre-pruning", action="store_true")
    sp.set_defaults(func=cmd_query)

    sp = sub.add_parser("oracle", help="evaluate a query with the reference nested-loop join")
    add_query(sp)
    sp.add_argument("--cache")
    sp.add_argument("--format", choices=("csv", "json"), default="csv")
    sp.set_defaults(func=cmd_oracle)

    sp = sub.add_parser("bench", help="phase timings as CSV over traversals and partition sizes")
    add_query(sp, data=True, data_optional=True)
    sp.add_argument("--seed", type=int, default=0, help="seed of the generated dataset when no data file is given")
    sp.add_argument("--triples", type=int, default=100_000)
    sp.set_defaults(func=cmd_bench)

    sp = sub.add_parser("generate", help="write a seeded dataset as N-Triples")
    sp.add_argument("kind", choices=("random", "watdiv"))
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--triples", type=int, default=100_000)
    sp.add_argument("--out")
    sp.add_argument("--query-out", help="random kind: where to write the matching query")
    sp.set_defaults(func=cmd_generate)
    return p


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    try:
        return args.func(args)
    except PlanModeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (QuerySyntaxError, NTriplesSyntaxError, CliError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
