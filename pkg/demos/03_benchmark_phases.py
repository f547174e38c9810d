# %% [markdown]
# # Phase breakdown on a generated benchmark
#
# A seeded generator builds a user/product/review graph with skewed degrees.
# We run the twenty bundled queries with both traversals and look at where
# the time goes. Numbers depend on the machine; shapes of the breakdown
# should not.

# %%
import os
import sys
import time

from sparsebgp.datagen import WATDIV_QUERIES, watdiv_dataset
from sparsebgp.engine import Dataset, run_query
from sparsebgp.partition import PartitionSpec
from sparsebgp.query import parse_query

n = int(sys.argv[1]) if len(sys.argv) > 1 else 100_000
t0 = time.perf_counter()
ds = Dataset.from_ntriples(watdiv_dataset(seed=0, n_triples=n))
print(f"{len(ds.triples)} triples, {len(ds.dictionary.entities)} entities, loaded in {time.perf_counter() - t0:.2f} s")
print(f"{os.cpu_count()} cpu(s)")

# %% [markdown]
# Every query once per traversal on 2 nodes x 4 workers. Queries with
# constants only run degree-first.

# %%
spec = PartitionSpec(2, 4)
rows = []
for name, text in WATDIV_QUERIES.items():
    g = parse_query(text)
    for traversal in ("degree", "direction"):
        if traversal == "direction" and g.constants:
            continue
        t0 = time.perf_counter()
        run = run_query(ds, g, traversal, spec)
        rows.append((name, traversal, len(run.solutions), time.perf_counter() - t0, run))

print(f"{'query':<6}{'traversal':<11}{'results':>8}{'total ms':>10}{'rows read':>11}  mode")
for name, trav, k, secs, run in rows:
    print(f"{name:<6}{trav:<11}{k:>8}{secs * 1000:>10.1f}{run.stats.rows_scanned:>11}  {run.mode}")

# %% [markdown]
# Share of each phase, summed over all degree-first runs.

# %%
totals = {}
for _, trav, _, _, run in rows:
    if trav != "degree":
        continue
    for phase, secs in run.stats.phases().items():
        totals[phase] = totals.get(phase, 0.0) + secs
whole = sum(totals.values())
for phase, secs in totals.items():
    print(f"{phase:<18}{secs * 1000:>9.1f} ms {100 * secs / whole:>5.1f}%  " + "#" * int(40 * secs / whole))

# %% [markdown]
# Where both traversals apply, degree-first usually reads fewer rows because
# one root replaces several and no cross-root pruning is needed.

# %%
by = {(name, trav): run for name, trav, _, _, run in rows}
for name in WATDIV_QUERIES:
    if (name, "direction") in by:
        a, b = by[(name, "degree")], by[(name, "direction")]
        print(f"{name}: rows read {a.stats.rows_scanned} vs {b.stats.rows_scanned}, same answer: {a.solutions == b.solutions}")
