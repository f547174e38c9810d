# %% [markdown]
# # One query, end to end
#
# The sample query asks for a product `v0` with an actor `v1` and a director
# `v2`, where `v2` follows `v1` and somebody `v3` follows `v2`. We trace it
# through planning, compressed storage, partitioning over 2 nodes with 2
# workers each, per-worker evaluation, tree pruning and final enumeration.

# %%
import json

from sparsebgp.engine import Dataset, build_storage, run_query
from sparsebgp.executor import NodeView, run_worker
from sparsebgp.fixtures import SAMPLE_ENTITY_ORDER, SAMPLE_NTRIPLES, SAMPLE_QUERY
from sparsebgp.lspm import col_slice, row_slice
from sparsebgp.oracle import brute_force
from sparsebgp.partition import PartitionSpec, partition
from sparsebgp.planner import plan_degree, plan_direction
from sparsebgp.query import dump_graph, parse_query
from sparsebgp.trees import group_pools, local_prune, select_postprocessing

ds = Dataset.from_ntriples(SAMPLE_NTRIPLES, SAMPLE_ENTITY_ORDER)
g = parse_query(SAMPLE_QUERY)
print(dump_graph(g))

# %% [markdown]
# ## Two ways to traverse
#
# Following arrows only, the query needs two roots (`v0` and `v3`). Starting
# from the highest-degree vertex instead, one root `v2` reaches everything,
# at the price of walking some edges against their direction.

# %%
for plan in (plan_direction(g), plan_degree(g)):
    doc = plan.to_json(g)
    print(plan.traversal, "roots", doc["roots"])
    for grp in doc["groups"]:
        print("   centre", grp["center"], "edges", grp["edges"], "level", grp["level"])
    print("   post-processing:", select_postprocessing(g, plan))

plan = plan_degree(g)
print("paths from the root:", [[g.vertices[v].label for v in p] for p in plan.paths[0]])

# %% [markdown]
# ## Compressed storage
#
# Edges walked along their arrow are read row-wise, the others column-wise,
# so each store keeps only the predicates it needs. Empty rows/columns vanish.

# %%
csr, csc = build_storage(ds, g, plan)
print("row store    ", csr.n_stored, "rows,", csr.nnz, "entries")
print("column store ", csc.n_stored, "columns,", csc.nnz, "entries")
name = ds.dictionary.entity
print("row of User1   ", [(name(c), ds.dictionary.predicates[p - 1]) for c, p in row_slice(csr, 1)])
print("column of User1", [(name(r), ds.dictionary.predicates[p - 1]) for r, p in col_slice(csc, 1)])

# %% [markdown]
# ## Partitioning
#
# The root needs both a row and a column per candidate, so only indices
# present in both stores are eligible. Each node then also pulls the rows its
# deeper levels will reach.

# %%
parts = partition(csr, csc, plan, PartitionSpec(2, 2))
print("dropped rows", parts.dropped_rows, "dropped columns", parts.dropped_cols)
for a in parts:
    print(f"node {a.node_id}: shares {a.first_stage}, extra rows {a.extra_rows}")

# %% [markdown]
# ## Workers
#
# Each worker takes its candidate root bindings one at a time and stops as
# soon as any edge group comes back empty.

# %%
pids = {e.index: ds.dictionary.predicate_id(e.predicate) for e in g.edges}
trees = []
for a in parts:
    view = NodeView(a, csr, csc, strict=True)
    for w in a.workers:
        out = run_worker(view, w, plan, g, pids)
        print(f"node {a.node_id} worker {w.thread}: {len(out)} trees")
        trees += out
for t in trees:
    print("  ", json.dumps(t.to_json(g)))

# %% [markdown]
# `v1` shows up on two paths. Binding 5 (User4) appears only on the long
# path, so local pruning cuts it.

# %%
pool = group_pools(trees)[0][1]
for k, node in local_prune(pool, plan, 0).items():
    print([g.vertices[v].label for v in plan.paths[0][k]], node.to_json())

# %% [markdown]
# ## The whole thing, checked against nested loops

# %%
run = run_query(ds, g, "degree", PartitionSpec(2, 2))
print(run.solutions.to_csv(ds.dictionary))
assert run.solutions == brute_force(ds.triples, g, ds.dictionary)
print(json.dumps(run.stats.to_json(), indent=1))
