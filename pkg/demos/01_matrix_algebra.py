# %% [markdown]
# # Queries as boolean matrix products
#
# An RDF graph becomes a square matrix `A` whose cell `(s, o)` holds the id of
# the predicate linking subject `s` to object `o`. Multiplying with `AND` in
# place of `*` and `OR` in place of `+` turns selection and matching into
# matrix algebra. This walks through the dense reference operators.

# %%
import numpy as np

from sparsebgp.algebra import (
    DenseMatrix,
    eval_chained_edge,
    eval_single_edge,
    grouped_eval,
    predicate_positions,
    row_col_select,
    rows_with_predicate,
    vec_and,
)
from sparsebgp.fixtures import LETTER_MATRIX, LETTER_NAMES, SAMPLE_ENTITY_ORDER, SAMPLE_NTRIPLES
from sparsebgp.rdf import encode, parse_ntriples


def show(cells):
    for row in np.asarray(cells):
        print(" ".join(LETTER_NAMES[v - 1] if v else "." for v in row))
    print()


# %% [markdown]
# A 3x3 matrix with one predicate per cell. Selecting rows multiplies by a
# diagonal 0/1 matrix on the left; selecting columns multiplies on the right.

# %%
A = DenseMatrix.from_cells(LETTER_MATRIX)
show(A.to_cells())
show(row_col_select(A, rows={0, 2}).to_cells())
show(row_col_select(A, cols={2}).to_cells())

# %% [markdown]
# Which rows (or columns) contain predicate `b`, and where does `c` sit?

# %%
b, c = 2, 3
print("rows with b   ", rows_with_predicate(A, b, "row").astype(int))
print("columns with b", rows_with_predicate(A, b, "column").astype(int))
print("positions of c", sorted(predicate_positions(A, c).nonzeros))

# %% [markdown]
# ## The sample social graph
#
# Twelve triples about users and products. `FriendOf` is dropped on encoding
# only when a query does not mention it; here everything is kept.

# %%
d, t = encode(parse_ntriples(SAMPLE_NTRIPLES), entities=SAMPLE_ENTITY_ORDER)
G = DenseMatrix.from_triples(t)
print(d.entities)
print(d.predicates)
print(G.to_cells())

# %% [markdown]
# A single pattern `?x <actor> ?y` is just the positions of `actor`. Chaining
# `?y <follows> ?z` reuses the `y` bindings as a row selector.

# %%
follows, actor, director = (d.predicate_id(p) for p in ("follows", "actor", "director"))
m_xy = eval_single_edge(G, actor)
print("actor pairs   ", sorted(m_xy.nonzeros))
print("then follows  ", sorted(eval_chained_edge(m_xy, G, follows).nonzeros))

# %% [markdown]
# Grouping all edges around one vertex: a centre with an incoming `director`,
# an incoming `follows` and an outgoing `follows` must have all three. The AND
# of the per-edge presence vectors gives the surviving centres.

# %%
incident = [(director, "in"), (follows, "in"), (follows, "out")]
v, mats = grouped_eval(G, incident)
print("centre bindings", [d.entity(i) for i in np.flatnonzero(v)])
for (p, direction), m in zip(incident, mats.values()):
    print(f"  {d.predicates[p - 1]:>8} {direction:>3}", sorted(m.nonzeros))

# the same vector, built by hand
manual = vec_and(
    vec_and(rows_with_predicate(G, director, "column"), rows_with_predicate(G, follows, "column")),
    rows_with_predicate(G, follows, "row"),
)
assert (manual == v).all()
