import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sparsebgp.algebra import (
    BindingMatrix,
    DenseMatrix,
    binding_vector,
    eval_chained_edge,
    eval_single_edge,
    grouped_eval,
    predicate_positions,
    row_col_select,
    rows_with_predicate,
    vec_and,
    vec_or,
)
from sparsebgp.fixtures import LETTER_MATRIX

A = DenseMatrix.from_cells(LETTER_MATRIX)
a, b, c, d, e, f, g, h, i = range(1, 10)


@pytest.fixture(scope="module")
def sample_matrix(sample_encoded):
    return DenseMatrix.from_triples(sample_encoded[1])


# -- brute-force references -------------------------------------------------


def cells_of(m):
    """Cell-by-cell loop reading of a dense matrix: {(i, j, p)}."""
    out = set()
    for p in range(1, m.n_predicates + 1):
        for r in range(m.n):
            for col in range(m.n):
                if m.layer(p)[r, col]:
                    out.add((r, col, p))
    return out


# -- worked examples ----------------------------------------------------------


def test_row_selection_rows_0_2():
    got = row_col_select(A, rows={0, 2}).to_cells()
    assert got.tolist() == [[a, b, c], [0, 0, 0], [g, h, i]]


def test_column_selection_col_2():
    got = row_col_select(A, cols={2}).to_cells()
    assert got.tolist() == [[0, 0, c], [0, 0, f], [0, 0, i]]


def test_select_all_rows_is_identity():
    assert row_col_select(A, rows=range(3)) == A


def test_select_out_of_range():
    with pytest.raises(IndexError):
        row_col_select(A, rows={3})


def test_select_needs_exactly_one():
    with pytest.raises(ValueError):
        row_col_select(A)


def test_rows_with_b():
    assert rows_with_predicate(A, b, "row").tolist() == [True, False, False]


def test_columns_with_b():
    assert rows_with_predicate(A, b, "column").tolist() == [False, True, False]


def test_rows_with_predicate_zero_matrix():
    z = DenseMatrix.from_cells([[0, 0], [0, 0]])
    assert not rows_with_predicate(z, 1).any()


def test_positions_of_c():
    assert predicate_positions(A, c).nonzeros == {(0, 2)}


def test_positions_absent_predicate():
    assert predicate_positions(A, 42).nonzeros == frozenset()


def test_vector_and_or():
    x, y = [1, 0, 1], [0, 0, 1]
    assert vec_and(x, y).astype(int).tolist() == [0, 0, 1]
    assert vec_or(x, y).astype(int).tolist() == [1, 0, 1]


def test_vector_length_mismatch():
    with pytest.raises(ValueError):
        vec_and([1, 0], [1, 0, 1])


def test_director_positions(sample_matrix):
    assert predicate_positions(sample_matrix, 3).nonzeros == {(2, 1), (2, 4), (6, 3), (6, 5), (7, 5)}


def test_actor_single_edge(sample_matrix):
    assert eval_single_edge(sample_matrix, 2).nonzeros == {(2, 0), (2, 5)}


def test_single_edge_empty_matrix():
    z = DenseMatrix.from_cells([[0, 0], [0, 0]])
    assert eval_single_edge(z, 1).nonzeros == frozenset()


def test_chained_from_one_binding(sample_matrix):
    m = BindingMatrix(8, frozenset({(2, 1)}))
    assert eval_chained_edge(m, sample_matrix, 1).nonzeros == {(1, 0)}


def test_chained_from_actor_positions(sample_matrix):
    m = eval_single_edge(sample_matrix, 2)
    assert eval_chained_edge(m, sample_matrix, 1).nonzeros == {(0, 1), (5, 1)}


def test_chained_empty(sample_matrix):
    assert eval_chained_edge(BindingMatrix(8, frozenset()), sample_matrix, 1).nonzeros == frozenset()


def test_chained_dimension_mismatch(sample_matrix):
    with pytest.raises(ValueError):
        eval_chained_edge(BindingMatrix(3, frozenset()), sample_matrix, 1)


def test_grouped_center_v2(sample_matrix):
    # in-edges director and follows, out-edge follows
    v, mats = grouped_eval(sample_matrix, [(3, "in"), (1, "in"), (1, "out")])
    assert np.flatnonzero(v).tolist() == [1, 5]
    assert mats[0].nonzeros == {(2, 1), (6, 5), (7, 5)}
    assert mats[1].nonzeros == {(0, 1), (5, 1), (4, 5)}
    assert mats[2].nonzeros == {(1, 0), (5, 1)}


def test_grouped_two_out_edges(sample_matrix):
    v, mats = grouped_eval(sample_matrix, [(2, "out"), (3, "out")])
    expected_v = rows_with_predicate(sample_matrix, 2) & rows_with_predicate(sample_matrix, 3)
    assert v.tolist() == expected_v.tolist()
    assert mats[0].nonzeros == {(2, 0), (2, 5)}
    assert mats[1].nonzeros == {(2, 1), (2, 4)}


def test_grouped_needs_edges(sample_matrix):
    with pytest.raises(ValueError):
        grouped_eval(sample_matrix, [])


def test_binding_vector():
    m = BindingMatrix(4, frozenset({(0, 1), (3, 1), (2, 3)}))
    assert np.flatnonzero(binding_vector(m)).tolist() == [1, 3]


# -- properties -------------------------------------------------------------------


@st.composite
def dense(draw, max_n=8, max_p=4):
    n = draw(st.integers(1, max_n))
    p = draw(st.integers(1, max_p))
    layers = np.zeros((p + 1, n, n), dtype=bool)
    for r, col, q in draw(st.lists(st.tuples(st.integers(0, n - 1), st.integers(0, n - 1), st.integers(1, p)), max_size=3 * n)):
        layers[q, r, col] = True
    return DenseMatrix(layers)


@settings(max_examples=60, deadline=None)
@given(dense(), st.integers(1, 4))
def test_presence_matches_positions(m, p):
    pos = {(r, col) for r, col, q in cells_of(m) if q == p}
    assert predicate_positions(m, p).nonzeros == pos
    assert set(np.flatnonzero(rows_with_predicate(m, p, "row"))) == {r for r, _ in pos}
    assert set(np.flatnonzero(rows_with_predicate(m, p, "column"))) == {col for _, col in pos}


@settings(max_examples=60, deadline=None)
@given(dense(), st.lists(st.tuples(st.integers(1, 4), st.sampled_from(["out", "in"])), min_size=1, max_size=3))
def test_grouped_eval_against_brute_force(m, incident):
    v, mats = grouped_eval(m, incident)
    cells = cells_of(m)
    for x in range(m.n):
        ok = all(
            any((x, col, p) in cells for col in range(m.n)) if dr == "out" else any((r, x, p) in cells for r in range(m.n))
            for p, dr in incident
        )
        assert bool(v[x]) == ok
    for k, (p, dr) in enumerate(incident):
        full = eval_single_edge(m, p).nonzeros
        assert mats[k].nonzeros <= full
        for r, col in mats[k].nonzeros:
            assert v[r if dr == "out" else col]


@settings(max_examples=40, deadline=None)
@given(dense(), st.integers(1, 4))
def test_grouped_single_edge_degenerates(m, p):
    v, mats = grouped_eval(m, [(p, "out")])
    assert mats[0].nonzeros == eval_single_edge(m, p).nonzeros


@settings(max_examples=60, deadline=None)
@given(st.lists(st.booleans(), min_size=1, max_size=10).flatmap(
    lambda x: st.tuples(st.just(x), st.lists(st.booleans(), min_size=len(x), max_size=len(x)),
                        st.lists(st.booleans(), min_size=len(x), max_size=len(x)))))
def test_vector_laws(vs):
    x, y, z = vs
    assert vec_and(x, y).tolist() == vec_and(y, x).tolist()
    assert vec_or(x, y).tolist() == vec_or(y, x).tolist()
    assert vec_and(vec_and(x, y), z).tolist() == vec_and(x, vec_and(y, z)).tolist()
    assert vec_or(vec_or(x, y), z).tolist() == vec_or(x, vec_or(y, z)).tolist()
    assert vec_and(x, x).tolist() == list(map(bool, x))
    assert vec_or(x, x).tolist() == list(map(bool, x))
