"""Reference implementation of the AND/OR semiring algebra on small dense matrices.

Intentionally naive: every operation is phrased as the matrix product it
stands for (diagonal selectors, ``A (x) u_p``, ``S_p (x) A``) and evaluated
densely. The executor is cross-checked against this module.

A :class:`DenseMatrix` keeps one boolean layer per predicate id, so a cell may
hold several predicates (RDF multigraph); "A(i, j) = p" reads as "layer p is
set at (i, j)".
"""

from __future__ import annotations

from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from typing import Literal

import numpy as np

from .rdf import TripleSet

Orientation = Literal["row", "column"]
Direction = Literal["out", "in"]


def semiring_matmul(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Boolean matrix product with (OR, AND) in place of (+, x)."""
    return (x.astype(np.int64) @ y.astype(np.int64)) > 0


@dataclass(frozen=True, eq=False)
class DenseMatrix:
    layers: np.ndarray  # bool, shape (P + 1, n, n); layer 0 unused

    @property
    def n(self) -> int:
        return self.layers.shape[1]

    @property
    def n_predicates(self) -> int:
        return self.layers.shape[0] - 1

    @classmethod
    def from_cells(cls, cells: Sequence[Sequence[int]]) -> "DenseMatrix":
        a = np.asarray(cells, dtype=np.int64)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError("matrix must be square")
        p = int(a.max()) if a.size else 0
        layers = np.stack([a == k for k in range(p + 1)])
        layers[0] = False
        return cls(layers)

    @classmethod
    def from_triples(cls, t: TripleSet, n_predicates: int | None = None) -> "DenseMatrix":
        p = n_predicates if n_predicates is not None else max(t.n_predicates, int(t.vals.max()) if len(t) else 0)
        layers = np.zeros((p + 1, t.n, t.n), dtype=bool)
        layers[t.vals, t.rows, t.cols] = True
        return cls(layers)

    def to_cells(self) -> np.ndarray:
        """Single-valued view; raises if any cell carries two predicates."""
        if (self.layers.sum(axis=0) > 1).any():
            raise ValueError("cell holds several predicates")
        return np.tensordot(np.arange(self.layers.shape[0]), self.layers, axes=1)

    def layer(self, p: int) -> np.ndarray:
        if p < 1:
            raise ValueError("predicate ids are 1-based")
        if p > self.n_predicates:
            return np.zeros((self.n, self.n), dtype=bool)
        return self.layers[p]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, DenseMatrix):
            return NotImplemented
        p = max(self.n_predicates, other.n_predicates)
        return self.n == other.n and all(
            np.array_equal(self.layer(k), other.layer(k)) for k in range(1, p + 1)
        )


@dataclass(frozen=True)
class BindingMatrix:
    n: int
    nonzeros: frozenset[tuple[int, int]]

    @classmethod
    def from_mask(cls, mask: np.ndarray) -> "BindingMatrix":
        return cls(mask.shape[0], frozenset(zip(*map(np.ndarray.tolist, np.nonzero(mask)))))

    def to_mask(self) -> np.ndarray:
        m = np.zeros((self.n, self.n), dtype=bool)
        for i, j in self.nonzeros:
            m[i, j] = True
        return m


def _selector(n: int, idx: Iterable[int]) -> np.ndarray:
    idx = list(idx)
    if any(i < 0 or i >= n for i in idx):
        raise IndexError("selection index out of range")
    v = np.zeros(n, dtype=bool)
    v[idx] = True
    return v


def _check_vector(v, n: int) -> np.ndarray:
    v = np.asarray(v, dtype=bool)
    if v.shape != (n,):
        raise ValueError(f"vector length {v.shape} does not match dimension {n}")
    return v


def row_col_select(A: DenseMatrix, rows: Iterable[int] | None = None, cols: Iterable[int] | None = None) -> DenseMatrix:
    """diag(S) x A for ``rows`` or A x diag(S) for ``cols`` (exactly one given)."""
    if (rows is None) == (cols is None):
        raise ValueError("give exactly one of rows / cols")
    S = np.diag(_selector(A.n, rows if rows is not None else cols)).astype(np.int64)
    L = A.layers.astype(np.int64)
    out = S @ L if rows is not None else L @ S
    return DenseMatrix(out > 0)


def rows_with_predicate(A: DenseMatrix, p: int, orientation: Orientation = "row") -> np.ndarray:
    """A (x) u_p for rows, A^T (x) u_p for columns: bit i set iff p occurs in row/column i."""
    layer = A.layer(p)
    if orientation == "column":
        layer = layer.T
    elif orientation != "row":
        raise ValueError(orientation)
    u = np.ones(A.n, dtype=bool)
    return semiring_matmul(layer, u)


def predicate_positions(A: DenseMatrix, p: int) -> BindingMatrix:
    """S_p (x) A; S_p is the identity carrying p, so M(i, j) = (A(i, j) = p)."""
    eye = np.eye(A.n, dtype=bool)
    return BindingMatrix.from_mask(semiring_matmul(eye, A.layer(p)))


def vec_and(x, y) -> np.ndarray:
    x = np.asarray(x, dtype=bool)
    return x & _check_vector(y, len(x))


def vec_or(x, y) -> np.ndarray:
    x = np.asarray(x, dtype=bool)
    return x | _check_vector(y, len(x))


def eval_single_edge(A: DenseMatrix, p: int) -> BindingMatrix:
    return predicate_positions(A, p)


def binding_vector(M: BindingMatrix) -> np.ndarray:
    """OR over the rows of M: bit j set iff column j of M holds a nonzero."""
    u = np.ones(M.n, dtype=bool)
    return semiring_matmul(M.to_mask().T, u)


def eval_chained_edge(M_xy: BindingMatrix, A: DenseMatrix, p_yz: int) -> BindingMatrix:
    """Evaluate y -p_yz-> z given the bindings of y held in M_xy."""
    if M_xy.n != A.n:
        raise ValueError("binding matrix and RDF matrix differ in dimension")
    v_y = binding_vector(M_xy)
    A_y = row_col_select(A, rows=np.flatnonzero(v_y))
    return predicate_positions(A_y, p_yz)


def grouped_eval(
    A: DenseMatrix, incident: Sequence[tuple[int, Direction]]
) -> tuple[np.ndarray, dict[int, BindingMatrix]]:
    """Evaluate all edges incident to one center vertex together.

    ``incident`` lists (predicate, direction) pairs; "out" edges leave the
    center, "in" edges enter it. Returns the center's binding vector (AND of
    per-edge row/column presence) and, per position in ``incident``, the
    binding matrix restricted to surviving center indices: rows for out-edges,
    columns for in-edges.
    """
    if not incident:
        raise ValueError("grouped evaluation needs at least one incident edge")
    v = np.ones(A.n, dtype=bool)
    for p, d in incident:
        v = vec_and(v, rows_with_predicate(A, p, "row" if d == "out" else "column"))
    keep = np.flatnonzero(v)
    A_r = row_col_select(A, rows=keep)
    A_c = row_col_select(A, cols=keep)
    mats = {
        k: predicate_positions(A_r if d == "out" else A_c, p)
        for k, (p, d) in enumerate(incident)
    }
    return v, mats
