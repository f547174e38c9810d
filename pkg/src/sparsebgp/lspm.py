"""Light-weight sparse matrix (LSpM) storage: CSR/CSC with empty row/column elimination.

``mr`` (``mc``) is a prefix map of length N+1: original row i is stored iff
``mr[i+1] - mr[i] == 1`` and then sits at reduced index ``mr[i]``.
"""

from __future__ import annotations

import struct
from collections.abc import Iterable
from dataclasses import dataclass
from typing import BinaryIO

import numpy as np

from .rdf import TripleSet

__all__ = [
    "LspmCsr",
    "LspmCsc",
    "build_csr",
    "build_csc",
    "row_slice",
    "col_slice",
    "dump_lspm",
    "load_lspm",
]


def _freeze(a) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=np.int64)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class _Compressed:
    n: int
    m: np.ndarray  # elimination prefix map, len n + 1
    p: np.ndarray  # pointers, len R + 1
    val: np.ndarray
    idx: np.ndarray  # minor (original) index of each nonzero

    def __post_init__(self) -> None:
        for name in ("m", "p", "val", "idx"):
            object.__setattr__(self, name, _freeze(getattr(self, name)))

    @property
    def nnz(self) -> int:
        return len(self.val)

    @property
    def n_stored(self) -> int:
        return len(self.p) - 1

    def has(self, i: int) -> bool:
        return bool(self.m[i + 1] - self.m[i])

    def stored(self) -> np.ndarray:
        """Original indices of the stored (non-empty) rows/columns, ascending."""
        return np.flatnonzero(np.diff(self.m))

    def span(self, i: int) -> tuple[int, int]:
        if not 0 <= i < self.n:
            raise IndexError(f"index {i} outside [0, {self.n})")
        if self.m[i + 1] == self.m[i]:
            return 0, 0
        k = self.m[i]
        return int(self.p[k]), int(self.p[k + 1])

    def entries(self, i: int) -> list[tuple[int, int]]:
        a, b = self.span(i)
        return list(zip(self.idx[a:b].tolist(), self.val[a:b].tolist()))

    def to_triples(self) -> list[tuple[int, int, int]]:
        raise NotImplementedError

    def __eq__(self, other: object) -> bool:
        if type(other) is not type(self):
            return NotImplemented
        return self.n == other.n and all(
            np.array_equal(getattr(self, k), getattr(other, k)) for k in ("m", "p", "val", "idx")
        )


class LspmCsr(_Compressed):
    """Row-wise storage; aliases mr / pr / col follow the array names of the format."""

    @property
    def mr(self) -> np.ndarray:
        return self.m

    @property
    def pr(self) -> np.ndarray:
        return self.p

    @property
    def col(self) -> np.ndarray:
        return self.idx

    def to_triples(self) -> list[tuple[int, int, int]]:
        rows = np.repeat(self.stored(), np.diff(self.p))
        return list(zip(rows.tolist(), self.idx.tolist(), self.val.tolist()))


class LspmCsc(_Compressed):
    @property
    def mc(self) -> np.ndarray:
        return self.m

    @property
    def pc(self) -> np.ndarray:
        return self.p

    @property
    def row(self) -> np.ndarray:
        return self.idx

    def to_triples(self) -> list[tuple[int, int, int]]:
        cols = np.repeat(self.stored(), np.diff(self.p))
        return list(zip(self.idx.tolist(), cols.tolist(), self.val.tolist()))


def _compress(n: int, major: np.ndarray, minor: np.ndarray, val: np.ndarray):
    order = np.lexsort((val, minor, major))
    major, minor, val = major[order], minor[order], val[order]
    counts = np.bincount(major, minlength=n) if n else np.zeros(0, dtype=np.int64)
    nonempty = counts > 0
    m = np.concatenate(([0], np.cumsum(nonempty)))
    p = np.concatenate(([0], np.cumsum(counts[nonempty])))
    return m, p, val, minor


def _kept(t: TripleSet, keep: Iterable[int]) -> np.ndarray:
    keep = np.fromiter(keep, dtype=np.int64)
    return np.isin(t.vals, keep)


def build_csr(t: TripleSet, keep: Iterable[int]) -> LspmCsr:
    """Keep entries whose predicate is in ``keep``; rows sorted by (col, val)."""
    mask = _kept(t, keep)
    return LspmCsr(t.n, *_compress(t.n, t.rows[mask], t.cols[mask], t.vals[mask]))


def build_csc(t: TripleSet, keep: Iterable[int]) -> LspmCsc:
    mask = _kept(t, keep)
    return LspmCsc(t.n, *_compress(t.n, t.cols[mask], t.rows[mask], t.vals[mask]))


def row_slice(csr: LspmCsr, orig_row: int) -> list[tuple[int, int]]:
    """Stored (col, val) entries of an original row; empty when eliminated."""
    return csr.entries(orig_row)


def col_slice(csc: LspmCsc, orig_col: int) -> list[tuple[int, int]]:
    """Stored (row, val) entries of an original column; empty when eliminated."""
    return csc.entries(orig_col)


# Binary layout: 4-byte tag, u64 n, then four arrays (m, p, val, idx), each as
# a u64 element count followed by little-endian int32 elements.
_TAGS = {LspmCsr: b"LCSR", LspmCsc: b"LCSC"}


def dump_lspm(f: BinaryIO, mat: _Compressed) -> None:
    f.write(_TAGS[type(mat)])
    f.write(struct.pack("<Q", mat.n))
    for arr in (mat.m, mat.p, mat.val, mat.idx):
        f.write(struct.pack("<Q", len(arr)))
        f.write(arr.astype("<i4").tobytes())


def load_lspm(f: BinaryIO) -> _Compressed:
    tag = f.read(4)
    kinds = {v: k for k, v in _TAGS.items()}
    if tag not in kinds:
        raise ValueError(f"bad LSpM tag {tag!r}")
    (n,) = struct.unpack("<Q", f.read(8))
    arrays = []
    for _ in range(4):
        (k,) = struct.unpack("<Q", f.read(8))
        arrays.append(np.frombuffer(f.read(4 * k), dtype="<i4").astype(np.int64))
    return kinds[tag](n, *arrays)
