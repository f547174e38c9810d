"""N-Triples ingestion and dictionary encoding.

Terms are normalised to plain strings: ``<IRI>`` loses its angle brackets,
bare identifiers are kept verbatim and quoted literals keep their quotes (and
any ``@lang`` / ``^^<type>`` suffix) so they never collide with IRIs.
"""

from __future__ import annotations

import io
import re
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from typing import BinaryIO, NamedTuple, TextIO, Union

import numpy as np

__all__ = [
    "RawTriple",
    "Dictionary",
    "TripleSet",
    "NTriplesSyntaxError",
    "normalize_term",
    "parse_ntriples",
    "filter_predicates",
    "encode",
]

_TERM_RE = re.compile(
    r'<[^<>\s]*>'
    r'|"(?:[^"\\]|\\.)*"(?:@[A-Za-z][\w-]*|\^\^<[^<>\s]*>)?'
    r'|[^\s<>"]+'
)


class NTriplesSyntaxError(ValueError):
    def __init__(self, line: int, message: str) -> None:
        super().__init__(f"line {line}: {message}")
        self.line = line


class RawTriple(NamedTuple):
    subject: str
    predicate: str
    object: str


def normalize_term(token: str) -> str:
    if token.startswith("<") and token.endswith(">"):
        return token[1:-1]
    return token


def split_terms(text: str) -> list[str] | None:
    """Tokenise ``text`` into terms, or None if something unparseable is left over."""
    pos = 0
    terms = []
    for m in _TERM_RE.finditer(text):
        if text[pos:m.start()].strip():
            return None
        terms.append(m.group(0))
        pos = m.end()
    if text[pos:].strip():
        return None
    return terms


def _lines(stream) -> Iterable[str]:
    if isinstance(stream, (bytes, bytearray)):
        stream = io.BytesIO(stream)
    elif isinstance(stream, str):
        stream = io.StringIO(stream)
    for line in stream:
        if isinstance(line, (bytes, bytearray)):
            line = line.decode("utf-8")
        yield line


def parse_ntriples(stream: Union[BinaryIO, TextIO, bytes, str, Iterable]) -> list[RawTriple]:
    """Parse the supported N-Triples subset, one triple per non-blank line."""
    out: list[RawTriple] = []
    for lineno, line in enumerate(_lines(stream), start=1):
        text = line.strip()
        if not text or text.startswith("#"):
            continue
        if not text.endswith("."):
            raise NTriplesSyntaxError(lineno, "missing terminating '.'")
        terms = split_terms(text[:-1])
        if terms is None:
            raise NTriplesSyntaxError(lineno, "unparseable term")
        if len(terms) != 3:
            raise NTriplesSyntaxError(lineno, f"expected 3 terms, found {len(terms)}")
        out.append(RawTriple(*(normalize_term(t) for t in terms)))
    return out


def filter_predicates(raw: Iterable[RawTriple], query_predicates: Iterable[str]) -> list[RawTriple]:
    keep = set(query_predicates)
    return [t for t in raw if t.predicate in keep]


@dataclass(frozen=True)
class Dictionary:
    """Bijective string <-> id maps; entity ids are 0-based, predicate ids 1-based."""

    entities: tuple[str, ...]
    predicates: tuple[str, ...]
    entity_to_id: dict[str, int] = field(init=False, repr=False, compare=False)
    predicate_to_id: dict[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "entity_to_id", {s: i for i, s in enumerate(self.entities)})
        object.__setattr__(self, "predicate_to_id", {s: i + 1 for i, s in enumerate(self.predicates)})
        if len(self.entity_to_id) != len(self.entities):
            raise ValueError("duplicate entity strings")
        if len(self.predicate_to_id) != len(self.predicates):
            raise ValueError("duplicate predicate strings")

    @property
    def n_entities(self) -> int:
        return len(self.entities)

    @property
    def n_predicates(self) -> int:
        return len(self.predicates)

    def entity_id(self, term: str) -> int | None:
        return self.entity_to_id.get(term)

    def predicate_id(self, term: str) -> int | None:
        return self.predicate_to_id.get(term)

    def entity(self, eid: int) -> str:
        return self.entities[eid]

    def predicate(self, pid: int) -> str:
        return self.predicates[pid - 1]

    def decode(self, row: int, col: int, val: int) -> RawTriple:
        return RawTriple(self.entity(row), self.predicate(val), self.entity(col))


@dataclass(frozen=True, eq=False)
class TripleSet:
    """The encoded RDF matrix in coordinate form: A[row, col] carries predicate ``val``.

    Several entries may share a (row, col) cell when their predicates differ.
    """

    n: int
    rows: np.ndarray
    cols: np.ndarray
    vals: np.ndarray
    n_predicates: int = 0

    def __post_init__(self) -> None:
        for name in ("rows", "cols", "vals"):
            arr = np.ascontiguousarray(getattr(self, name), dtype=np.int64)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if not (len(self.rows) == len(self.cols) == len(self.vals)):
            raise ValueError("coordinate arrays differ in length")

    def __len__(self) -> int:
        return len(self.vals)

    @property
    def triples(self) -> list[tuple[int, int, int]]:
        return list(zip(self.rows.tolist(), self.cols.tolist(), self.vals.tolist()))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, TripleSet):
            return NotImplemented
        return self.n == other.n and sorted(self.triples) == sorted(other.triples)

    @classmethod
    def from_triples(cls, n: int, triples: Sequence[tuple[int, int, int]], n_predicates: int | None = None) -> "TripleSet":
        arr = np.asarray(list(triples), dtype=np.int64).reshape(-1, 3)
        if n_predicates is None:
            n_predicates = int(arr[:, 2].max()) if len(arr) else 0
        return cls(n, arr[:, 0], arr[:, 1], arr[:, 2], n_predicates)


def encode(filtered: Iterable[RawTriple], entities: Sequence[str] | None = None) -> tuple[Dictionary, TripleSet]:
    """Dictionary-encode triples.

    Ids go to strings in order of first appearance (subject before object,
    triples in input order). ``entities`` optionally pre-seeds the entity
    order, e.g. to reproduce a fixed vertex numbering. Identical triples
    are kept once.
    """
    ent: dict[str, int] = {}
    pred: dict[str, int] = {}
    for s in entities or ():
        ent.setdefault(s, len(ent))
    seen: set[tuple[int, int, int]] = set()
    coords: list[tuple[int, int, int]] = []
    for t in filtered:
        r = ent.setdefault(t.subject, len(ent))
        c = ent.setdefault(t.object, len(ent))
        p = pred.setdefault(t.predicate, len(pred) + 1)
        key = (r, c, p)
        if key not in seen:
            seen.add(key)
            coords.append(key)
    d = Dictionary(tuple(ent), tuple(pred))
    return d, TripleSet.from_triples(len(ent), coords, n_predicates=len(pred))
