"""SPARQL basic-graph-pattern parsing into a directed labelled query graph."""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field

from .rdf import normalize_term

__all__ = [
    "QuerySyntaxError",
    "UnsupportedFeatureError",
    "QueryVertex",
    "QueryEdge",
    "QueryGraph",
    "parse_query",
    "classify_edges",
    "format_query",
]


class QuerySyntaxError(ValueError):
    def __init__(self, message: str, position: int) -> None:
        super().__init__(f"{message} at offset {position}")
        self.position = position


class UnsupportedFeatureError(QuerySyntaxError):
    pass


_TOKEN_RE = re.compile(
    r"\s*(?:"
    r"(?P<comment>\#[^\n]*)"
    r"|(?P<iri><[^<>\s]*>)"
    r'|(?P<literal>"(?:[^"\\]|\\.)*"(?:@[A-Za-z][\w-]*|\^\^<[^<>\s]*>)?)'
    r"|(?P<var>[?$][A-Za-z_][\w]*)"
    r"|(?P<punct>[{}.*])"
    r"|(?P<word>[^\s<>\"{}]+?)(?=[\s{}]|\.(?:\s|$|})|$)"
    r")"
)


@dataclass(frozen=True)
class QueryVertex:
    id: int
    term: str  # variable name without '?', or the normalised constant term
    is_variable: bool

    @property
    def label(self) -> str:
        return f"?{self.term}" if self.is_variable else self.term


@dataclass(frozen=True)
class QueryEdge:
    index: int
    src: int
    dst: int
    predicate: str

    @property
    def is_self_loop(self) -> bool:
        return self.src == self.dst


@dataclass
class QueryGraph:
    vertices: list[QueryVertex]
    edges: list[QueryEdge]
    projection: list[str]
    _by_term: dict[tuple[bool, str], int] = field(default_factory=dict, repr=False)

    def __post_init__(self) -> None:
        self._by_term = {(v.is_variable, v.term): v.id for v in self.vertices}
        used = {self.vertices[x].term for e in self.edges for x in (e.src, e.dst) if self.vertices[x].is_variable}
        missing = [p for p in self.projection if p not in used]
        if missing:
            raise ValueError(f"projected variables not used in any pattern: {missing}")

    def variable(self, name: str) -> QueryVertex:
        return self.vertices[self._by_term[(True, name)]]

    @property
    def variables(self) -> list[QueryVertex]:
        return [v for v in self.vertices if v.is_variable]

    @property
    def constants(self) -> list[QueryVertex]:
        return [v for v in self.vertices if not v.is_variable]

    @property
    def predicates(self) -> set[str]:
        return {e.predicate for e in self.edges}

    def incident(self, v: int) -> list[QueryEdge]:
        return [e for e in self.edges if e.src == v or e.dst == v]

    def to_json(self) -> dict:
        return {
            "vertices": [
                {"id": v.id, "term": v.label, "kind": "variable" if v.is_variable else "constant"}
                for v in self.vertices
            ],
            "edges": [
                {"index": e.index, "from": e.src, "to": e.dst, "predicate": e.predicate} for e in self.edges
            ],
            "projection": list(self.projection),
        }


def _tokens(text: str):
    pos = 0
    n = len(text)
    while pos < n:
        if text[pos:].strip() == "":
            return
        m = _TOKEN_RE.match(text, pos)
        if not m or m.end() == pos:
            raise QuerySyntaxError("unexpected character", pos)
        kind = m.lastgroup
        start = m.start(kind)
        pos = m.end()
        if kind == "comment":
            continue
        yield kind, m.group(kind), start
    return


def parse_query(text: str) -> QueryGraph:
    """Parse ``[PREFIX p: <iri>]* SELECT (?v+|*) WHERE { s p o . ... }``."""
    toks = list(_tokens(text))
    toks.append(("eof", "", len(text)))
    i = 0

    def peek():
        return toks[i]

    def take(kind=None, value=None):
        nonlocal i
        k, v, p = toks[i]
        if (kind and k != kind) or (value is not None and v.upper() != value.upper()):
            want = value or kind
            raise QuerySyntaxError(f"expected {want!r}, found {v or k!r}", p)
        i += 1
        return k, v, p

    prefixes: dict[str, str] = {}
    while peek()[0] == "word" and peek()[1].upper() == "PREFIX":
        take()
        _, name, p = take("word")
        if not name.endswith(":"):
            raise QuerySyntaxError("prefix name must end with ':'", p)
        _, iri, _ = take("iri")
        prefixes[name[:-1]] = iri[1:-1]

    take("word", "SELECT")
    if peek()[0] == "word" and peek()[1].upper() == "DISTINCT":
        take()
    projection: list[str] = []
    star = False
    if peek()[1] == "*":
        take()
        star = True
    else:
        while peek()[0] == "var":
            projection.append(take()[1][1:])
        if not projection:
            raise QuerySyntaxError("SELECT needs variables or '*'", peek()[2])
    take("word", "WHERE")
    take("punct", "{")

    vertices: list[QueryVertex] = []
    by_term: dict[tuple[bool, str], int] = {}
    edges: list[QueryEdge] = []

    def term(tok, allow_var=True, allow_literal=True):
        kind, value, pos = tok
        if kind == "var":
            if not allow_var:
                raise UnsupportedFeatureError("variable predicates are not supported", pos)
            return True, value[1:]
        if kind == "iri":
            return False, normalize_term(value)
        if kind == "literal":
            if not allow_literal:
                raise QuerySyntaxError("literal not allowed here", pos)
            return False, value
        if kind == "word" and value not in {".", "{", "}"}:
            if ":" in value:
                pfx, local = value.split(":", 1)
                if pfx in prefixes:
                    return False, prefixes[pfx] + local
            if value == "a":
                return False, "http://www.w3.org/1999/02/22-rdf-syntax-ns#type"
            return False, value
        raise QuerySyntaxError(f"expected a term, found {value or kind!r}", pos)

    def vertex(key):
        if key not in by_term:
            by_term[key] = len(vertices)
            vertices.append(QueryVertex(len(vertices), key[1], key[0]))
        return by_term[key]

    while True:
        k, v, p = peek()
        if k == "punct" and v == "}":
            take()
            break
        if k == "eof":
            raise QuerySyntaxError("unterminated group pattern", p)
        if k == "word" and v.upper() in {"FILTER", "OPTIONAL", "UNION", "MINUS", "BIND", "VALUES", "GRAPH", "SERVICE"}:
            raise UnsupportedFeatureError(f"{v.upper()} is not supported", p)
        s = term(take(), allow_literal=False)
        pr = term(take(), allow_var=False, allow_literal=False)
        o = term(take())
        sid, oid = vertex(s), vertex(o)
        edges.append(QueryEdge(len(edges), sid, oid, pr[1]))
        if peek()[0] == "punct" and peek()[1] == ".":
            take()
        elif not (peek()[0] == "punct" and peek()[1] == "}"):
            raise QuerySyntaxError("expected '.' or '}'", peek()[2])
    if peek()[0] != "eof":
        raise QuerySyntaxError("trailing input", peek()[2])
    if star:
        projection = [v.term for v in vertices if v.is_variable]
    try:
        return QueryGraph(vertices, edges, projection)
    except ValueError as exc:
        raise QuerySyntaxError(str(exc), 0) from None


def _fmt_term(v: QueryVertex) -> str:
    if v.is_variable:
        return f"?{v.term}"
    if v.term.startswith('"'):
        return v.term
    return f"<{v.term}>"


def format_query(g: QueryGraph) -> str:
    head = " ".join(f"?{p}" for p in g.projection) or "*"
    body = "\n".join(
        f"  {_fmt_term(g.vertices[e.src])} <{e.predicate}> {_fmt_term(g.vertices[e.dst])} ."
        for e in g.edges
    )
    return f"SELECT {head} WHERE {{\n{body}\n}}\n"


def classify_edges(g: QueryGraph) -> tuple[set[QueryEdge], set[QueryEdge]]:
    """Split edges into light (touching a constant) and heavy (variables only)."""
    light = {e for e in g.edges if not (g.vertices[e.src].is_variable and g.vertices[e.dst].is_variable)}
    return light, set(g.edges) - light


def dump_graph(g: QueryGraph) -> str:
    return json.dumps(g.to_json(), indent=2)
