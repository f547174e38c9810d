"""Seeded generators: small random graphs and queries, and a WatDiv-style benchmark set."""

from __future__ import annotations

import random
from dataclasses import dataclass

__all__ = [
    "SHAPES",
    "random_dataset",
    "random_query",
    "random_case",
    "watdiv_dataset",
    "WATDIV_QUERIES",
]

SHAPES = ("linear", "star", "snowflake", "complex")


def random_dataset(rng: random.Random, n_entities: int = 50, n_triples: int = 300, n_predicates: int = 6) -> str:
    """N-Triples text with at most the given entity, triple and predicate counts."""
    n = rng.randint(2, n_entities)
    p = rng.randint(1, n_predicates)
    m = rng.randint(1, n_triples)
    seen = set()
    lines = []
    for _ in range(m):
        s, o = rng.randrange(n), rng.randrange(n)
        if rng.random() < 0.05:
            o = s
        t = (s, rng.randrange(p), o)
        if t in seen:
            continue
        seen.add(t)
        lines.append(f"<e{t[0]}> <p{t[1]}> <e{t[2]}> .")
    return "\n".join(lines) + "\n"


def _skeleton(rng: random.Random, shape: str) -> tuple[int, list[tuple[int, int]]]:
    """Vertex count and (a, b) vertex pairs; each pair is oriented randomly later."""
    if shape == "linear":
        k = rng.randint(1, 4)
        return k + 1, [(i, i + 1) for i in range(k)]
    if shape == "star":
        k = rng.randint(2, 4)
        return k + 1, [(0, i) for i in range(1, k + 1)]
    if shape == "snowflake":
        pairs = []
        nv = 1
        for _ in range(rng.randint(2, 3)):
            prev = 0
            for _ in range(rng.randint(1, 2)):
                pairs.append((prev, nv))
                prev = nv
                nv += 1
        return nv, pairs
    nv = rng.randint(3, 5)
    pairs = [(rng.randrange(i), i) for i in range(1, nv)]
    for _ in range(rng.randint(1, 2)):
        a, b = rng.randrange(nv), rng.randrange(nv)
        if a == b and rng.random() < 0.7:
            b = (a + 1) % nv
        pairs.append((a, b))
    return nv, pairs


def random_query(rng: random.Random, triples: list[tuple[str, str, str]], shape: str | None = None, constants: bool | None = None) -> str:
    """A query of the given shape, usually embedded in the data so it has answers."""
    shape = shape or rng.choice(SHAPES)
    nv, pairs = _skeleton(rng, shape)
    entities = sorted({t[0] for t in triples} | {t[2] for t in triples})
    preds = sorted({t[1] for t in triples})
    out_adj: dict[str, list[tuple[str, str]]] = {}
    in_adj: dict[str, list[tuple[str, str]]] = {}
    for s, p, o in triples:
        out_adj.setdefault(s, []).append((p, o))
        in_adj.setdefault(o, []).append((p, s))

    grounded = rng.random() < 0.7
    image: dict[int, str] = {0: rng.choice(entities)}
    edges = []
    for a, b in pairs:
        forward = rng.random() < 0.5
        src, dst = (a, b) if forward else (b, a)
        pred = rng.choice(preds)
        if grounded:
            if src in image and dst in image:
                hits = [p for p, o in out_adj.get(image[src], []) if o == image[dst]]
                pred = rng.choice(hits) if hits else pred
            elif src in image:
                opts = out_adj.get(image[src], [])
                if opts:
                    pred, image[dst] = rng.choice(opts)
            elif dst in image:
                opts = in_adj.get(image[dst], [])
                if opts:
                    pred, image[src] = rng.choice(opts)
        edges.append((src, pred, dst))
    for v in range(nv):
        image.setdefault(v, rng.choice(entities))

    use_const = rng.random() < 0.35 if constants is None else constants
    const: set[int] = set()
    if use_const and nv > 1:
        const = set(rng.sample(range(nv), rng.randint(1, min(2, nv - 1))))

    def term(v):
        return f"<{image[v]}>" if v in const else f"?x{v}"

    body = "\n".join(f"  {term(s)} <{p}> {term(o)} ." for s, p, o in edges)
    return f"SELECT * WHERE {{\n{body}\n}}\n"


@dataclass(frozen=True)
class Case:
    seed: int
    data: str
    query: str
    shape: str


def random_case(seed: int, shape: str | None = None, constants: bool | None = None, budget: int | None = 20_000) -> Case:
    """Deterministic (dataset, query) pair for ``seed``.

    Pairs whose reference evaluation needs more than ``budget`` search steps
    are redrawn from the same stream, which keeps answer sets small.
    """
    from .engine import Dataset
    from .oracle import BudgetExceeded, brute_force
    from .query import parse_query

    rng = random.Random(seed)
    shape = shape or SHAPES[seed % len(SHAPES)]
    while True:
        data = random_dataset(rng)
        triples = [tuple(x.strip("<>") for x in line.split()[:3]) for line in data.splitlines() if line]
        case = Case(seed, data, random_query(rng, triples, shape, constants), shape)
        if budget is None:
            return case
        ds = Dataset.from_ntriples(data)
        try:
            brute_force(ds.triples, parse_query(case.query), ds.dictionary, budget)
        except BudgetExceeded:
            continue
        return case


# -- WatDiv-style benchmark ---------------------------------------------------

RDF_TYPE = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type"
W = "http://example.org/wd/"


def watdiv_dataset(seed: int = 0, n_triples: int = 100_000) -> str:
    """Users, products, reviews, offers and places with skewed degrees; exactly ``n_triples`` lines."""
    rng = random.Random(seed)
    n_users, n_products, n_reviews, n_offers = 10_000, 5_000, 8_000, 4_000
    n_retailers, n_cities, n_countries, n_genres = 50, 200, 25, 20
    out: list[str] = []
    seen: set[tuple[str, str, str]] = set()

    def add(s, p, o):
        t = (s, p, o)
        if t not in seen:
            seen.add(t)
            out.append(f"<{s}> <{p}> <{o}> .")

    def pick(prefix, n, skew=1.0):
        # power-law-ish pick: low ids are popular
        return f"{W}{prefix}{int(n * rng.random() ** (1 + skew)) if skew else rng.randrange(n)}"

    for c in range(n_cities):
        add(f"{W}City{c}", f"{W}inCountry", f"{W}Country{rng.randrange(n_countries)}")
    for u in range(n_users):
        user = f"{W}User{u}"
        add(user, RDF_TYPE, f"{W}Role{rng.randrange(3)}")
        add(user, f"{W}locatedIn", pick("City", n_cities))
    for pr in range(n_products):
        prod = f"{W}Product{pr}"
        add(prod, RDF_TYPE, f"{W}ProductCategory{rng.randrange(15)}")
        add(prod, f"{W}hasGenre", pick("Genre", n_genres))
    for r in range(n_reviews):
        rev = f"{W}Review{r}"
        add(rev, f"{W}reviewFor", pick("Product", n_products))
        add(rev, f"{W}reviewer", pick("User", n_users, 0.5))
    for o in range(n_offers):
        off = f"{W}Offer{o}"
        add(off, f"{W}includes", pick("Product", n_products))
        add(pick("Retailer", n_retailers, 0.5), f"{W}offers", off)
    for u in range(n_users):
        for _ in range(2):
            add(f"{W}User{u}", f"{W}likes", pick("Product", n_products))
    while len(out) < n_triples:
        add(pick("User", n_users, 0), f"{W}follows", pick("User", n_users, 1.0))
        if len(out) < n_triples and rng.random() < 0.3:
            add(pick("User", n_users, 0), f"{W}friendOf", pick("User", n_users, 0))
    return "\n".join(out[:n_triples]) + "\n"


_PFX = f"PREFIX wd: <{W}>\nPREFIX rdf: <http://www.w3.org/1999/02/22-rdf-syntax-ns#>\n"


def _q(body: str) -> str:
    return _PFX + "SELECT * WHERE {\n" + body.strip() + "\n}\n"


WATDIV_QUERIES: dict[str, str] = {
    # linear
    "L1": _q("?u wd:locatedIn wd:City7 . ?u wd:likes ?p . ?p wd:hasGenre ?g ."),
    "L2": _q("wd:User15 wd:follows ?f . ?f wd:locatedIn ?c . ?c wd:inCountry ?k ."),
    "L3": _q("?r wd:reviewFor wd:Product3 . ?r wd:reviewer ?u ."),
    "L4": _q("wd:Retailer2 wd:offers ?o . ?o wd:includes ?p . ?p wd:hasGenre ?g ."),
    "L5": _q("?u wd:locatedIn ?c . ?c wd:inCountry wd:Country3 . ?u rdf:type wd:Role1 . ?u wd:friendOf wd:User42 ."),
    # star
    "S1": _q("?p rdf:type wd:ProductCategory2 . ?p wd:hasGenre wd:Genre1 . ?o wd:includes ?p . ?r wd:reviewFor ?p ."),
    "S2": _q("?u wd:locatedIn wd:City3 . ?u rdf:type wd:Role2 . ?u wd:likes ?p ."),
    "S3": _q("?p wd:hasGenre wd:Genre5 . ?p rdf:type ?t . ?r wd:reviewFor ?p . ?o wd:includes ?p ."),
    "S4": _q("?u wd:follows wd:User9 . ?u wd:locatedIn ?c . ?u rdf:type wd:Role0 ."),
    "S5": _q("?r wd:reviewer wd:User1 . ?r wd:reviewFor ?p ."),
    "S6": _q("?u wd:likes wd:Product11 . ?u wd:locatedIn ?c . ?u wd:friendOf ?f ."),
    "S7": _q("?o wd:includes ?p . wd:Retailer5 wd:offers ?o . ?p rdf:type ?t ."),
    # snowflake
    "F1": _q("?u wd:locatedIn wd:City2 . ?u wd:likes ?p . ?p wd:hasGenre ?g . ?r wd:reviewFor ?p . ?r wd:reviewer ?w ."),
    "F2": _q("wd:Retailer1 wd:offers ?o . ?o wd:includes ?p . ?p wd:hasGenre ?g . ?r wd:reviewFor ?p . ?p rdf:type ?t ."),
    "F3": _q("?u wd:follows wd:User3 . ?u wd:locatedIn ?c . ?c wd:inCountry ?k . ?u wd:likes ?p . ?p wd:hasGenre ?g ."),
    "F4": _q("?r wd:reviewer wd:User7 . ?r wd:reviewFor ?p . ?p wd:hasGenre ?g . ?o wd:includes ?p ."),
    "F5": _q("?p wd:hasGenre wd:Genre9 . ?p rdf:type wd:ProductCategory4 . ?u wd:likes ?p . ?u wd:locatedIn ?c . ?c wd:inCountry ?k ."),
    # complex
    "C1": _q("?u wd:likes ?p . ?r wd:reviewFor ?p . ?r wd:reviewer ?u . ?u wd:locatedIn ?c ."),
    "C2": _q("?a wd:friendOf ?b . ?b wd:friendOf ?a . ?a wd:locatedIn ?c . ?b wd:locatedIn ?c ."),
    "C3": _q("?u wd:follows ?v . ?v wd:follows ?u . ?u wd:likes ?p . ?v wd:likes ?p ."),
}
