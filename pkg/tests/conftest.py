import pytest

from sparsebgp.engine import Dataset
from sparsebgp.fixtures import SAMPLE_ENTITY_ORDER, SAMPLE_NTRIPLES, SAMPLE_QUERY
from sparsebgp.query import parse_query
from sparsebgp.rdf import encode, filter_predicates, parse_ntriples

_ACCEPTANCE: list[str] = []


@pytest.fixture(scope="session")
def sample_raw():
    return parse_ntriples(SAMPLE_NTRIPLES)


@pytest.fixture(scope="session")
def sample_query():
    return parse_query(SAMPLE_QUERY)


@pytest.fixture(scope="session")
def sample_encoded(sample_raw, sample_query):
    """Dictionary and triples of the example graph restricted to the query predicates."""
    return encode(filter_predicates(sample_raw, sample_query.predicates), entities=SAMPLE_ENTITY_ORDER)


@pytest.fixture(scope="session")
def sample_ds():
    return Dataset.from_ntriples(SAMPLE_NTRIPLES, SAMPLE_ENTITY_ORDER)


@pytest.fixture
def acceptance_report():
    def report(criterion: int, ok: bool, detail: str) -> None:
        _ACCEPTANCE.append(f"criterion {criterion}: {'PASS' if ok else 'FAIL'}  {detail}")

    return report


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE:
            terminalreporter.write_line(line)
