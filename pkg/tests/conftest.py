from functools import lru_cache

import pytest

from twobridge.grid import GridDiagram
from twobridge.homology import compute
from twobridge.knot import TwoBridgeKnot

# acceptance criteria append (status, text) here; printed after the run
ACCEPTANCE_LINES = []


@lru_cache(maxsize=None)
def knot_data(p: int, q: int, method: str = "rectangles"):
    """Shared pipeline results, computed once per session."""
    return compute(TwoBridgeKnot(p, q), method)


@lru_cache(maxsize=None)
def diagram(p: int, q: int) -> GridDiagram:
    return GridDiagram(TwoBridgeKnot(p, q))


@pytest.fixture
def data():
    return knot_data


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
