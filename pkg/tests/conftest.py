import random

import pytest

from memclust.graph import Graph

TWO_TRIANGLES = [(0, 1), (0, 2), (1, 2), (3, 4), (3, 5), (4, 5), (2, 3)]
TRIANGLE = [(0, 1), (0, 2), (1, 2)]
K4 = [(a, b) for a in range(4) for b in range(a + 1, 4)]
PATH4 = [(0, 1), (1, 2), (2, 3)]
CYCLE4 = [(0, 1), (1, 2), (2, 3), (0, 3)]


@pytest.fixture
def two_triangles():
    return Graph.from_edges(6, TWO_TRIANGLES)


@pytest.fixture
def triangle():
    return Graph.from_edges(3, TRIANGLE)


@pytest.fixture
def k4():
    return Graph.from_edges(4, K4)


@pytest.fixture
def rng():
    return random.Random(12345)


def pytest_terminal_summary(terminalreporter):
    lines = []
    for outcome in ("passed", "failed", "skipped"):
        for rep in terminalreporter.stats.get(outcome, []):
            props = dict(getattr(rep, "user_properties", []))
            if "criterion" in props and rep.when in ("call", "setup"):
                lines.append((str(props["criterion"]), outcome.upper(), props.get("detail", "")))
    if lines:
        terminalreporter.section("acceptance criteria")
        for crit, outcome, detail in sorted(lines, key=lambda x: x[0]):
            terminalreporter.write_line(f"criterion {crit}: {outcome:7s} {detail}")
