import numpy as np
import pytest

from qgt.graph import BipartiteGraph

# 3 tests x 6 items, column weight 2, row weight 4
EQ2_MATRIX = [
    [1, 1, 0, 1, 0, 1],
    [0, 1, 1, 1, 1, 0],
    [1, 0, 1, 0, 1, 1],
]

ACCEPTANCE_LINES = []


@pytest.fixture
def eq2_graph():
    return BipartiteGraph.from_matrix(np.array(EQ2_MATRIX))


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
