import itertools
import sys
from pathlib import Path

import numpy as np
import pytest

from homgsl.graph import UndirectedGraph

ROOT = Path(__file__).resolve().parents[1]
DATA = ROOT / "data"


def random_graph(n, p, rng):
    pairs = [(i, j) for i, j in itertools.combinations(range(n), 2) if rng.random() < p]
    return UndirectedGraph.from_edges(n, pairs)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def triangle():
    return UndirectedGraph.from_edges(3, [(0, 1), (1, 2), (0, 2)])


def pytest_terminal_summary(terminalreporter):
    acceptance = sys.modules.get("test_acceptance")
    lines = getattr(acceptance, "REPORT", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
