import os
import sys

import numpy as np
import pytest
from hypothesis import settings

sys.path.insert(0, os.path.dirname(__file__))

settings.register_profile("repro", derandomize=True, print_blob=True)
settings.load_profile("repro")

from frs_noir import build_graph  # noqa: E402
from frs_noir.reference import reference_graph  # noqa: E402


@pytest.fixture
def cycle2():
    return build_graph(2, [(1, 2), (2, 1)], [1], [2])


@pytest.fixture
def cycle4():
    return build_graph(4, [(1, 2), (2, 3), (3, 4), (4, 1)], [1], [3])


@pytest.fixture(scope="session")
def ref_graph():
    return reference_graph()


def random_graph(rng, n):
    """Random graph where every road has at least one exit and one entry."""
    edges = set()
    perm = rng.permutation(n)
    for a, b in zip(perm, np.roll(perm, -1)):
        edges.add((int(a) + 1, int(b) + 1))
    for _ in range(int(rng.integers(0, 2 * n))):
        a, b = rng.choice(n, 2, replace=False)
        edges.add((int(a) + 1, int(b) + 1))
    k = int(rng.integers(0, n // 2 + 1))
    roads = rng.permutation(n)[: 2 * k] + 1
    return build_graph(n, sorted(edges), roads[:k].tolist(), roads[k:].tolist())


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
