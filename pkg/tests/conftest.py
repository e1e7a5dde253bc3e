import os

# Turn on the EM monotonicity assertion for every fit the suite runs,
# including fits inside CLI subprocesses.
os.environ["SBMCLUST_CHECK_EM"] = "1"

import numpy as np  # noqa: E402
import pytest  # noqa: E402
from hypothesis import settings  # noqa: E402

from sbmclust import gmm  # noqa: E402
from sbmclust.graph import Graph  # noqa: E402

gmm.CHECK_MONOTONE = True

settings.register_profile("default", max_examples=50, deadline=None)
settings.load_profile("default")


def cliques(*sizes) -> Graph:
    """Disjoint union of complete graphs."""
    edges, start = [], 0
    for s in sizes:
        edges += [(i, j) for i in range(start, start + s) for j in range(i + 1, start + s)]
        start += s
    return Graph(start, np.array(edges, dtype=np.int64).reshape(-1, 2))


@pytest.fixture
def two_k5():
    return cliques(5, 5)


@pytest.fixture
def two_k3():
    return cliques(3, 3)


# One verdict line per acceptance criterion, printed at the end of the run.
ACCEPTANCE: dict[int, str] = {}


def record_criterion(number: int, passed: bool, detail: str) -> None:
    ACCEPTANCE[number] = f"criterion {number}: {'PASS' if passed else 'FAIL'} ({detail})"
    print(ACCEPTANCE[number])


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for number in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[number])
