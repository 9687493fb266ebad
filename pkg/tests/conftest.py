from __future__ import annotations

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

# filled by tests/test_acceptance.py, printed at the end of the session
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_multigraph(rng, n_max=30, e_max=80):
    from graphgen.graph import MultiGraph
    n = int(rng.integers(1, n_max))
    edges = rng.integers(0, n, size=(int(rng.integers(0, e_max)), 2))
    return MultiGraph.from_edges(edges, n), edges


def erdos_renyi(n, p, rng):
    from graphgen.graph import SimpleGraph
    iu = np.triu_indices(n, 1)
    keep = rng.random(iu[0].size) < p
    return SimpleGraph.from_edges(np.column_stack([iu[0][keep], iu[1][keep]]), n)
