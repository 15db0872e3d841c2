import numpy as np
import pytest

from sseig.graph import Graph, random_connected_graph


def cycle(n):
    return Graph.from_edges(n, np.arange(n), (np.arange(n) + 1) % n)


def complete(n):
    iu, ju = np.triu_indices(n, k=1)
    return Graph.from_edges(n, iu, ju)


def path(n):
    return Graph.from_edges(n, np.arange(n - 1), np.arange(1, n))


def kernel_graph(n, rng_seed, width=1.0):
    """Dense Gaussian-kernel graph with unit self-loops (its adjacency is PSD)."""
    rng = np.random.default_rng(rng_seed)
    pts = rng.standard_normal((n, 2))
    sq = ((pts[:, None, :] - pts[None, :, :]) ** 2).sum(-1)
    return Graph(np.exp(-sq / (2 * width**2)), {"self_loops": True})


@pytest.fixture
def rand30():
    return random_connected_graph(30, 0.2, rng_seed=11)


@pytest.fixture
def rand100():
    return random_connected_graph(100, 0.08, rng_seed=5)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
