import numpy as np
import pytest
from hypothesis import HealthCheck, settings, strategies as st

from snrgraph.graph import build_graph

settings.register_profile(
    "default",
    max_examples=40,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.data_too_large],
)
settings.load_profile("default")


def random_graph(rng, n, p=0.2, k=2):
    """Erdos-Renyi graph with uniform random labels (every class present when n >= k)."""
    upper = np.triu(rng.random((n, n)) < p, 1)
    edges = np.argwhere(upper)
    labels = rng.permutation(np.arange(n) % k)
    return build_graph(edges, labels, k=k)


@st.composite
def graphs(draw, min_n=2, max_n=24, max_k=3):
    n = draw(st.integers(min_n, max_n))
    k = draw(st.integers(1, min(max_k, n)))
    seed = draw(st.integers(0, 2**32 - 1))
    p = draw(st.floats(0.05, 0.9))
    return random_graph(np.random.default_rng(seed), n, p, k)


def path_graph_fig1b():
    """x - a - T - b - y with a and b in different classes; returns (graph, index of T)."""
    # nodes: x=0, a=1, T=2, b=3, y=4
    edges = [(0, 1), (1, 2), (2, 3), (3, 4)]
    labels = [0, 0, 0, 1, 1]
    return build_graph(edges, labels, k=2), 2


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE = {}


def record(number, passed, detail):
    """Store one acceptance verdict for the end-of-run summary."""
    ACCEPTANCE[number] = (bool(passed), detail)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        passed, detail = ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}")
