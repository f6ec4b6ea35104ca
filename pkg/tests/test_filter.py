import numpy as np
import pytest

from homgsl.filter import FilterSpec, default_kappa, dense_filter, propagate
from homgsl.graph import UndirectedGraph

from conftest import random_graph


def _dense_oracle(graph, x, kappa, hops):
    n = graph.num_nodes
    a = np.zeros((n, n))
    for u, v in graph.edges:
        a[u, v] = a[v, u] = 1.0
    a += np.eye(n)
    d = np.diag(1.0 / np.sqrt(a.sum(1)))
    lap = np.eye(n) - d @ a @ d
    return np.linalg.matrix_power(np.eye(n) - kappa * lap, hops) @ x


def test_zero_hops_identity(rng):
    g = random_graph(10, 0.3, rng)
    x = rng.normal(size=(10, 3))
    assert np.array_equal(propagate(g, x, FilterSpec(0.5, 0)), x)


def test_two_node_kappa_one():
    g = UndirectedGraph.from_edges(2, [(0, 1)])
    h = propagate(g, [[1.0], [0.0]], FilterSpec(1.0, 1))
    assert np.allclose(h, _dense_oracle(g, np.array([[1.0], [0.0]]), 1.0, 1))
    assert np.allclose(h, [[0.5], [0.5]])


def test_two_node_kappa_two_thirds():
    g = UndirectedGraph.from_edges(2, [(0, 1)])
    h = propagate(g, [[1.0], [0.0]], FilterSpec(2 / 3, 1))
    assert np.allclose(h, [[2 / 3], [1 / 3]])


def test_default_kappa():
    assert default_kappa() == pytest.approx(0.6666666666666666)


def test_regular_graph_preserves_constants():
    n = 8
    g = UndirectedGraph.from_edges(n, [(i, (i + 1) % n) for i in range(n)])
    h = propagate(g, np.ones((n, 2)), FilterSpec(default_kappa(), 5))
    assert np.allclose(h, 1.0)


@pytest.mark.parametrize("hops", [1, 2, 5, 8])
def test_matches_dense_oracle(rng, hops):
    for _ in range(5):
        n = int(rng.integers(5, 30))
        g = random_graph(n, 0.2, rng)
        x = rng.normal(size=(n, 4))
        kappa = float(rng.uniform(0.1, 1.0))
        h = propagate(g, x, FilterSpec(kappa, hops))
        ref = _dense_oracle(g, x, kappa, hops)
        assert np.max(np.abs(h - ref)) <= 1e-10 * max(1.0, np.max(np.abs(ref)))
        assert np.allclose(dense_filter(g, FilterSpec(kappa, hops)) @ x, ref)


def test_dense_oracle_n200(rng):
    g = random_graph(200, 0.03, rng)
    x = rng.normal(size=(200, 3))
    h = propagate(g, x, FilterSpec(2 / 3, 4))
    ref = _dense_oracle(g, x, 2 / 3, 4)
    assert np.linalg.norm(h - ref) <= 1e-10 * np.linalg.norm(ref)


def test_linearity(rng):
    g = random_graph(30, 0.15, rng)
    x, y = rng.normal(size=(30, 3)), rng.normal(size=(30, 3))
    spec = FilterSpec(2 / 3, 3)
    lhs = propagate(g, 2.5 * x - 0.7 * y, spec)
    rhs = 2.5 * propagate(g, x, spec) - 0.7 * propagate(g, y, spec)
    assert np.allclose(lhs, rhs, rtol=1e-10, atol=1e-12)


def test_isolated_node_is_safe():
    g = UndirectedGraph.from_edges(3, [(0, 1)])
    h = propagate(g, np.eye(3), FilterSpec(2 / 3, 2))
    assert np.all(np.isfinite(h))
    assert np.allclose(h[2], [0, 0, 1])


def test_dimension_mismatch(triangle):
    with pytest.raises(ValueError):
        propagate(triangle, np.ones((4, 2)), FilterSpec())


@pytest.mark.parametrize("kappa, hops", [(0.0, 1), (-1.0, 1), (0.5, -1), (0.5, 1.5)])
def test_bad_spec(kappa, hops):
    with pytest.raises(ValueError):
        FilterSpec(kappa, hops)
