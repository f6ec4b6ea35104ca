import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from homgsl.graph import (
    EdgeDelta,
    GraphError,
    UndirectedGraph,
    apply_edge_delta,
    degrees,
    edge_homophily,
)

from conftest import random_graph


def test_canonical_storage_dedups_and_sorts():
    g = UndirectedGraph.from_edges(4, [(2, 1), (1, 2), (0, 3), (3, 3), (1, 0)])
    assert g.edges.tolist() == [[0, 1], [0, 3], [1, 2]]
    assert g.edge_count == 3
    assert g.neighbors(1).tolist() == [0, 2]
    assert g.indices.size == 2 * g.edge_count


def test_out_of_range_edge_rejected():
    with pytest.raises(GraphError, match="out of range"):
        UndirectedGraph.from_edges(3, [(0, 3)])


def test_graph_is_read_only(triangle):
    with pytest.raises(ValueError):
        triangle.edges[0, 0] = 2


def test_homophily_triangle(triangle):
    assert edge_homophily(triangle, [0, 0, 1]) == pytest.approx(1 / 3)


def test_homophily_all_same_labels(rng):
    g = random_graph(20, 0.3, rng)
    assert edge_homophily(g, np.zeros(20, dtype=int)) == 1.0


def test_homophily_no_edges():
    with pytest.raises(GraphError, match="no edges"):
        edge_homophily(UndirectedGraph.from_edges(3), [0, 1, 2])


def test_homophily_label_length_checked(triangle):
    with pytest.raises(GraphError):
        edge_homophily(triangle, [0, 1])


def test_apply_delta_simple():
    g = UndirectedGraph.from_edges(3, [(0, 1), (1, 2)])
    out = apply_edge_delta(g, EdgeDelta.of(recovered=[(0, 2)], removed=[(2, 1)]))
    assert out.edges.tolist() == [[0, 1], [0, 2]]
    assert g.edges.tolist() == [[0, 1], [1, 2]]


def test_apply_empty_delta_identity(triangle):
    assert apply_edge_delta(triangle, EdgeDelta.of()) == triangle


@pytest.mark.parametrize("delta, msg", [
    (EdgeDelta.of(recovered=[(0, 1)]), "already an edge"),
    (EdgeDelta.of(removed=[(0, 2)]), "not an edge"),
    (EdgeDelta.of(recovered=[(0, 9)]), "outside"),
])
def test_apply_delta_invalid(delta, msg):
    g = UndirectedGraph.from_edges(3, [(0, 1)])
    with pytest.raises(GraphError, match=msg):
        apply_edge_delta(g, delta)


def test_apply_delta_matches_set_oracle(rng):
    for _ in range(20):
        g = random_graph(50, 0.1, rng)
        current = {tuple(e) for e in g.edges.tolist()}
        absent = [p for p in itertools.combinations(range(50), 2) if p not in current]
        add = [absent[i] for i in rng.choice(len(absent), 30, replace=False)]
        present = sorted(current)
        rm = [present[i] for i in rng.choice(len(present), min(20, len(present)), replace=False)]
        out = apply_edge_delta(g, EdgeDelta.of(add, rm))
        expect = (current - set(rm)) | set(add)
        assert {tuple(e) for e in out.edges.tolist()} == expect
        assert out.edge_count == g.edge_count - len(rm) + len(add)
        # symmetric sorted neighbor lists
        for i in range(50):
            nb = out.neighbors(i)
            assert np.all(np.diff(nb) > 0)
            for j in nb:
                assert i in out.neighbors(j)
        # inverse delta restores the graph
        back = apply_edge_delta(out, EdgeDelta.of(add, rm).inverse())
        assert back == g


def test_degrees():
    g = UndirectedGraph.from_edges(4, [(0, 1), (1, 2), (0, 2)])
    assert degrees(g).tolist() == [2, 2, 2, 0]


def test_degrees_match_edge_list_recount(rng):
    from homgsl.datasets import SbmParams, generate_sbm

    g = generate_sbm(SbmParams(block_sizes=(50, 50), p_in=0.2, p_out=0.02, seed=3)).graph
    recount = np.zeros(100, dtype=int)
    for u, v in g.edges:
        recount[u] += 1
        recount[v] += 1
    assert np.array_equal(degrees(g), recount)


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 25), st.integers(0, 2**31 - 1), st.integers(1, 4))
def test_homophily_permutation_invariant_and_bounded(n, seed, k):
    rng = np.random.default_rng(seed)
    g = random_graph(n, 0.4, rng)
    if g.edge_count == 0:
        return
    labels = rng.integers(0, k, n)
    h = edge_homophily(g, labels)
    assert 0.0 <= h <= 1.0
    perm = rng.permutation(n)
    g2 = UndirectedGraph.from_edges(n, perm[g.edges])
    lab2 = np.empty_like(labels)
    lab2[perm] = labels
    assert edge_homophily(g2, lab2) == pytest.approx(h)
