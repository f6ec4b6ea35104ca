"""Structure rewriting: confident-node extraction, intra-cluster edge recovery
and inter-cluster edge removal.

All rankings are deterministic. Ties in similarity are broken by the
lexicographic order of the (min, max) node pair, ties in confidence by the
lower node id.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .clusterer import hard_labels
from .graph import EdgeDelta, UndirectedGraph, canonical_pairs

_FLOOR_EPS = 1e-9


def _floor(x: float) -> int:
    # 0.3 * 10 evaluates to 2.9999999999999996
    return int(math.floor(x + _FLOOR_EPS))


@dataclass(frozen=True)
class ConfidentSubsets:
    """``members[k]`` lists the selected nodes of cluster k, most confident first."""

    members: tuple
    confidence: tuple
    gamma: float

    @property
    def num_clusters(self) -> int:
        return len(self.members)

    def sizes(self) -> np.ndarray:
        return np.array([m.size for m in self.members], dtype=np.int64)


@dataclass(frozen=True)
class SparsifyParams:
    xi: float = 0.5
    eta: float = 0.01

    def __post_init__(self):
        for name in ("xi", "eta"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")


def top_confident(q: np.ndarray, gamma: float) -> ConfidentSubsets:
    if not 0.0 < gamma <= 1.0:
        raise ValueError(f"gamma must lie in (0, 1], got {gamma}")
    q = np.asarray(q, dtype=np.float64)
    labels = hard_labels(q)
    conf = q[np.arange(q.shape[0]), labels]
    members, confidence = [], []
    for k in range(q.shape[1]):
        idx = np.flatnonzero(labels == k)
        if idx.size == 0:
            members.append(idx)
            confidence.append(np.empty(0))
            continue
        keep = max(1, _floor(gamma * idx.size))
        order = np.lexsort((idx, -conf[idx]))[:keep]
        members.append(idx[order])
        confidence.append(conf[idx[order]])
    return ConfidentSubsets(tuple(members), tuple(confidence), float(gamma))


def recovery_budget(num_edges: int, xi: float, subset_size: int, num_nodes: int) -> int:
    return _floor(xi * num_edges * subset_size / num_nodes)


def _cluster_candidates(z: np.ndarray, nodes: np.ndarray, graph: UndirectedGraph):
    nodes = np.sort(nodes)
    iu, ju = np.triu_indices(nodes.size, k=1)
    pairs = np.stack([nodes[iu], nodes[ju]], axis=1)
    zk = z[nodes]
    sims = (zk @ zk.T)[iu, ju]
    fresh = ~graph.contains(pairs)
    return pairs[fresh], sims[fresh]


def recover_intra_edges(z, subsets: ConfidentSubsets, graph: UndirectedGraph, xi: float,
                        num_edges: int | None = None) -> np.ndarray:
    """Top-similarity non-edges inside each confident subset, as canonical pairs.

    ``num_edges`` is the |E| of the budget; it defaults to the current graph's.
    """
    z = np.asarray(z, dtype=np.float64)
    if z.shape[0] != graph.num_nodes:
        raise ValueError(f"embedding has {z.shape[0]} rows, graph has {graph.num_nodes} nodes")
    picked = []
    for nodes in subsets.members:
        budget = recovery_budget(graph.edge_count if num_edges is None else num_edges,
                                 xi, nodes.size, graph.num_nodes)
        if budget == 0 or nodes.size < 2:
            continue
        pairs, sims = _cluster_candidates(z, nodes, graph)
        if pairs.size == 0:
            continue
        order = np.lexsort((pairs[:, 1], pairs[:, 0], -sims))[:budget]
        picked.append(pairs[order])
    if not picked:
        return np.empty((0, 2), dtype=np.int64)
    return canonical_pairs(np.concatenate(picked))


def remove_inter_edges(
    z,
    labels,
    graph: UndirectedGraph,
    eta: float,
    inter_only_window: bool = False,
) -> np.ndarray:
    """Lowest-similarity existing edges that join different clusters.

    By default the bottom ``floor(eta*|E|)`` window is taken over all edges and
    then filtered to inter-cluster ones. With ``inter_only_window`` the window
    is taken among inter-cluster edges only.
    """
    z = np.asarray(z, dtype=np.float64)
    labels = np.asarray(labels)
    m = _floor(eta * graph.edge_count)
    if m == 0:
        return np.empty((0, 2), dtype=np.int64)
    e = graph.edges
    sims = kernels.pair_dots(z, e[:, 0], e[:, 1])
    inter = labels[e[:, 0]] != labels[e[:, 1]]
    if inter_only_window:
        e, sims = e[inter], sims[inter]
        order = np.lexsort((e[:, 1], e[:, 0], sims))[:m]
        return e[order].copy()
    order = np.lexsort((e[:, 1], e[:, 0], sims))[:m]
    chosen = order[inter[order]]
    return canonical_pairs(e[chosen])


def plan_delta(recovered, removed) -> EdgeDelta:
    rc = canonical_pairs(recovered)
    rm = canonical_pairs(removed)
    if rc.size and rm.size:
        n = int(max(rc.max(), rm.max())) + 1
        krc = rc[:, 0] * n + rc[:, 1]
        krm = rm[:, 0] * n + rm[:, 1]
        rc, rm = rc[~np.isin(krc, krm)], rm[~np.isin(krm, krc)]
    return EdgeDelta(rc, rm)


def structure_round(z, q, graph: UndirectedGraph, gamma: float, params: SparsifyParams,
                    inter_only_window: bool = False, budget_edges: int | None = None) -> EdgeDelta:
    """One rewrite of the edge set from the current embedding and soft assignment."""
    subsets = top_confident(q, gamma)
    rc = recover_intra_edges(z, subsets, graph, params.xi, budget_edges)
    rm = remove_inter_edges(z, hard_labels(q), graph, params.eta, inter_only_window)
    return plan_delta(rc, rm)
