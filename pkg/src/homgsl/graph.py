"""Immutable undirected graphs, edge deltas and edge homophily."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class GraphError(ValueError):
    pass


def canonical_pairs(pairs) -> np.ndarray:
    """Return unique (min, max) pairs as an (m, 2) int64 array sorted lexicographically.

    Self-pairs are dropped.
    """
    arr = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    if arr.size == 0:
        return np.empty((0, 2), dtype=np.int64)
    arr = np.sort(arr, axis=1)
    arr = arr[arr[:, 0] != arr[:, 1]]
    if arr.size == 0:
        return np.empty((0, 2), dtype=np.int64)
    return np.unique(arr, axis=0)


def _pair_keys(edges: np.ndarray, n: int) -> np.ndarray:
    return edges[:, 0] * np.int64(n) + edges[:, 1]


@dataclass(frozen=True, eq=False)
class UndirectedGraph:
    """Simple undirected graph stored as canonical edges plus symmetric CSR.

    ``edges`` holds each unordered pair once as (min, max), sorted
    lexicographically. ``indptr``/``indices`` give the sorted neighbor list of
    every node. Instances are never mutated; use :func:`apply_edge_delta`.
    """

    num_nodes: int
    edges: np.ndarray
    indptr: np.ndarray = field(repr=False)
    indices: np.ndarray = field(repr=False)

    @classmethod
    def from_edges(cls, num_nodes: int, pairs=()) -> "UndirectedGraph":
        n = int(num_nodes)
        if n < 0:
            raise GraphError("num_nodes must be non-negative")
        edges = canonical_pairs(pairs)
        if edges.size and (edges.min() < 0 or edges.max() >= n):
            bad = edges[(edges < 0).any(1) | (edges >= n).any(1)][0]
            raise GraphError(f"edge {tuple(int(x) for x in bad)} out of range for {n} nodes")
        return cls._from_canonical(n, edges)

    @classmethod
    def _from_canonical(cls, n: int, edges: np.ndarray) -> "UndirectedGraph":
        src = np.concatenate([edges[:, 0], edges[:, 1]])
        dst = np.concatenate([edges[:, 1], edges[:, 0]])
        order = np.lexsort((dst, src))
        src, dst = src[order], dst[order]
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(np.bincount(src, minlength=n), out=indptr[1:])
        edges = np.ascontiguousarray(edges, dtype=np.int64)
        edges.setflags(write=False)
        dst = np.ascontiguousarray(dst, dtype=np.int64)
        dst.setflags(write=False)
        indptr.setflags(write=False)
        return cls(n, edges, indptr, dst)

    @property
    def edge_count(self) -> int:
        return int(self.edges.shape[0])

    def neighbors(self, i: int) -> np.ndarray:
        return self.indices[self.indptr[i]:self.indptr[i + 1]]

    def has_edge(self, i: int, j: int) -> bool:
        nb = self.neighbors(i)
        p = np.searchsorted(nb, j)
        return bool(p < nb.size and nb[p] == j)

    def contains(self, pairs: np.ndarray) -> np.ndarray:
        """Vectorised membership test for canonical (min, max) pairs."""
        pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
        if self.edge_count == 0 or pairs.size == 0:
            return np.zeros(pairs.shape[0], dtype=bool)
        keys = _pair_keys(self.edges, self.num_nodes)
        q = _pair_keys(pairs, self.num_nodes)
        p = np.searchsorted(keys, q)
        p = np.minimum(p, keys.size - 1)
        return keys[p] == q

    def adjacency(self, self_loops: bool = False):
        """Symmetric 0/1 adjacency as a scipy CSR matrix."""
        import scipy.sparse as sp

        data = np.ones(self.indices.size, dtype=np.float64)
        a = sp.csr_matrix((data, self.indices, self.indptr), shape=(self.num_nodes, self.num_nodes))
        if self_loops:
            a = (a + sp.identity(self.num_nodes, format="csr")).tocsr()
        return a

    def dense_adjacency(self) -> np.ndarray:
        a = np.zeros((self.num_nodes, self.num_nodes))
        a[self.edges[:, 0], self.edges[:, 1]] = 1.0
        a[self.edges[:, 1], self.edges[:, 0]] = 1.0
        return a

    def __eq__(self, other) -> bool:
        if not isinstance(other, UndirectedGraph):
            return NotImplemented
        return self.num_nodes == other.num_nodes and np.array_equal(self.edges, other.edges)

    __hash__ = None


@dataclass(frozen=True, eq=False)
class EdgeDelta:
    """Pairs to add (``recovered``) and delete (``removed``), both canonical arrays."""

    recovered: np.ndarray
    removed: np.ndarray

    @classmethod
    def of(cls, recovered=(), removed=()) -> "EdgeDelta":
        return cls(canonical_pairs(recovered), canonical_pairs(removed))

    @property
    def is_empty(self) -> bool:
        return self.recovered.size == 0 and self.removed.size == 0

    def inverse(self) -> "EdgeDelta":
        return EdgeDelta(self.removed, self.recovered)

    def check(self, graph: UndirectedGraph) -> None:
        """Raise GraphError unless the delta is valid against ``graph``."""
        n = graph.num_nodes
        for name, arr in (("recovered", self.recovered), ("removed", self.removed)):
            if arr.size == 0:
                continue
            if arr.min() < 0 or arr.max() >= n:
                raise GraphError(f"{name} pair references a node outside [0, {n})")
            if np.any(arr[:, 0] == arr[:, 1]):
                raise GraphError(f"{name} contains a self-pair")
        if self.recovered.size and self.removed.size:
            both = np.intersect1d(_pair_keys(self.recovered, n), _pair_keys(self.removed, n))
            if both.size:
                raise GraphError("recovered and removed overlap")
        if self.recovered.size and graph.contains(self.recovered).any():
            raise GraphError("recovered pair is already an edge")
        if self.removed.size and not graph.contains(self.removed).all():
            raise GraphError("removed pair is not an edge")


def edge_homophily(graph: UndirectedGraph, labels) -> float:
    """Fraction of undirected edges whose endpoints share a label."""
    labels = np.asarray(labels)
    if labels.shape[0] != graph.num_nodes:
        raise GraphError(f"labels have length {labels.shape[0]}, graph has {graph.num_nodes} nodes")
    if graph.edge_count == 0:
        raise GraphError("graph has no edges; homophily is undefined")
    e = graph.edges
    return float(np.mean(labels[e[:, 0]] == labels[e[:, 1]]))


def apply_edge_delta(graph: UndirectedGraph, delta: EdgeDelta) -> UndirectedGraph:
    delta.check(graph)
    if delta.is_empty:
        return graph
    n = graph.num_nodes
    keep = np.ones(graph.edge_count, dtype=bool)
    if delta.removed.size:
        keep = ~np.isin(_pair_keys(graph.edges, n), _pair_keys(delta.removed, n))
    edges = np.concatenate([graph.edges[keep], delta.recovered])
    edges = edges[np.lexsort((edges[:, 1], edges[:, 0]))]
    return UndirectedGraph._from_canonical(n, edges)


def degrees(graph: UndirectedGraph) -> np.ndarray:
    return np.diff(graph.indptr)
