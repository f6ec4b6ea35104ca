"""Low-pass feature propagation ``(I - kappa * L)^hops @ X``.

``L = I - D^-1/2 (A + I) D^-1/2`` with ``D`` the degree matrix of ``A + I``,
so ``I - kappa * L = (1 - kappa) I + kappa * A_hat``. The operator is applied
one sparse product at a time and never materialized.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .graph import UndirectedGraph


@dataclass(frozen=True)
class FilterSpec:
    kappa: float = 2.0 / 3.0
    hops: int = 1

    def __post_init__(self):
        if not self.kappa > 0:
            raise ValueError(f"kappa must be positive, got {self.kappa}")
        if int(self.hops) != self.hops or self.hops < 0:
            raise ValueError(f"hops must be a non-negative integer, got {self.hops}")


def default_kappa() -> float:
    return 2.0 / 3.0


def normalized_operator(graph: UndirectedGraph):
    """CSR arrays of ``D^-1/2 (A + I) D^-1/2`` with self-loops merged in sorted position."""
    n = graph.num_nodes
    deg = np.diff(graph.indptr).astype(np.float64) + 1.0
    inv_sqrt = 1.0 / np.sqrt(deg)
    counts = np.diff(graph.indptr) + 1
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(counts, out=indptr[1:])
    rows = np.repeat(np.arange(n, dtype=np.int64), np.diff(graph.indptr))
    all_rows = np.concatenate([rows, np.arange(n, dtype=np.int64)])
    all_cols = np.concatenate([graph.indices, np.arange(n, dtype=np.int64)])
    order = np.lexsort((all_cols, all_rows))
    indices = all_cols[order]
    row_of = all_rows[order]
    data = inv_sqrt[row_of] * inv_sqrt[indices]
    return indptr, indices, data


def propagate(graph: UndirectedGraph, x, spec: FilterSpec) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] != graph.num_nodes:
        raise ValueError(f"feature matrix has shape {x.shape}, graph has {graph.num_nodes} nodes")
    h = np.array(x, dtype=np.float64, copy=True)
    if spec.hops == 0:
        return h
    indptr, indices, data = normalized_operator(graph)
    k = float(spec.kappa)
    for _ in range(int(spec.hops)):
        # H <- H - kappa * L H  ==  (1 - kappa) H + kappa * A_hat H
        h = (1.0 - k) * h + k * kernels.spmm(indptr, indices, data, h)
    return h


def dense_filter(graph: UndirectedGraph, spec: FilterSpec) -> np.ndarray:
    """Explicit ``(I - kappa L)^hops``; only for small graphs and tests."""
    n = graph.num_nodes
    a = graph.dense_adjacency() + np.eye(n)
    d = 1.0 / np.sqrt(a.sum(1))
    lap = np.eye(n) - d[:, None] * a * d[None, :]
    return np.linalg.matrix_power(np.eye(n) - spec.kappa * lap, int(spec.hops))
