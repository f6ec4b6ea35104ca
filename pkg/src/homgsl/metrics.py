"""External clustering metrics: ACC (optimal matching), NMI, ARI, purity."""
from __future__ import annotations

import numpy as np
from scipy.optimize import linear_sum_assignment


def contingency(pred, truth) -> np.ndarray:
    """Count matrix with predicted clusters as rows and true classes as columns."""
    pred = np.asarray(pred)
    truth = np.asarray(truth)
    if pred.shape != truth.shape:
        raise ValueError(f"length mismatch: {pred.shape[0]} predictions vs {truth.shape[0]} labels")
    _, p = np.unique(pred, return_inverse=True)
    _, t = np.unique(truth, return_inverse=True)
    table = np.zeros((p.max() + 1 if p.size else 0, t.max() + 1 if t.size else 0), dtype=np.int64)
    np.add.at(table, (p, t), 1)
    return table


def accuracy(pred, truth) -> float:
    table = contingency(pred, truth)
    n = table.sum()
    size = max(table.shape)
    square = np.zeros((size, size), dtype=np.int64)
    square[:table.shape[0], :table.shape[1]] = table
    rows, cols = linear_sum_assignment(square, maximize=True)
    return float(square[rows, cols].sum() / n)


def _entropy(counts: np.ndarray, n: int) -> float:
    p = counts[counts > 0] / n
    return float(-(p * np.log(p)).sum())


def nmi(pred, truth, average: str = "arithmetic") -> float:
    table = contingency(pred, truth)
    n = table.sum()
    a, b = table.sum(1), table.sum(0)
    ha, hb = _entropy(a, n), _entropy(b, n)
    if ha == 0.0 or hb == 0.0:
        return 1.0 if ha == hb else 0.0
    nz = table > 0
    pij = table[nz] / n
    outer = np.outer(a, b)[nz] / (n * n)
    mi = float((pij * np.log(pij / outer)).sum())
    if average == "arithmetic":
        denom = 0.5 * (ha + hb)
    elif average == "geometric":
        denom = np.sqrt(ha * hb)
    else:
        raise ValueError(f"unknown NMI average {average!r}")
    return float(min(max(mi / denom, 0.0), 1.0))


def _comb2(x):
    x = np.asarray(x, dtype=np.float64)
    return x * (x - 1.0) / 2.0


def ari(pred, truth) -> float:
    table = contingency(pred, truth)
    n = table.sum()
    sum_ij = _comb2(table).sum()
    sum_a = _comb2(table.sum(1)).sum()
    sum_b = _comb2(table.sum(0)).sum()
    total = _comb2(n)
    expected = sum_a * sum_b / total if total > 0 else 0.0
    max_index = 0.5 * (sum_a + sum_b)
    if max_index == expected:
        same = table.shape[0] == table.shape[1] and np.count_nonzero(table) == table.shape[0]
        return 1.0 if same else 0.0
    return float((sum_ij - expected) / (max_index - expected))


def purity(pred, truth) -> float:
    table = contingency(pred, truth)
    return float(table.max(1).sum() / table.sum())


def evaluate(pred, truth) -> dict:
    return {
        "acc": accuracy(pred, truth),
        "nmi": nmi(pred, truth),
        "ari": ari(pred, truth),
        "purity": purity(pred, truth),
    }
