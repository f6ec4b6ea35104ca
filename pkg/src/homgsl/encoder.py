"""Linear encoder ``Z = H @ W``, adjacency reconstruction loss and Adam."""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .graph import UndirectedGraph

BETA1 = 0.9
BETA2 = 0.999
EPS = 1e-8

# the dense reconstruction path and the N x N similarity blocks grow as N^2
DEFAULT_MAX_NODES = 20_000


class DivergenceError(FloatingPointError):
    """Raised when a loss or gradient stops being finite."""


@dataclass(frozen=True)
class AdamState:
    m: np.ndarray
    v: np.ndarray
    step: int = 0

    @classmethod
    def zeros_like(cls, param: np.ndarray) -> "AdamState":
        return cls(np.zeros_like(param, dtype=np.float64), np.zeros_like(param, dtype=np.float64), 0)


def adam_update(param: np.ndarray, grad: np.ndarray, state: AdamState, lr: float):
    """One bias-corrected Adam step. Returns ``(new_param, new_state)``."""
    grad = np.asarray(grad, dtype=np.float64)
    if grad.shape != param.shape:
        raise ValueError(f"gradient shape {grad.shape} does not match parameter {param.shape}")
    if not np.all(np.isfinite(grad)):
        raise DivergenceError("non-finite gradient passed to Adam")
    t = state.step + 1
    m = BETA1 * state.m + (1.0 - BETA1) * grad
    v = BETA2 * state.v + (1.0 - BETA2) * grad * grad
    m_hat = m / (1.0 - BETA1 ** t)
    v_hat = v / (1.0 - BETA2 ** t)
    new = param - lr * m_hat / (np.sqrt(v_hat) + EPS)
    return new, AdamState(m, v, t)


@dataclass(frozen=True)
class Encoder:
    weights: np.ndarray
    adam: AdamState
    learning_rate: float = 1e-3

    @classmethod
    def init(cls, in_dim: int, out_dim: int, learning_rate: float = 1e-3, seed: int = 0) -> "Encoder":
        """Uniform fan-based init in ``[-sqrt(6/(F+d)), sqrt(6/(F+d))]``."""
        bound = np.sqrt(6.0 / (in_dim + out_dim))
        rng = np.random.default_rng(seed)
        w = rng.uniform(-bound, bound, size=(in_dim, out_dim))
        return cls(w, AdamState.zeros_like(w), float(learning_rate))

    @property
    def shape(self):
        return self.weights.shape


def encode(h: np.ndarray, enc: Encoder) -> np.ndarray:
    h = np.asarray(h, dtype=np.float64)
    if h.ndim != 2 or h.shape[1] != enc.weights.shape[0]:
        raise ValueError(f"features have shape {h.shape}, encoder expects {enc.weights.shape[0]} columns")
    return h @ enc.weights


def reconstruction_target(graph: UndirectedGraph, diag_one: bool = True) -> np.ndarray:
    t = graph.dense_adjacency()
    if diag_one:
        np.fill_diagonal(t, 1.0)
    return t


def reconstruction_loss_and_grad(
    z: np.ndarray,
    target,
    *,
    diag_one: bool = True,
    mean_scale: bool = True,
    max_nodes: int = DEFAULT_MAX_NODES,
):
    """``||Z Z^T - T||_F^2`` (divided by N^2 when ``mean_scale``) and its gradient in Z.

    ``target`` is an UndirectedGraph (T = A, plus the identity when
    ``diag_one``) or a dense target matrix. For a graph target the N x N
    product is never formed::

        ||ZZ^T - T||^2 = ||Z^T Z||^2 - 2 tr(Z^T T Z) + ||T||^2
        grad           = 4 (Z (Z^T Z) - T Z)
    """
    z = np.asarray(z, dtype=np.float64)
    n = z.shape[0]
    if n > max_nodes:
        raise MemoryError(f"{n} nodes exceeds the reconstruction cap of {max_nodes}")
    scale = 1.0 / (n * n) if mean_scale else 1.0
    if isinstance(target, UndirectedGraph):
        if target.num_nodes != n:
            raise ValueError(f"embedding has {n} rows, graph has {target.num_nodes} nodes")
        gram = z.T @ z
        tz = _adjacency_times(target, z)
        if diag_one:
            tz += z
        t_sq = 2.0 * target.edge_count + (n if diag_one else 0)
        loss = (float(np.vdot(gram, gram)) - 2.0 * float(np.vdot(z, tz)) + t_sq) * scale
        loss = max(loss, 0.0)
        dz = (4.0 * scale) * (z @ gram - tz)
    else:
        t = np.asarray(target, dtype=np.float64)
        if t.shape != (n, n):
            raise ValueError(f"target has shape {t.shape}, expected {(n, n)}")
        r = z @ z.T
        r -= t
        loss = float(np.vdot(r, r)) * scale
        # R is symmetric, so d/dZ ||ZZ^T - T||^2 = 4 R Z
        dz = (4.0 * scale) * (r @ z)
    if not np.isfinite(loss):
        raise DivergenceError("reconstruction loss is not finite")
    return loss, dz


def _adjacency_times(graph: UndirectedGraph, z: np.ndarray) -> np.ndarray:
    from . import kernels

    data = np.ones(graph.indices.size, dtype=np.float64)
    return kernels.spmm(graph.indptr, graph.indices, data, z)


def row_normalize(z: np.ndarray):
    """Unit-norm rows and the norms used (zero rows stay zero)."""
    norms = np.linalg.norm(z, axis=1, keepdims=True)
    safe = np.where(norms > 0, norms, 1.0)
    return z / safe, safe


def row_normalize_backward(u: np.ndarray, norms: np.ndarray, grad_u: np.ndarray) -> np.ndarray:
    """Pull a gradient w.r.t. ``u = z / |z|`` back to ``z``."""
    return (grad_u - u * np.sum(grad_u * u, axis=1, keepdims=True)) / norms


NORMALIZATIONS = ("none", "l2", "minmax")


@dataclass(frozen=True)
class _NormCache:
    mode: str
    unit: np.ndarray = None
    norms: np.ndarray = None
    scaled: np.ndarray = None
    span: np.ndarray = None
    lo: np.ndarray = None
    hi: np.ndarray = None


def normalize_embedding(z: np.ndarray, mode: str = "none"):
    """Row-wise embedding normalization. Returns ``(u, cache)``.

    ``l2`` scales rows to unit length. ``minmax`` first maps each row affinely
    onto [0, 1] and then scales it to unit length, so all inner products are
    non-negative.
    """
    z = np.asarray(z, dtype=np.float64)
    if mode == "none":
        return z, _NormCache("none")
    if mode == "l2":
        u, norms = row_normalize(z)
        return u, _NormCache("l2", unit=u, norms=norms)
    if mode == "minmax":
        rows = np.arange(z.shape[0])
        lo = np.argmin(z, axis=1)
        hi = np.argmax(z, axis=1)
        span = (z[rows, hi] - z[rows, lo])[:, None]
        span = np.where(span > 0, span, 1.0)
        scaled = (z - z[rows, lo][:, None]) / span
        u, norms = row_normalize(scaled)
        return u, _NormCache("minmax", u, norms, scaled, span, lo, hi)
    raise ValueError(f"unknown normalization {mode!r}; expected one of {NORMALIZATIONS}")


def normalize_embedding_backward(cache: _NormCache, grad_u: np.ndarray) -> np.ndarray:
    if cache.mode == "none":
        return grad_u
    g = row_normalize_backward(cache.unit, cache.norms, grad_u)
    if cache.mode == "l2":
        return g
    # s = (z - z[lo]) / (z[hi] - z[lo]); the row extremes receive the remainder
    rows = np.arange(g.shape[0])
    dz = g / cache.span
    d_lo = np.sum(g * (cache.scaled - 1.0), axis=1) / cache.span[:, 0]
    d_hi = -np.sum(g * cache.scaled, axis=1) / cache.span[:, 0]
    np.add.at(dz, (rows, cache.lo), d_lo)
    np.add.at(dz, (rows, cache.hi), d_hi)
    return dz


def weight_gradient(h: np.ndarray, dz: np.ndarray) -> np.ndarray:
    h = np.asarray(h, dtype=np.float64)
    dz = np.asarray(dz, dtype=np.float64)
    if h.shape[0] != dz.shape[0]:
        raise ValueError(f"features have {h.shape[0]} rows, gradient has {dz.shape[0]}")
    return h.T @ dz


def adam_step(enc: Encoder, grad: np.ndarray) -> Encoder:
    w, state = adam_update(enc.weights, grad, enc.adam, enc.learning_rate)
    return replace(enc, weights=w, adam=state)
