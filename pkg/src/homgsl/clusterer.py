"""Self-training clustering head: k-means++ init, Student's t soft assignment,
sharpened target distribution, KL loss with closed-form gradients."""
from __future__ import annotations

import numpy as np

from . import kernels
from .encoder import DivergenceError


def _kmeans_pp(z: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = z.shape[0]
    chosen = [int(rng.integers(n))]
    closest = kernels.sq_dists(z, z[chosen])[:, 0]
    for _ in range(1, k):
        total = closest.sum()
        if total > 0:
            idx = int(rng.choice(n, p=closest / total))
        else:
            # every remaining point coincides with a center
            free = np.setdiff1d(np.arange(n), chosen)
            idx = int(rng.choice(free))
        chosen.append(idx)
        closest = np.minimum(closest, kernels.sq_dists(z, z[idx:idx + 1])[:, 0])
    return z[chosen].copy()


def _lloyd(z: np.ndarray, centers: np.ndarray, max_iter: int, tol: float):
    k = centers.shape[0]
    for _ in range(max_iter):
        lab, dist = kernels.nearest(z, centers)
        counts = np.bincount(lab, minlength=k)
        new = np.zeros_like(centers)
        np.add.at(new, lab, z)
        for j in np.flatnonzero(counts == 0):
            # re-seed an empty cluster from the point farthest from its center
            far = int(np.argmax(dist))
            new[j] = z[far]
            counts[j] = 1
            dist[far] = -1.0
        nonempty = counts > 0
        new[nonempty] /= counts[nonempty, None]
        shift = np.sqrt(((new - centers) ** 2).sum(1)).max()
        centers = new
        if shift < tol:
            break
    lab, dist = kernels.nearest(z, centers)
    return centers, float(dist.sum())


def kmeans_init(
    z: np.ndarray,
    k: int,
    seed: int = 0,
    n_init: int = 10,
    max_iter: int = 300,
    tol: float = 1e-6,
) -> np.ndarray:
    """K-means++ seeding followed by Lloyd iterations; best of ``n_init`` restarts by inertia."""
    z = np.ascontiguousarray(z, dtype=np.float64)
    n = z.shape[0]
    if k < 1:
        raise ValueError("K must be at least 1")
    if k > n:
        raise ValueError(f"K={k} exceeds the number of points ({n})")
    best, best_inertia = None, np.inf
    for child in np.random.SeedSequence(seed).spawn(n_init):
        rng = np.random.default_rng(child)
        centers, inertia = _lloyd(z, _kmeans_pp(z, k, rng), max_iter, tol)
        if inertia < best_inertia:
            best, best_inertia = centers, inertia
    return best


def soft_assign(z: np.ndarray, centers: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=np.float64)
    centers = np.asarray(centers, dtype=np.float64)
    if z.shape[1] != centers.shape[1]:
        raise ValueError(f"embedding dim {z.shape[1]} != center dim {centers.shape[1]}")
    kern = 1.0 / (1.0 + kernels.sq_dists(z, centers))
    return kern / kern.sum(1, keepdims=True)


def target_distribution(q: np.ndarray) -> np.ndarray:
    q = np.asarray(q, dtype=np.float64)
    w = q * q / q.sum(0)
    return w / w.sum(1, keepdims=True)


def kl_loss_and_grads(p, q, z, centers):
    """``sum_ik p log(p/q)`` with P held fixed; returns ``(loss, dZ, dMu)``."""
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    z = np.asarray(z, dtype=np.float64)
    centers = np.asarray(centers, dtype=np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(p > 0, p * (np.log(p) - np.log(q)), 0.0)
    loss = float(terms.sum())
    if not np.isfinite(loss):
        raise DivergenceError("KL loss is not finite")
    kern = 1.0 / (1.0 + kernels.sq_dists(z, centers))
    coef = 2.0 * kern * (p - q)  # (N, K)
    # sum_k coef_ik (z_i - mu_k)
    dz = coef.sum(1, keepdims=True) * z - coef @ centers
    dmu = -(coef.T @ z - coef.sum(0)[:, None] * centers)
    return loss, dz, dmu


def hard_labels(q: np.ndarray) -> np.ndarray:
    return np.argmax(np.asarray(q), axis=1).astype(np.int64)
