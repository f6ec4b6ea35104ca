"""Hot numeric kernels.

Each kernel has a numba version and a pure-numpy version with the same
signature. The numba path is used when numba imports cleanly and the
environment variable ``HOMGSL_NUMBA`` is not set to ``0``; tests compare both
paths against each other. ``HOLE_THREADS`` caps the numba thread pool.
"""
from __future__ import annotations

import os

import numpy as np

try:
    import numba
    from numba import njit, prange
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
else:
    # probing an outdated TBB only produces a warning; try OpenMP first
    if "NUMBA_THREADING_LAYER_PRIORITY" not in os.environ:
        numba.config.THREADING_LAYER_PRIORITY = ["omp", "tbb", "workqueue"]

_WANT_NUMBA = os.environ.get("HOMGSL_NUMBA", "1").strip().lower() not in ("0", "false", "no", "off")
HAVE_NUMBA = numba is not None
USE_NUMBA = HAVE_NUMBA and _WANT_NUMBA


def set_threads(n: int | None = None) -> None:
    """Cap internal parallelism (numba pool). ``None`` reads ``HOLE_THREADS``."""
    if n is None:
        raw = os.environ.get("HOLE_THREADS")
        if not raw:
            return
        n = int(raw)
    if HAVE_NUMBA:
        numba.set_num_threads(max(1, min(int(n), numba.config.NUMBA_NUM_THREADS)))


# ---------------------------------------------------------------------------
# numpy reference implementations
# ---------------------------------------------------------------------------

def np_spmm(indptr, indices, data, x):
    """out = M @ x for M in CSR form, rows accumulated in stored order."""
    n = indptr.shape[0] - 1
    out = np.zeros((n, x.shape[1]), dtype=np.float64)
    counts = np.diff(indptr)
    rows = np.repeat(np.arange(n), counts)
    contrib = data[:, None] * x[indices]
    np.add.at(out, rows, contrib)
    return out


def np_sq_dists(z, c):
    diff = z[:, None, :] - c[None, :, :]
    return np.einsum("nkd,nkd->nk", diff, diff)


def np_pair_dots(z, u, v):
    return np.einsum("ij,ij->i", z[u], z[v])


def np_nearest(z, c):
    d = np_sq_dists(z, c)
    lab = np.argmin(d, axis=1)
    return lab, d[np.arange(z.shape[0]), lab]


# ---------------------------------------------------------------------------
# numba implementations
# ---------------------------------------------------------------------------

if HAVE_NUMBA:

    @njit(parallel=True, cache=True)
    def nb_spmm(indptr, indices, data, x):
        n = indptr.shape[0] - 1
        f = x.shape[1]
        out = np.zeros((n, f), dtype=np.float64)
        for i in prange(n):
            for p in range(indptr[i], indptr[i + 1]):
                j = indices[p]
                w = data[p]
                for c in range(f):
                    out[i, c] += w * x[j, c]
        return out

    @njit(parallel=True, cache=True)
    def nb_sq_dists(z, c):
        n, d = z.shape
        k = c.shape[0]
        out = np.empty((n, k), dtype=np.float64)
        for i in prange(n):
            for j in range(k):
                s = 0.0
                for t in range(d):
                    diff = z[i, t] - c[j, t]
                    s += diff * diff
                out[i, j] = s
        return out

    @njit(parallel=True, cache=True)
    def nb_pair_dots(z, u, v):
        m = u.shape[0]
        d = z.shape[1]
        out = np.empty(m, dtype=np.float64)
        for e in prange(m):
            a = u[e]
            b = v[e]
            s = 0.0
            for t in range(d):
                s += z[a, t] * z[b, t]
            out[e] = s
        return out

    @njit(parallel=True, cache=True)
    def nb_nearest(z, c):
        n, d = z.shape
        k = c.shape[0]
        lab = np.empty(n, dtype=np.int64)
        best = np.empty(n, dtype=np.float64)
        for i in prange(n):
            bi = 0
            bd = np.inf
            for j in range(k):
                s = 0.0
                for t in range(d):
                    diff = z[i, t] - c[j, t]
                    s += diff * diff
                if s < bd:
                    bd = s
                    bi = j
            lab[i] = bi
            best[i] = bd
        return lab, best

else:  # pragma: no cover
    nb_spmm = nb_sq_dists = nb_pair_dots = nb_nearest = None


def _pick(nb_fn, np_fn):
    return nb_fn if USE_NUMBA else np_fn


def _f64(a):
    return np.ascontiguousarray(a, dtype=np.float64)


def _i64(a):
    return np.ascontiguousarray(a, dtype=np.int64)


def spmm(indptr, indices, data, x):
    return _pick(nb_spmm, np_spmm)(_i64(indptr), _i64(indices), _f64(data), _f64(x))


def sq_dists(z, c):
    return _pick(nb_sq_dists, np_sq_dists)(_f64(z), _f64(c))


def pair_dots(z, u, v):
    return _pick(nb_pair_dots, np_pair_dots)(_f64(z), _i64(u), _i64(v))


def nearest(z, c):
    """Index of the closest row of ``c`` for each row of ``z`` (lowest index on ties)."""
    return _pick(nb_nearest, np_nearest)(_f64(z), _f64(c))
