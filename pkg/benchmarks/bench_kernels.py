"""Time the numba kernels against their numpy fallbacks.

    python benchmarks/bench_kernels.py [--nodes 3000] [--repeat 5]
"""
import argparse
import time

import numpy as np
import scipy.sparse as sp

from homgsl import kernels


def best_of(fn, repeat):
    fn()  # first call compiles or warms caches
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--nodes", type=int, default=3000)
    ap.add_argument("--dim", type=int, default=500)
    ap.add_argument("--clusters", type=int, default=7)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if not kernels.HAVE_NUMBA:
        raise SystemExit("numba is not importable; nothing to compare")
    kernels.set_threads()
    rng = np.random.default_rng(0)
    n, d = args.nodes, args.dim
    adj = sp.random(n, n, density=8.0 / n, random_state=np.random.RandomState(0), format="csr")
    adj = (adj + adj.T).tocsr()
    ip, ix, dat = adj.indptr.astype(np.int64), adj.indices.astype(np.int64), adj.data
    z = rng.normal(size=(n, d))
    c = rng.normal(size=(args.clusters, d))
    u = rng.integers(0, n, 5 * n)
    v = rng.integers(0, n, 5 * n)
    cases = {
        "spmm": (lambda: kernels.nb_spmm(ip, ix, dat, z), lambda: kernels.np_spmm(ip, ix, dat, z)),
        "sq_dists": (lambda: kernels.nb_sq_dists(z, c), lambda: kernels.np_sq_dists(z, c)),
        "pair_dots": (lambda: kernels.nb_pair_dots(z, u, v), lambda: kernels.np_pair_dots(z, u, v)),
        "nearest": (lambda: kernels.nb_nearest(z, c), lambda: kernels.np_nearest(z, c)),
    }
    print(f"N={n} d={d} K={args.clusters} nnz={adj.nnz} threads={kernels.numba.get_num_threads()}")
    print(f"{'kernel':<10} {'numba ms':>10} {'numpy ms':>10} {'speedup':>8}")
    for name, (fast, slow) in cases.items():
        a = best_of(fast, args.repeat) * 1e3
        b = best_of(slow, args.repeat) * 1e3
        print(f"{name:<10} {a:>10.2f} {b:>10.2f} {b / a:>8.1f}")


if __name__ == "__main__":
    main()
