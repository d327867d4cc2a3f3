"""Benchmark the compiled chain kernels against the pure-python fallback.

Usage: python benchmarks/bench_kernels.py [--iters N] [--repeat R]
"""
import argparse
import time

import numpy as np

from iomcmc._kernels import _purepy

try:
    from iomcmc._kernels import _core
except ImportError:
    _core = None


def bench_pcn(mod, n_iter, k=20, m=4096, seed=0):
    rng = np.random.default_rng(seed)
    W = rng.normal(size=(m, k))
    c = rng.normal(size=m)
    g = rng.normal(size=m)
    s = rng.normal(size=m) * 0.3
    z = rng.standard_normal(k)
    b = W @ z + c
    normals = rng.standard_normal((n_iter, k))
    log_unifs = np.log(rng.random(n_iter))
    out_loglam = np.empty(n_iter)
    out_accept = np.zeros(n_iter, dtype=np.uint8)
    t0 = time.perf_counter()
    mod.pcn_dense_chain(W, c, g, s, 4.0, 0.1, z, b, normals, log_unifs, out_loglam, out_accept)
    return time.perf_counter() - t0


def bench_lumpy(mod, n_iter, n=6, grid=64, seed=0):
    rng = np.random.default_rng(seed)
    centers = rng.uniform(2.0, grid - 2.0, size=(n, 2))
    xs = np.arange(grid) + 0.5
    ys = np.arange(grid) + 0.5
    pref, inv2we2 = 32.94, 1.0 / (2.0 * 8.123)
    b = np.zeros(grid * grid)
    for cx, cy in centers:
        b += pref * np.outer(
            np.exp(-((xs - cx) ** 2) * inv2we2), np.exp(-((ys - cy) ** 2) * inv2we2)
        ).ravel()
    g = b + rng.normal(0.0, 20.0, size=b.size)
    s = rng.normal(size=b.size) * 0.1
    lump_idx = rng.integers(0, n, n_iter).astype(np.int64)
    steps = rng.normal(0.0, 1.0, size=(n_iter, 2))
    log_unifs = np.log(rng.random(n_iter))
    out_loglam = np.empty(n_iter)
    out_accept = np.zeros(n_iter, dtype=np.uint8)
    t0 = time.perf_counter()
    mod.lumpy_walk_chain(
        centers, b, g, s, xs, ys, pref, inv2we2, 0.0025, float(grid), float(grid),
        lump_idx, steps, log_unifs, out_loglam, out_accept,
    )
    return time.perf_counter() - t0


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--iters", type=int, default=20000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    backends = [("python", _purepy)]
    if _core is not None:
        backends.append(("cython", _core))

    for label, fn in [("pcn_dense_chain", bench_pcn), ("lumpy_walk_chain", bench_lumpy)]:
        print(f"\n{label} ({args.iters} iterations, best of {args.repeat}):")
        times = {}
        for name, mod in backends:
            best = min(fn(mod, args.iters) for _ in range(args.repeat))
            times[name] = best
            rate = args.iters / best
            print(f"  {name:8s} {best * 1e3:9.1f} ms   {rate:10.0f} it/s")
        if "cython" in times:
            print(f"  speedup  {times['python'] / times['cython']:.1f}x")


if __name__ == "__main__":
    main()
