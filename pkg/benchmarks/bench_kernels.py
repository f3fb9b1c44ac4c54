"""Timing comparison of the accelerated kernels vs their numpy fallbacks.

Run:  python3 benchmarks/bench_kernels.py [--repeats 50]

The same module-level flag that selects the runtime backend
(ITEMRL_NO_NUMBA) does not matter here: both per-backend implementations
are invoked directly so one process can time the pair side by side.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from itemrl import kernels


def _time(fn, repeats: int) -> float:
    fn()  # warmup (and numba compilation)
    t0 = time.perf_counter()
    for _ in range(repeats):
        fn()
    return (time.perf_counter() - t0) / repeats


def bench_sequential_topk(repeats: int):
    rng = np.random.default_rng(0)
    B, N, K = 64, 1000, 6
    probs = rng.random((B, N))
    probs /= probs.sum(axis=1, keepdims=True)
    uniforms = rng.random((B, K))
    out = np.empty((B, K), dtype=np.int64)

    rows = [("sequential_topk numpy",
             _time(lambda: kernels._sequential_topk_numpy(probs, uniforms, out),
                   repeats))]
    if kernels.HAVE_NUMBA:
        rows.append(("sequential_topk numba",
                     _time(lambda: kernels._sequential_topk_numba(probs, uniforms, out),
                           repeats)))
    return rows


def bench_adam(repeats: int):
    rng = np.random.default_rng(1)
    n = 70_000  # roughly one agent's parameter count
    p = rng.standard_normal(n)
    g = rng.standard_normal(n)
    m = np.zeros(n)
    v = np.zeros(n)

    rows = [("adam_update numpy",
             _time(lambda: kernels._adam_numpy(p, g, m, v, 1e-3, 0.9, 0.999,
                                               1e-8, 0.1, 0.001), repeats))]
    if kernels.HAVE_NUMBA:
        rows.append(("adam_update numba",
                     _time(lambda: kernels._adam_numba(p, g, m, v, 1e-3, 0.9,
                                                       0.999, 1e-8, 0.1, 0.001),
                           repeats)))
    return rows


def bench_scatter(repeats: int):
    rng = np.random.default_rng(2)
    N, D = 1000, 32
    R = 128 * 120  # one training batch worth of history rows
    ids = rng.integers(0, N, size=R)
    dvecs = rng.standard_normal((R, D))
    grad = np.zeros((N, D))

    rows = [("scatter_rows numpy",
             _time(lambda: kernels._scatter_rows_numpy(grad, ids, dvecs), repeats))]
    if kernels.HAVE_NUMBA:
        rows.append(("scatter_rows numba",
                     _time(lambda: kernels._scatter_rows_numba(grad, ids, dvecs),
                           repeats)))
    return rows


def bench_pooled_scatter(repeats: int):
    rng = np.random.default_rng(3)
    B, H, N, D = 128, 120, 1000, 32
    items = rng.integers(0, N, size=(B, H))
    wc = rng.random((B, H))
    wa = rng.random((B, H))
    dpc = rng.standard_normal((B, D))
    dpa = rng.standard_normal((B, D))
    grad = np.zeros((N, D))

    rows = [("pooled_scatter numpy",
             _time(lambda: kernels._pooled_scatter_numpy(grad, items, wc, wa,
                                                         dpc, dpa), repeats))]
    if kernels.HAVE_NUMBA:
        rows.append(("pooled_scatter numba",
                     _time(lambda: kernels._pooled_scatter_numba(grad, items, wc,
                                                                 wa, dpc, dpa),
                           repeats)))
    return rows


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeats", type=int, default=50)
    args = ap.parse_args()

    if not kernels.HAVE_NUMBA:
        print("note: numba backend unavailable; timing numpy fallbacks only")

    all_rows = []
    for bench in (bench_sequential_topk, bench_adam, bench_scatter,
                  bench_pooled_scatter):
        all_rows.extend(bench(args.repeats))

    width = max(len(name) for name, _ in all_rows)
    print(f"{'kernel':<{width}}  mean time")
    by_kernel: dict[str, dict[str, float]] = {}
    for name, t in all_rows:
        print(f"{name:<{width}}  {t * 1e3:8.3f} ms")
        kernel, backend = name.rsplit(" ", 1)
        by_kernel.setdefault(kernel, {})[backend] = t
    for kernel, times in by_kernel.items():
        if "numba" in times and "numpy" in times:
            print(f"{kernel}: numba speedup x{times['numpy'] / times['numba']:.1f}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
