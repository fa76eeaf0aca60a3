#!/usr/bin/env python3
"""Benchmark the jitted kernels against their numpy fallbacks.

Run directly:  python3 benchmarks/bench_kernels.py [N]

The same comparison can be forced package-wide with DHLAB_NO_NUMBA=1.
"""
import sys
import time

import numpy as np

from dhlab import _kernels
from dhlab.catalog import catalog_get
from dhlab.pushforward import GridSpec, dh_monte_carlo


def timeit(fn, *args, repeats=5):
    best = float("inf")
    out = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best, out


def main():
    n = int(sys.argv[1]) if len(sys.argv) > 1 else 5_000_000
    rng = np.random.default_rng(0)
    idx = rng.integers(0, 4096, size=n)
    wts = rng.random(n)

    rows = []
    if _kernels.HAVE_NUMBA:
        _kernels.hist_accumulate_numba(idx[:10], wts[:10], 4096)  # compile
        t_nb, out_nb = timeit(_kernels.hist_accumulate_numba, idx, wts, 4096)
        rows.append(("hist_accumulate[numba]", t_nb))
    t_np, out_np = timeit(_kernels.hist_accumulate_numpy, idx, wts, 4096)
    rows.append(("hist_accumulate[numpy]", t_np))
    if _kernels.HAVE_NUMBA:
        same = all(np.array_equal(a, b) for a, b in zip(out_nb, out_np))
        rows.append(("hist paths bitwise equal", same))

    x = rng.random(n) * 2.0 - 0.5
    bp = np.array([0.0, 0.4, 1.0])
    coef = np.array([[1.0, 2.0, -0.5], [0.2, 0.0, 1.0]])
    if _kernels.HAVE_NUMBA:
        _kernels.piecewise_horner_numba(x[:10], bp, coef, 3)
        t_nb, y_nb = timeit(_kernels.piecewise_horner_numba, x, bp, coef, 3)
        rows.append(("piecewise_horner[numba]", t_nb))
    t_np, y_np = timeit(_kernels.piecewise_horner_numpy, x, bp, coef, 3)
    rows.append(("piecewise_horner[numpy]", t_np))
    if _kernels.HAVE_NUMBA:
        rows.append(("horner paths bitwise equal", np.array_equal(y_nb, y_np)))

    # end-to-end histogram pipeline on the catalog's hopf model
    model = catalog_get("hopf")
    grid = GridSpec.build([(0.1, 1.0)], 64)
    dh_monte_carlo(model, grid, 10_000, seed=1)  # warm up
    t_e2e, _ = timeit(lambda: dh_monte_carlo(model, grid, 1_000_000, seed=1),
                      repeats=3)
    active = "numba" if _kernels.HAVE_NUMBA else "numpy"
    rows.append((f"dh_monte_carlo 1e6 [{active} active]", t_e2e))

    width = max(len(r[0]) for r in rows) + 2
    print(f"kernel benchmark, n={n}")
    for name, val in rows:
        if isinstance(val, float):
            print(f"  {name:<{width}} {val * 1e3:9.2f} ms")
        else:
            print(f"  {name:<{width}} {val}")


if __name__ == "__main__":
    main()
