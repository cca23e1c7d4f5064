"""Time the numba kernels against the pure-numpy fallback.

Usage: python3 benchmarks/bench_kernels.py [--repeat R]

With CRITSYNC_DISABLE_NUMBA=1 (or numba missing) only the numpy column is
measured.  Each row also reports the max abs difference between backends.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from critsync import _accel
from critsync.boxes import f_system
from critsync.params import validate


def _best_of(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def _cases(rng):
    params = validate({"n": 3, "N": 3, "s": 0.5, "eta": [1.0, 1.3, 1.7], "alpha": 0.05, "p": 1.0})
    sys3 = f_system(params)
    args = (sys3.self_coef, sys3.self_exp, sys3.C, sys3.EI, sys3.EJ, sys3.const)

    logk = rng.uniform(-8.0, 1.0, size=(200_000, 3))
    yield "monomial_eval 200k x 3", lambda b: b.monomial_eval(logk, *args)

    m = 200_000
    c = rng.uniform(0.1, 3.0, m)
    tau = rng.uniform(0.5, 5.0, m)
    yield "invert_monotone 200k", lambda b: b.invert_monotone(0.5, c, tau, 1e-12, 1e6, True)

    axes = [np.linspace(-8.0, 1.0, 120) for _ in range(3)]
    yield "grid_vertex_values 120^3", lambda b: b.grid_vertex_values(axes, *args)

    vals = _accel.numpy_backend.grid_vertex_values(axes, *args)
    yield "flag_cells 120^3", lambda b: b.flag_cells(vals, 0.05)


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ns = ap.parse_args(argv)

    rng = np.random.default_rng(0)
    nb = None if _accel.BACKEND_NAME == "numpy" else _accel.numba_backend
    print(f"active backend: {_accel.BACKEND_NAME}")
    print(f"{'kernel':28s} {'numpy [ms]':>11s} {'numba [ms]':>11s} {'speedup':>8s} {'max diff':>10s}")
    for name, call in _cases(rng):
        t_np, out_np = _best_of(lambda: call(_accel.numpy_backend), ns.repeat)
        if nb is None:
            print(f"{name:28s} {t_np * 1e3:11.2f} {'-':>11s} {'-':>8s} {'-':>10s}")
            continue
        call(nb)  # compile outside the timed region
        t_nb, out_nb = _best_of(lambda: call(nb), ns.repeat)
        a, b = np.asarray(out_np), np.asarray(out_nb)
        diff = float(np.max(np.abs(a - b))) if a.shape == b.shape and a.dtype != bool else float(not np.array_equal(a, b))
        print(f"{name:28s} {t_np * 1e3:11.2f} {t_nb * 1e3:11.2f} {t_np / t_nb:7.1f}x {diff:10.2e}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
