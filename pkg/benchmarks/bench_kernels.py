#!/usr/bin/env python3
"""Benchmark the compiled kernels against the pure-NumPy fallback.

Times the two hot primitives (RK4 matrix-ODE sweep, fixed-point interval
iteration) and one end-to-end solve, for both backends.  Run from the
repo root:

    python benchmarks/bench_kernels.py
"""

from __future__ import annotations

import time

import numpy as np

from idepcag import _kernels_py

try:
    from idepcag import _kernels

    HAVE_COMPILED = True
except ImportError:
    _kernels = None
    HAVE_COMPILED = False


def time_call(fn, *args, repeats=5):
    best = np.inf
    out = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best, out


def bench_propagate(n=3, steps=4096):
    rng = np.random.default_rng(1)
    a_grid = 0.3 * rng.standard_normal((2 * steps + 1, n, n))
    hs = np.full(steps, 1.0 / steps)
    y0 = np.eye(n)
    outs = np.array([steps], dtype=np.int64)
    rows = []
    t_py, ref = time_call(_kernels_py.propagate_matrix_ode, a_grid, hs, y0, False, outs)
    rows.append(("python", t_py))
    if HAVE_COMPILED:
        t_c, got = time_call(_kernels.propagate_matrix_ode, a_grid, hs, y0, False, outs)
        assert np.allclose(ref, got, atol=1e-12), "backend mismatch"
        rows.append(("compiled", t_c))
    return rows


def bench_picard(n=3, m=2048):
    rng = np.random.default_rng(2)
    a_grid = 0.2 * rng.standard_normal((m, n, n))
    b_grid = 0.2 * rng.standard_normal((m, n, n))
    f_grid = rng.standard_normal((m, n))
    y0 = rng.standard_normal(n)
    args = (a_grid, b_grid, f_grid, y0, 1.0 / (m - 1), m // 2, 0.3, 1e-12, 200)
    rows = []
    t_py, ref = time_call(_kernels_py.picard_iterate, *args)
    rows.append(("python", t_py))
    if HAVE_COMPILED:
        t_c, got = time_call(_kernels.picard_iterate, *args)
        assert np.allclose(ref[0], got[0], atol=1e-12), "backend mismatch"
        rows.append(("compiled", t_c))
    return rows


def bench_end_to_end():
    import os
    import subprocess
    import sys

    code = (
        "import time, numpy as np\n"
        "from idepcag import *\n"
        "p = build(UniformGrid(h=0.5, beta=0.4), (0.0, 5.0))\n"
        "sys_ = LinearSystem(\n"
        "    A=MatrixFunction([['0.3*sin(t)', '0.1'], ['-0.1', '0.2*cos(t)']]),\n"
        "    B=MatrixFunction([['0.2', '0.05*cos(t)'], ['0.0', '0.15']]),\n"
        "    F=VectorFunction(['0.4*cos(t)', '0.2']),\n"
        "    impulses=ImpulseSequence.constant(C=[[0.1, 0.0], [0.05, -0.1]], D=[0.1, -0.1], n=2),\n"
        ")\n"
        "solver = VopSolver(IVP(system=sys_, partition=p, tau=0.0, y0=[1.0, -0.5]))\n"
        "t0 = time.perf_counter()\n"
        "solver.sample_trajectory(np.linspace(0.0, 5.0, 200))\n"
        "print(time.perf_counter() - t0)\n"
    )
    rows = []
    for backend in ("python", "compiled") if HAVE_COMPILED else ("python",):
        env = dict(os.environ, IDEPCAG_BACKEND=backend)
        out = subprocess.run(
            [sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True
        )
        rows.append((backend, float(out.stdout.strip())))
    return rows


def report(title, rows):
    print(f"\n{title}")
    base = dict(rows).get("python")
    for name, t in rows:
        speedup = f"  ({base / t:.1f}x vs python)" if name != "python" and base else ""
        print(f"  {name:9s} {t * 1e3:9.2f} ms{speedup}")


def main():
    if not HAVE_COMPILED:
        print("compiled extension not available; benchmarking the fallback only")
    report("RK4 matrix-ODE sweep (n=3, 4096 steps)", bench_propagate())
    report("fixed-point interval iteration (n=3, m=2048)", bench_picard())
    report("end-to-end trajectory (200 samples, 20 intervals)", bench_end_to_end())


if __name__ == "__main__":
    main()
