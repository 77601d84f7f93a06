#!/usr/bin/env python3
"""Benchmark the compiled kernel lane against the pure-python fallback.

Times the two hot kernels (dense LU solve, implicit-Euler descriptor sweep)
and one end-to-end windowed relaxation run per lane. Run from the repo root:

    python3 benchmarks/bench_kernels.py
"""

import time

import numpy as np

import wrcosim as w
from wrcosim import _kernels


def time_call(fn, repeat=5):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_lane(name, mod):
    rng = np.random.default_rng(42)
    n = 9
    a = rng.normal(size=(n, n)) + 3 * n * np.eye(n)
    b = rng.normal(size=n)

    def solve_loop():
        lu, piv = mod.lu_factor(a)
        for _ in range(2000):
            mod.lu_solve(lu, piv, b)

    e = rng.normal(size=(n, n))
    g = rng.normal(size=(n, n)) + 3 * n * np.eye(n)
    dt = 1e-3
    bs = rng.normal(size=(5000, n))
    z0 = np.zeros(n)

    def sweep():
        mod.descriptor_sweep(e / dt, e / dt + g, bs, z0)

    graph = w.load_netlist("circuit_a.net")
    mna, model = w.build_systems(graph)
    cfg = w.WrConfig(t_end=2.0)

    def wr_run():
        with _kernels.use_lane(name):
            w.wr_solve(model, mna, cfg)

    return {
        "lu_solve x2000": time_call(solve_loop),
        "descriptor_sweep 5000 steps": time_call(sweep),
        "wr_solve circuit_a (2 s horizon)": time_call(wr_run, repeat=3),
    }


def main():
    lanes = _kernels.available()
    print(f"available lanes: {', '.join(sorted(lanes))}")
    results = {name: bench_lane(name, mod) for name, mod in sorted(lanes.items())}
    keys = list(next(iter(results.values())))
    width = max(len(k) for k in keys) + 2
    header = "benchmark".ljust(width) + "".join(f"{n:>14}" for n in sorted(results))
    if len(results) == 2:
        header += f"{'speedup':>10}"
    print(header)
    for k in keys:
        row = k.ljust(width)
        vals = [results[n][k] for n in sorted(results)]
        row += "".join(f"{v * 1e3:>11.2f} ms" for v in vals)
        if len(vals) == 2:
            slow, fast = max(vals), min(vals)
            row += f"{slow / fast:>9.1f}x"
        print(row)


if __name__ == "__main__":
    main()
