#!/usr/bin/env python3
"""Benchmark: compiled kernels vs the pure-Python reference.

Times the two hot kernels (upwind flux divergence and projected Gauss-Seidel)
on a congested corridor state, checks that both backends return identical
values, and prints a speedup table.

Usage: python3 benchmarks/bench_kernels.py [--size N] [--repeats R]
"""

import argparse
import time

import numpy as np

from crowdflow import _kernels_py
from crowdflow.grid import BoundarySpec, build_grid
from crowdflow.pressure import assemble_laplacian

try:
    from crowdflow import _kernels as _compiled
except ImportError:
    _compiled = None


def _time(fn, repeats):
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def congested_state(n):
    grid = build_grid(n, n, (1.0, 1.0), BoundarySpec(
        left="neumann", right="neumann", bottom="neumann", top="neumann",
        overrides=({"side": "right", "lo": 0.375, "hi": 0.625, "tag": "dirichlet"},)))
    rng = np.random.default_rng(0)
    u = np.clip(0.85 + 0.2 * rng.normal(size=(n, n)), 0.0, 1.2)
    vx = np.zeros((n, n + 1))
    vx[:, 1:] = 1.0
    vy = np.zeros((n + 1, n))
    return grid, u, vx, vy


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--size", type=int, default=48, help="grid cells per side")
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    grid, u, vx, vy = congested_state(args.size)
    op = assemble_laplacian(grid)
    dt = 0.4 * grid.hx
    q = 1.0 - (u + 0.1)
    diag = dt * op.diag
    offx, offy = dt * op.invhx2, dt * op.invhy2
    upwind_args = (u, vx, vy, grid.left, grid.right, grid.bottom, grid.top, grid.hx, grid.hy)

    def bench_upwind(impl):
        elapsed = _time(lambda: impl.upwind_divergence(*upwind_args), args.repeats)
        return elapsed, impl.upwind_divergence(*upwind_args)

    def bench_pgs(impl):
        def solve():
            p = np.zeros_like(u)
            impl.pgs_one_phase(p, q, diag, offx, offy, 1e-10, 100000)
            return p
        return _time(solve, args.repeats), solve()

    backends = [("pure-python", _kernels_py)]
    if _compiled is not None:
        backends.insert(0, ("compiled", _compiled))
    else:
        print("compiled kernels not built; timing the fallback only")

    print(f"grid {args.size}x{args.size}, PGS tol 1e-10\n")
    header = f"{'kernel':<20}" + "".join(f"{name:>16}" for name, _ in backends)
    if len(backends) == 2:
        header += f"{'speedup':>10}"
    print(header)

    for label, bench in (("upwind_divergence", bench_upwind), ("pgs_one_phase", bench_pgs)):
        times = []
        values = []
        for _, impl in backends:
            elapsed, value = bench(impl)
            times.append(elapsed)
            values.append(value)
        line = f"{label:<20}" + "".join(f"{t * 1e3:>13.3f} ms" for t in times)
        if len(backends) == 2:
            line += f"{times[1] / times[0]:>9.1f}x"
        print(line)
        if len(values) == 2:
            print(f"{'':<20}backends agree: {np.array_equal(values[0], values[1])}")


if __name__ == "__main__":
    main()
