#!/usr/bin/env python3
"""Benchmark the numba and numpy kernel backends.

Times the Gaussian-basis evaluation and the fused basis/output/update kernel
on a configurable grid, plus a short closed-loop simulation segment per
backend.

Usage:
    python benchmarks/bench_kernels.py [--points-per-dim 3] [--repeats 200]
                                       [--sim-seconds 20]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from dpsim import kernels
from dpsim.approximators import RbfNetwork
from dpsim.config import default_scenario
from dpsim.simulate import run_simulation


def time_call(fn, repeats):
    fn()  # warmup (includes JIT compilation on the numba path)
    start = time.perf_counter()
    for _ in range(repeats):
        fn()
    return (time.perf_counter() - start) / repeats


def bench_kernels(points_per_dim, repeats):
    net = RbfNetwork.grid(points_per_dim=points_per_dim)
    n = net.node_count
    rng = np.random.default_rng(0)
    z = rng.normal(scale=0.2, size=9)
    theta = np.ascontiguousarray(rng.random((3, n)))
    z2 = rng.normal(size=3)
    gamma = np.full((3, n), 0.1)
    sigma = np.array([2.13, 2.13, 0.302])
    g = np.empty(n)
    tdot = np.empty_like(theta)

    results = {}
    for name in kernels.available_backends():
        kernels.use_backend(name)
        basis_t = time_call(lambda: kernels.basis_into(
            net.centers, net._inv_two_h2, net._coef, z, g), repeats)
        core_t = time_call(lambda: kernels.adaptive_core(
            net.centers, net._inv_two_h2, net._coef, z, theta, z2, gamma, sigma,
            -1.0, -1.0, g, tdot), repeats)
        results[name] = (basis_t, core_t)

    print(f"grid {points_per_dim}^9 = {n} nodes, {repeats} repeats")
    print(f"{'backend':<10}{'basis_ms':>12}{'fused_core_ms':>16}")
    for name, (basis_t, core_t) in results.items():
        print(f"{name:<10}{basis_t * 1e3:>12.3f}{core_t * 1e3:>16.3f}")
    if len(results) == 2:
        ratio = results["numpy"][1] / results["numba"][1]
        print(f"fused-core speedup numba vs numpy: {ratio:.2f}x")
    return results


def bench_closed_loop(points_per_dim, sim_seconds):
    print(f"\nclosed-loop segment: {sim_seconds:g} s at dt=0.1, "
          f"grid {points_per_dim}^9")
    print(f"{'backend':<10}{'wall_s':>10}{'sim_s_per_wall_s':>18}")
    for name in kernels.available_backends():
        kernels.use_backend(name)
        cfg = default_scenario()
        cfg.points_per_dim = points_per_dim
        cfg.duration = sim_seconds
        run_simulation(cfg)  # warmup
        start = time.perf_counter()
        run_simulation(cfg)
        wall = time.perf_counter() - start
        print(f"{name:<10}{wall:>10.2f}{sim_seconds / wall:>18.1f}")


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--points-per-dim", type=int, default=3)
    parser.add_argument("--repeats", type=int, default=200)
    parser.add_argument("--sim-seconds", type=float, default=20.0)
    args = parser.parse_args()
    default = kernels.active_backend()
    try:
        bench_kernels(args.points_per_dim, args.repeats)
        bench_closed_loop(args.points_per_dim, args.sim_seconds)
    finally:
        kernels.use_backend(default)


if __name__ == "__main__":
    main()
