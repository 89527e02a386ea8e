#!/usr/bin/env python3
"""Benchmark the all-subsets Bayes-factor sweep: numba kernel vs numpy fallback.

The sweep runs once per (time step, imputation) pair, so a desk-profile
experiment performs about 16k of them; the per-sweep time below dominates
the experiment's runtime.

Usage: python benchmarks/bench_backends.py [--p 10] [--n 100] [--repeat 200]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from seqbvs._kernels import HAS_NUMBA
from seqbvs.bayes_lm import GramStats, model_sweep
from seqbvs.model_space import enumerate_models


def time_backend(stats, space, g, backend, repeat):
    model_sweep(stats, space, g, backend=backend)  # warm-up (jit compile)
    best = float("inf")
    for _ in range(3):
        start = time.perf_counter()
        for _ in range(repeat):
            model_sweep(stats, space, g, backend=backend)
        best = min(best, (time.perf_counter() - start) / repeat)
    return best


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--p", type=int, default=10, help="covariate count (2**p models)")
    parser.add_argument("--n", type=int, default=100, help="observations")
    parser.add_argument("--repeat", type=int, default=200, help="sweeps per timing loop")
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    rng = np.random.default_rng(args.seed)
    x = rng.standard_normal((args.n, args.p))
    y = x @ rng.standard_normal(args.p) + rng.standard_normal(args.n)
    stats = GramStats.from_data(x, y)
    space = enumerate_models(args.p)
    g = float(args.n)

    print(f"p={args.p} (m={space.m} models), n={args.n}, {args.repeat} sweeps per loop")
    t_numpy = time_backend(stats, space, g, "numpy", args.repeat)
    print(f"numpy : {t_numpy * 1e3:8.3f} ms/sweep")
    if HAS_NUMBA:
        t_numba = time_backend(stats, space, g, "numba", args.repeat)
        print(f"numba : {t_numba * 1e3:8.3f} ms/sweep   ({t_numpy / t_numba:.1f}x vs numpy)")
        a = model_sweep(stats, space, g, backend="numpy")
        b = model_sweep(stats, space, g, backend="numba")
        print(f"max |numpy - numba| = {np.max(np.abs(a - b)):.2e}")
    else:
        print("numba : not installed (pip install seqbvs[speed])")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
