"""Compare the numba and numpy kernel paths on a full ladder build.

    python3 benchmarks/bench_kernels.py [--n 3000] [--repeat 3]

The numba path is timed after one warm-up call so compilation is excluded.
"""

import argparse
import time

import numpy as np

from robustknap import _kernels
from robustknap.core import KnapsackInstance
from robustknap.experiment import random_coverage
from robustknap.ladder import guess_ladder_run
from robustknap.objectives import FacilityLocationObjective


def workloads(n, seed):
    rng = np.random.default_rng(seed)
    costs = rng.uniform(1, 3, size=(2, n))
    inst = KnapsackInstance.normalized_from(costs, 10)
    yield "coverage", random_coverage(n, 4 * n, 12, seed), inst
    yield "facility", FacilityLocationObjective(rng.normal(size=(200, n))), inst


def time_once(f, inst, n):
    t = time.perf_counter()
    guess_ladder_run(range(n), f, inst, "mult", 0.2, 5)
    return time.perf_counter() - t


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=3000)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    if _kernels.numba_impl is None:
        raise SystemExit("numba is not installed; nothing to compare")
    print(f"{'objective':<10} {'numpy s':>9} {'numba s':>9} {'speedup':>8}")
    for name, f, inst in workloads(args.n, args.seed):
        best = {}
        for impl in ("numba", "numpy"):
            prev = _kernels.use(impl)
            try:
                if impl == "numba":
                    time_once(f, inst, min(args.n, 50))
                best[impl] = min(time_once(f, inst, args.n) for _ in range(args.repeat))
            finally:
                _kernels.use(prev)
        print(f"{name:<10} {best['numpy']:9.3f} {best['numba']:9.3f} {best['numpy'] / best['numba']:7.1f}x")


if __name__ == "__main__":
    main()
