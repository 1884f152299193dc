"""Compiled vs pure-Python r-integrand reduction.

Times ``kernel_batch`` on random point pairs for each kernel and each
backend, checks the two agree, and prints one line per case::

    python3 benchmarks/bench_kernels.py [--pairs N] [--repeat K]
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from ouriesz.kernels import kernel_batch


def _time(fn, repeat: int) -> float:
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--pairs", type=int, default=2000)
    parser.add_argument("--repeat", type=int, default=3)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    rng = np.random.default_rng(args.seed)
    print(f"{'kernel':<14}{'d':>2}{'python s':>11}{'compiled s':>12}{'speedup':>9}{'max rel diff':>14}")
    for d in (1, 2):
        x = rng.normal(size=(args.pairs, d))
        y = x + rng.uniform(0.3, 2.0, size=(args.pairs, 1)) * rng.choice([-1.0, 1.0], size=(args.pairs, d))
        for kind, which in (("M", None), ("R", None), ("Sstar", None), ("R", "y"), ("Sstar", "x")):
            label = kind if which is None else f"grad_{which} {kind}"
            out = {}
            times = {}
            for backend in ("python", "compiled"):
                def run(backend=backend):
                    out[backend] = kernel_batch(kind, x, y, 1, which=which, weight="y", backend=backend)
                times[backend] = _time(run, args.repeat)
            diff = np.max(np.abs(out["python"] - out["compiled"]) / np.maximum(np.abs(out["python"]), 1e-300))
            print(f"{label:<14}{d:>2}{times['python']:>11.3f}{times['compiled']:>12.3f}"
                  f"{times['python'] / times['compiled']:>8.1f}x{diff:>14.2e}")


if __name__ == "__main__":
    main()
