"""Timing and agreement of the two C_kappa(s, m) evaluation paths.

Usage: python3 benchmarks/bench_c_kappa.py [--points N] [--repeat R]
"""
import argparse
import timeit

import numpy as np

from icicd.specfun import c_kappa


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--points", type=int, default=10_000)
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()

    s = np.logspace(-3, 3, args.points)
    print(f"{'m':>2} {'delta':>5} {'series ms':>10} {'beta ms':>8} {'auto ms':>8} {'max gap':>9}")
    for m in (1, 4, 8):
        for delta in (0.2, 0.5, 0.8):
            timings = {}
            for method in ("series", "beta", "auto"):
                t = timeit.repeat(lambda: c_kappa(s, m, 1.0, delta, method),
                                  number=1, repeat=args.repeat)
                timings[method] = 1e3 * min(t)
            a = c_kappa(s, m, 1.0, delta, "series")
            b = c_kappa(s, m, 1.0, delta, "beta")
            gap = float(np.max(np.abs(a - b) / np.maximum(1.0, a)))
            print(f"{m:>2} {delta:>5.1f} {timings['series']:>10.2f} {timings['beta']:>8.2f} "
                  f"{timings['auto']:>8.2f} {gap:>9.1e}")


if __name__ == "__main__":
    main()
