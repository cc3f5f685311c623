"""Compare the compiled and NumPy phase-ascent kernels.

Usage: python benchmarks/bench_phase.py [--repeat 20] [--restarts 32]
"""

import argparse
import time

import numpy as np

from duality_lab.kernels import _phase_py
from duality_lab.numerics import random_density, random_source

try:
    from duality_lab.kernels import _phase_cy
except ImportError:
    _phase_cy = None


def bench(fn, q, v0, repeat):
    best = np.inf
    for _ in range(repeat):
        start = time.perf_counter()
        value, _, sweeps = fn(q, v0, 1, 5000, 1e-12)
        best = min(best, time.perf_counter() - start)
    return best, value, sweeps


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=20)
    parser.add_argument("--restarts", type=int, default=32)
    args = parser.parse_args()
    rng = random_source(0)
    print(f"{'n':>3} {'numpy ms':>10} {'cython ms':>10} {'speedup':>8} {'|diff|':>9}")
    for n in (2, 3, 4, 6, 8, 12, 16):
        q = random_density(n, 2, rng)
        v0 = np.exp(1j * rng.uniform(0, 2 * np.pi, (args.restarts, n)))
        t_py, val_py, _ = bench(_phase_py.phase_ascent, q, v0, args.repeat)
        if _phase_cy is None:
            print(f"{n:>3} {t_py * 1e3:>10.3f} {'n/a':>10}")
            continue
        t_cy, val_cy, _ = bench(_phase_cy.phase_ascent, q, v0, args.repeat)
        print(f"{n:>3} {t_py * 1e3:>10.3f} {t_cy * 1e3:>10.3f} {t_py / t_cy:>8.1f} {abs(val_py - val_cy):>9.1e}")


if __name__ == "__main__":
    main()
