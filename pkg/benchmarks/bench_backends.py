#!/usr/bin/env python3
"""Timing comparison of the compiled inner loops against the NumPy fallback.

Runs both backends on identical inputs, checks they agree to roundoff,
and prints best-of-``repeats`` wall times with the speedup.  The
compiled extension may be missing (source-only install); the script
then reports the fallback alone.

Usage: python benchmarks/bench_backends.py [--extent 8] [--repeats 3]
"""

import argparse
import time

import numpy as np

from oscint import _fastops_py
from oscint.groups import heisenberg_group
from oscint.lattice import Grid

try:
    from oscint import _fastops
except ImportError:
    _fastops = None


def _best_time(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def _convolve_case(extent, rng):
    group = heisenberg_group()
    grid = Grid(group, 0.25, (extent, extent, 2 * extent))
    kgrid = Grid(group, 0.25, (4, 4, 8))
    f = rng.normal(size=grid.size) + 0j
    kern = rng.normal(size=kgrid.size) + 1j * rng.normal(size=kgrid.size)
    args = (f, np.array(grid.extents, dtype=np.int64),
            kern, np.array(kgrid.extents, dtype=np.int64),
            grid.spacing, np.ascontiguousarray(group.structure))

    def call(impl):
        out = np.zeros(grid.size, dtype=np.complex128)
        impl.convolve_direct(*args, out)
        return out

    return f"convolve_direct {grid.shape} x {kgrid.shape}", call


def _shift_case(extent, rng):
    group = heisenberg_group()
    kgrid = Grid(group, 0.125, (4 * extent, 4 * extent, 8 * extent))
    kern = rng.normal(size=kgrid.size) + 1j * rng.normal(size=kgrid.size)
    mask = (kgrid.quasi_norms() >= 0.25).astype(np.uint8)
    y = np.array([0.05, -0.03, 0.02])
    args = (kern, np.array(kgrid.extents, dtype=np.int64), kgrid.spacing,
            np.ascontiguousarray(group.structure), y, mask)

    def call(impl):
        return impl.shifted_l1_diff(*args)

    return f"shifted_l1_diff {kgrid.shape}", call


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--extent", type=int, default=8,
                        help="base per-axis extent of the test grids")
    parser.add_argument("--repeats", type=int, default=3,
                        help="timing repeats; best is reported")
    args = parser.parse_args()
    rng = np.random.Generator(np.random.Philox(0))
    cases = [_convolve_case(args.extent, rng), _shift_case(args.extent, rng)]
    if _fastops is None:
        print("compiled extension not available; timing the fallback only")
    for label, call in cases:
        ref = call(_fastops_py)
        t_py = _best_time(lambda: call(_fastops_py), args.repeats)
        line = f"{label}\n  numpy    {t_py * 1e3:9.2f} ms"
        if _fastops is not None:
            got = call(_fastops)
            err = float(np.max(np.abs(np.atleast_1d(got - ref))))
            if err > 1e-10 * max(float(np.max(np.abs(np.atleast_1d(ref)))),
                                 1.0):
                raise SystemExit(f"backends disagree on {label}: {err}")
            t_c = _best_time(lambda: call(_fastops), args.repeats)
            line += (f"\n  compiled {t_c * 1e3:9.2f} ms"
                     f"   speedup {t_py / t_c:6.1f}x   parity {err:.2e}")
        print(line)


if __name__ == "__main__":
    main()
