"""Compiled vs pure-Python kernel timings.

    python benchmarks/bench_kernels.py [--n 144] [--repeat 3]

Both backends are imported directly, so one run compares them side by side
and also checks that their outputs agree.
"""

import argparse
import timeit

import numpy as np

from opcoorbit import _fallback
from opcoorbit.finite_tf import Lattice, gaussian_window, twiddle
from opcoorbit.generators import gaussian_spreading, multi_gaussian_window, spreading_to_operator
from opcoorbit.hs_ops import FrameSystem, OperatorWindow, _synthesis_factors
from opcoorbit.approx import rank_coefficients
from opcoorbit.rng import RngStream

try:
    from opcoorbit import _kernels
except ImportError:
    _kernels = None


def sweep_inputs(n, window, lat):
    fs = FrameSystem.build(window, lat)
    F = spreading_to_operator(gaussian_spreading(n))
    coeffs = fs.analyze(F)
    order = rank_coefficients(coeffs).order
    h = _synthesis_factors(coeffs, fs.dual_window)
    us = np.ascontiguousarray(fs.dual_atoms[:, order, :].transpose(1, 0, 2))
    vs = np.ascontiguousarray(h[:, order, :].transpose(1, 0, 2))
    return F, us, vs


def cases(n):
    lat = Lattice(n, 4, 4)
    g = gaussian_window(n)
    w6 = multi_gaussian_window(n, 6, RngStream(0).spawn(1))
    tw = twiddle(n)
    r1 = sweep_inputs(n, OperatorWindow.rank_one(g), lat)
    r6 = sweep_inputs(n, w6, lat)

    def words(m):
        out = np.empty(100_000, np.uint64)
        m.xoshiro_fill(np.array([1, 2, 3, 4], dtype=np.uint64), out)
        return out

    return [
        ("tf_atoms r=6", lambda m: m.tf_atoms(w6.phis, lat.xs, lat.ws, tw)),
        ("error_sweep r=1", lambda m: m.error_sweep(*r1)),
        ("error_sweep r=6", lambda m: m.error_sweep(*r6)),
        ("xoshiro 10^5 words", words),
    ]


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=144)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    if _kernels is None:
        print("compiled extension not built; only the Python backend is timed")
    print(f"N={args.n}, lattice a=b=4, best of {args.repeat}")
    print(f"{'kernel':<22}{'python [s]':>12}{'compiled [s]':>14}{'speedup':>10}  agree")
    for name, fn in cases(args.n):
        t_py = min(timeit.repeat(lambda: fn(_fallback), number=1, repeat=args.repeat))
        if _kernels is None:
            print(f"{name:<22}{t_py:>12.4f}")
            continue
        t_c = min(timeit.repeat(lambda: fn(_kernels), number=1, repeat=args.repeat))
        a, b = fn(_fallback), fn(_kernels)
        agree = np.array_equal(a, b) if a.dtype == np.uint64 else np.allclose(a, b, rtol=1e-12, atol=1e-12)
        print(f"{name:<22}{t_py:>12.4f}{t_c:>14.4f}{t_py / t_c:>9.1f}x  {agree}")


if __name__ == "__main__":
    main()
