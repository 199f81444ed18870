"""Clash-rate calibration and the capacity threshold.

Prints the p at which a fraction q of opportunities is found by fewer than two
of n searchers, and a table of phi(alpha)."""

import argparse
import sys

import numpy as np

from mevcore.stochastic import calibrate_p, p_y_lt2, phi_residual, solve_phi


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=125)
    ap.add_argument("--q", type=float, default=2 / 3)
    ap.add_argument("--alphas", type=int, default=9, help="number of alpha grid points in (0, 1)")
    args = ap.parse_args(argv)

    p = calibrate_p(args.n, args.q)
    print(f"n={args.n} q={args.q:.6g}: p*={p:.6g} (P[Y<2](p*) - q = {p_y_lt2(args.n, p) - args.q:.1e}), n p* = {args.n * p:.4g}")
    print("alpha,phi,residual")
    for a in np.linspace(0.1, 0.9, args.alphas):
        phi = solve_phi(a)
        print(f"{a:.3g},{phi:.10g},{phi_residual(phi, a):.1e}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
