"""Recover a QE mixing matrix from synthetic chart measurements.

    python scripts/qe_fit_demo.py --noise 0.01 --seed 3
"""

import argparse

import numpy as np

from camsim.analysis.qe import solve_qe_transform
from camsim.experiments import qe_fit_problem


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--noise", type=float, default=0.01, help="relative noise on the measured responses")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--zero-threshold", type=float, default=None)
    args = ap.parse_args(argv)

    predicted, measured, m0 = qe_fit_problem(noise=args.noise, seed=args.seed)
    fit = solve_qe_transform(predicted, measured, zero_threshold=args.zero_threshold)
    np.set_printoptions(precision=4, suppress=True)
    print("true M\n", m0)
    print("recovered M\n", fit.m)
    print(f"max entry error {np.abs(fit.m - m0).max():.4g}, residual RMS {fit.residual_rms:.4g}")


if __name__ == "__main__":
    main()
