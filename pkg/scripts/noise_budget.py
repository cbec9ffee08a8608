"""Photon transfer and dark-stack noise of the default sensor.

    python scripts/noise_budget.py --out results/noise
"""

import argparse
import csv
from pathlib import Path

from camsim.experiments import dark_stack_noise, photon_transfer_series
from camsim.svg import plot_svg


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", type=Path, default=Path("results/noise"))
    ap.add_argument("--size", type=int, default=512, help="flat-field frame size")
    ap.add_argument("--frames", type=int, default=100, help="dark stack depth")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)
    args.out.mkdir(parents=True, exist_ok=True)

    pt, cfg = photon_transfer_series(size=args.size, seed=args.seed)
    with open(args.out / "ptc.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["mean_dn", "variance_dn2"])
        w.writerows([[f"{m:.4f}", f"{v:.4f}"] for m, v in zip(pt.means, pt.variances)])
    plot_svg(args.out / "ptc.svg", [("pairs", pt.means, pt.variances)], "photon transfer",
             "mean (DN)", "temporal variance (DN^2)", scatter=True)
    k = cfg.dn_per_electron
    print(f"conversion gain {pt.slope:.5f} DN/e- (configured {k:.5f}, {100 * (pt.slope / k - 1):+.2f}%)")

    d, cfg = dark_stack_noise(frames=args.frames, seed=args.seed)
    read = cfg.read_noise_mv * 1e-3 * cfg.dn_per_volt
    dsnu = cfg.dsnu_mv * 1e-3 * cfg.dn_per_volt
    print(f"temporal {d.temporal_std:.3f} DN (read noise {read:.3f}, {100 * (d.temporal_std / read - 1):+.2f}%)")
    print(f"DSNU {d.dsnu_std:.3f} DN (configured {dsnu:.3f}, {100 * (d.dsnu_std / dsnu - 1):+.2f}%)")


if __name__ == "__main__":
    main()
