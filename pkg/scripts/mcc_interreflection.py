"""Colour cast from the red wall on a chart moved across the back wall.

Renders the chart at the left, centre and right placements, runs the full
camera chain, and reports R/G averaged over the gray series.  A chart near
the red wall picks up more red interreflection.

    python scripts/mcc_interreflection.py --spp 64 --out results/mcc
"""

import argparse
import csv
from pathlib import Path

from camsim.analysis.stats import write_profile_csv
from camsim.experiments import MCC_POSITIONS, gray_series_rg
from camsim.svg import plot_svg


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", type=Path, default=Path("results/mcc"))
    ap.add_argument("--spp", type=int, default=64)
    ap.add_argument("--resolution", type=int, default=256)
    ap.add_argument("--positions", nargs="+", default=list(MCC_POSITIONS), choices=list(MCC_POSITIONS))
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--threads", type=int, default=None)
    args = ap.parse_args(argv)
    args.out.mkdir(parents=True, exist_ok=True)

    rows, series = [], []
    for pos in args.positions:
        res = gray_series_rg(pos, spp=args.spp, seed=args.seed, resolution=args.resolution,
                             threads=args.threads)
        write_profile_csv(res["profile"], args.out / f"profile_{pos}.csv", res["col_start"])
        p = res["profile"]
        cols = range(res["col_start"], res["col_start"] + p.shape[0])
        series.append((f"{pos} R/G", list(cols), p[:, 0] / p[:, 1].clip(1e-12)))
        rows.append((pos, res["rg"]))
        print(f"{pos:>6}: gray-series R/G {res['rg']:.4f} (row {res['row']})")

    with open(args.out / "rg.csv", "w", newline="") as fh:
        csv.writer(fh).writerows([("position", "rg")] + [(p, f"{v:.6f}") for p, v in rows])
    plot_svg(args.out / "rg_profile.svg", series, "R/G along the gray row", "column", "R/G")


if __name__ == "__main__":
    main()
