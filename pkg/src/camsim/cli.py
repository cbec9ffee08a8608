"""``camsim`` command line: build scenes, run the pipeline, analyse outputs."""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

OUT_ENV = "CAMSIM_OUT"


class CliError(Exception):
    pass


def _out_dir(args) -> Path:
    out = Path(args.out or os.environ.get(OUT_ENV) or ".")
    out.mkdir(parents=True, exist_ok=True)
    return out


# ---------------------------------------------------------------------------
# scene

def cmd_scene(args) -> int:
    from camsim.experiments import MCC_HEIGHT, MCC_POSITIONS, MCC_WIDTH
    from camsim.scene import PinholeCamera, build_cornell_box, place_mcc, save_scene, slanted_edge_fixture

    if args.slanted_edge and args.mcc:
        raise CliError("choose either --mcc or --slanted-edge, not both")
    if args.slanted_edge:
        scene = slanted_edge_fixture(distance_m=args.distance, angle_deg=args.angle,
                                     sensor_pixels=args.resolution // args.oversample,
                                     oversample=args.oversample)
    else:
        scene = build_cornell_box(camera=PinholeCamera(resolution=(args.resolution, args.resolution)))
        if args.mcc:
            scene = place_mcc(scene, (MCC_POSITIONS[args.mcc], MCC_HEIGHT, 0.548), MCC_WIDTH)
    save_scene(scene, args.output)
    print(f"wrote {args.output}")
    return 0


# ---------------------------------------------------------------------------
# run

def cmd_run(args) -> int:
    from camsim.pipeline import PipelineManifest, load_manifest, run_pipeline

    m = load_manifest(args.manifest)
    if args.luminance is not None:
        m.luminance = args.luminance
    if args.spp is not None:
        m.render = replace(m.render, samples_per_pixel=args.spp)
    if args.seed is not None:
        m.render = replace(m.render, seed=args.seed)
        m.sensor = {**m.sensor, "noise_seed": args.seed, "pattern_seed": args.seed}
    if args.out is not None:
        m.out = Path(args.out)
    elif OUT_ENV in os.environ and "out" not in json.loads(Path(args.manifest).read_text()):
        m.out = Path(os.environ[OUT_ENV])
    if args.stages:
        m = PipelineManifest(**{**m.__dict__, "stages": tuple(args.stages.split(","))})
    record = run_pipeline(m, threads=args.threads)
    for name, digest in record["artifacts"].items():
        print(f"{name} sha256={digest[:16]}")
    return 0


# ---------------------------------------------------------------------------
# analyze

def _read_raw(path):
    from camsim.raw import read_pgm
    try:
        return read_pgm(path)
    except FileNotFoundError:
        raise CliError(f"input not found: {path}") from None


def cmd_mtf(args) -> int:
    from camsim.analysis.mtf import slanted_edge_mtf, write_mtf_csv
    from camsim.analysis.stats import Roi
    from camsim.svg import plot_svg

    img = _read_raw(args.raw)
    v = img.values.astype(np.float64)
    if args.roi:
        roi = Roi.parse(args.roi)
        roi.check(v.shape)
        v = v[roi.slices()]
    if img.cfa_pattern != "MONO":
        # one CFA channel at a time keeps the sampling regular
        ch = img.channels()
        if args.roi:
            ch = ch[roi.slices()]
        g = {"r": 0, "g": 1, "b": 2}[args.channel]
        rows, cols = np.nonzero(ch == g)
        r0, c0 = rows.min() % 2, cols.min() % 2
        v = v[r0::2, c0::2]
    curve = slanted_edge_mtf(v, oversample=args.oversample, pitch_um=args.pitch)
    out = _out_dir(args)
    write_mtf_csv(curve, out / "mtf.csv")
    plot_svg(out / "mtf.svg", [("MTF", curve.frequencies, curve.modulation)],
             title=f"slanted edge {curve.angle_deg:.2f} deg", xlabel="cycles/pixel", ylabel="modulation")
    print(f"edge angle {curve.angle_deg:.3f} deg; MTF50 {curve.mtf50():.4f} cycles/pixel")
    print(f"wrote {out / 'mtf.csv'} and {out / 'mtf.svg'}")
    return 0


def _load_matrix_csv(path) -> np.ndarray:
    try:
        a = np.loadtxt(path, delimiter=",", ndmin=2, comments="#")
    except (OSError, ValueError) as exc:
        raise CliError(f"cannot read {path}: {exc}") from None
    if a.ndim != 2 or a.shape[1] != 3:
        raise CliError(f"{path}: expected n rows of 3 comma-separated values")
    return a


def cmd_qe_fit(args) -> int:
    from camsim.analysis.qe import REFERENCE_M, QeTransform, solve_qe_transform
    from camsim.svg import plot_svg

    if args.synthetic:
        rng = np.random.default_rng(args.seed if args.seed is not None else 0)
        predicted = rng.uniform(0.05, 1.0, size=(72, 3))
        measured = predicted @ REFERENCE_M
        measured = measured * (1.0 + args.noise * rng.standard_normal(measured.shape))
    else:
        if not (args.predicted and args.measured):
            raise CliError("qe-fit needs --predicted and --measured CSV files, or --synthetic")
        predicted, measured = _load_matrix_csv(args.predicted), _load_matrix_csv(args.measured)
        if predicted.shape != measured.shape:
            raise CliError("predicted and measured must have the same number of rows")
    fit = solve_qe_transform(predicted, measured, zero_threshold=args.zero_threshold)
    out = _out_dir(args)
    (out / "qe_matrix.json").write_text(QeTransform(fit.m).to_json() + "\n")
    fitted = predicted @ fit.m
    with open(out / "qe_scatter.csv", "w") as fh:
        fh.write("row,channel,predicted,fitted,measured\n")
        for i in range(predicted.shape[0]):
            for c, name in enumerate("rgb"):
                fh.write(f"{i},{name},{predicted[i, c]:.6g},{fitted[i, c]:.6g},{measured[i, c]:.6g}\n")
    plot_svg(out / "qe_scatter.svg",
             [(name, measured[:, c], fitted[:, c]) for c, name in enumerate("RGB")],
             title="fitted vs measured", xlabel="measured", ylabel="fitted", scatter=True, diagonal=True)
    print("M =")
    for row in fit.m:
        print("  " + "  ".join(f"{v: .4f}" for v in row))
    print(f"residual RMS {fit.residual_rms:.4g}")
    return 0


def cmd_profile(args) -> int:
    from camsim.analysis.demosaic import demosaic_bilinear
    from camsim.analysis.stats import line_profile, write_profile_csv
    from camsim.svg import plot_svg

    img = _read_raw(args.raw)
    rgb = demosaic_bilinear(img) * args.scale
    lo, hi = 0, img.width
    if args.cols:
        try:
            lo, hi = (int(v) for v in args.cols.split(":"))
        except ValueError:
            raise CliError(f"--cols must be start:stop, got {args.cols!r}") from None
    prof = line_profile(rgb, args.row, lo, hi, rows=args.rows)
    out = _out_dir(args)
    write_profile_csv(prof, out / "profile.csv", lo)
    x = np.arange(lo, hi)
    plot_svg(out / "profile.svg", [(n, x, prof[:, i]) for i, n in enumerate("RGB")],
             title=f"row {args.row}", xlabel="column", ylabel="DN")
    print(f"wrote {out / 'profile.csv'} ({hi - lo} columns)")
    return 0


def cmd_noise(args) -> int:
    from camsim.analysis.stats import Roi, select_uniform_regions, std_gaps
    from camsim.svg import plot_svg

    a, b = _read_raw(args.raw_a), _read_raw(args.raw_b)
    if a.values.shape != b.values.shape or a.cfa_pattern != b.cfa_pattern:
        raise CliError("the two frames differ in size or CFA layout")
    rois = [Roi.parse(r) for r in args.roi] if args.roi else select_uniform_regions(a, args.regions, args.block)
    gaps = std_gaps(a, b, rois)
    out = _out_dir(args)
    with open(out / "noise.csv", "w") as fh:
        fh.write("region,row,col,height,width,channel,mean_a,mean_b,std_a,std_b,std_gap\n")
        for i, g in enumerate(gaps):
            r = g["roi"]
            for k, c in enumerate(g["channels"]):
                fh.write(f"{i},{r.row},{r.col},{r.height},{r.width},{c},{g['mean_a'][k]:.4f},"
                         f"{g['mean_b'][k]:.4f},{g['std_a'][k]:.4f},{g['std_b'][k]:.4f},{g['std_gap'][k]:.4f}\n")
    series = []
    for k, c in enumerate(gaps[0]["channels"]):
        series.append((f"{c} A", [g["mean_a"][k] for g in gaps], [g["std_a"][k] for g in gaps]))
        series.append((f"{c} B", [g["mean_b"][k] for g in gaps], [g["std_b"][k] for g in gaps]))
    plot_svg(out / "noise.svg", series, title="std vs mean", xlabel="mean DN", ylabel="std DN", scatter=True)
    matched = [g for g in gaps if g["matched"]]
    worst = max((max(g["std_gap"]) for g in matched), default=float("nan"))
    print(f"{len(matched)}/{len(gaps)} regions with means matched within 2 DN")
    print(f"max std gap {worst:.3f} DN")
    return 0


# ---------------------------------------------------------------------------
# config

def cmd_print_defaults(args) -> int:
    from camsim.optics import OpticsConfig
    from camsim.render import RenderConfig
    from camsim.sensor import SensorConfig

    docs = {"render": RenderConfig().to_dict(), "optics": OpticsConfig().to_dict(),
            "sensor": SensorConfig().to_dict()}
    doc = docs if args.section == "all" else docs[args.section]
    print(json.dumps(doc, indent=2))
    return 0


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    def globals_parser(default):
        g = argparse.ArgumentParser(add_help=False)
        g.add_argument("--seed", type=int, default=default, help="seed override for every random stream")
        g.add_argument("--out", default=default, help=f"output directory (default ${OUT_ENV} or .)")
        g.add_argument("--threads", type=int, default=default, help="worker threads for rendering")
        return g

    # global flags are accepted before or after the subcommand; SUPPRESS keeps
    # a subparser from resetting a value given earlier on the line
    common = globals_parser(argparse.SUPPRESS)
    p = argparse.ArgumentParser(prog="camsim", description=__doc__, parents=[globals_parser(None)])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("scene", parents=[common], help="write a Cornell-box scene JSON")
    s.add_argument("-o", "--output", required=True, help="scene JSON path")
    s.add_argument("--mcc", choices=("left", "center", "right"))
    s.add_argument("--slanted-edge", action="store_true")
    s.add_argument("--distance", type=float, default=0.5, help="edge target distance (m)")
    s.add_argument("--angle", type=float, default=5.0, help="edge angle from vertical (deg)")
    s.add_argument("--resolution", type=int, default=128)
    s.add_argument("--oversample", type=int, default=1, help="render samples per sensor pixel side (edge)")
    s.set_defaults(func=cmd_scene)

    r = sub.add_parser("run", parents=[common], help="run a pipeline manifest")
    r.add_argument("manifest")
    r.add_argument("--luminance", type=float, default=None, help="mean scene luminance (cd/m^2)")
    r.add_argument("--spp", type=int, default=None)
    r.add_argument("--stages", default=None, help="comma-separated stage prefix")
    r.set_defaults(func=cmd_run)

    a = sub.add_parser("analyze", parents=[common], help="figure analyses")
    asub = a.add_subparsers(dest="analysis", required=True)

    m = asub.add_parser("mtf", parents=[common])
    m.add_argument("raw")
    m.add_argument("--roi", help="row,col,height,width")
    m.add_argument("--oversample", type=int, default=4)
    m.add_argument("--pitch", type=float, default=1.4, help="pixel pitch (um)")
    m.add_argument("--channel", choices=("r", "g", "b"), default="g")
    m.set_defaults(func=cmd_mtf)

    q = asub.add_parser("qe-fit", parents=[common])
    q.add_argument("--predicted")
    q.add_argument("--measured")
    q.add_argument("--synthetic", action="store_true", help="72 rows synthesised from the calibrated M")
    q.add_argument("--noise", type=float, default=0.0, help="relative noise on synthetic data")
    q.add_argument("--zero-threshold", type=float, default=None)
    q.set_defaults(func=cmd_qe_fit)

    pr = asub.add_parser("profile", parents=[common])
    pr.add_argument("raw")
    pr.add_argument("--row", type=int, required=True)
    pr.add_argument("--cols", help="start:stop")
    pr.add_argument("--scale", type=float, default=1.0, help="multiply values before export")
    pr.add_argument("--rows", type=int, default=1, help="odd number of rows averaged around --row")
    pr.set_defaults(func=cmd_profile)

    n = asub.add_parser("noise", parents=[common])
    n.add_argument("raw_a")
    n.add_argument("raw_b")
    n.add_argument("--regions", type=int, default=3)
    n.add_argument("--block", type=int, default=32)
    n.add_argument("--roi", action="append", help="row,col,height,width (repeatable)")
    n.set_defaults(func=cmd_noise)

    c = sub.add_parser("config", parents=[common], help="configuration helpers")
    csub = c.add_subparsers(dest="config_command", required=True)
    pd = csub.add_parser("print-defaults", parents=[common])
    pd.add_argument("section", nargs="?", default="all", choices=("all", "render", "optics", "sensor"))
    pd.set_defaults(func=cmd_print_defaults)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (CliError, ValueError, OSError, RuntimeError) as exc:
        print(f"camsim: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
