"""Region statistics, line profiles, photon transfer and dark-noise decomposition."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from camsim.raw import CHANNELS, DigitalImage


@dataclass(frozen=True)
class Roi:
    row: int
    col: int
    height: int
    width: int

    def slices(self):
        return slice(self.row, self.row + self.height), slice(self.col, self.col + self.width)

    def check(self, shape):
        if self.height < 1 or self.width < 1:
            raise ValueError(f"empty ROI {self}")
        if self.row < 0 or self.col < 0 or self.row + self.height > shape[0] or self.col + self.width > shape[1]:
            raise ValueError(f"ROI {self} lies outside a {shape[0]}x{shape[1]} raster")

    @classmethod
    def parse(cls, text: str) -> "Roi":
        """From ``row,col,height,width``."""
        parts = [int(p) for p in text.split(",")]
        if len(parts) != 4:
            raise ValueError(f"ROI must be row,col,height,width; got {text!r}")
        return cls(*parts)


def _as_roi(roi) -> Roi:
    return roi if isinstance(roi, Roi) else Roi(*roi)


@dataclass(frozen=True)
class RegionStats:
    channels: tuple[str, ...]
    mean: tuple[float, ...]
    std: tuple[float, ...]
    count: tuple[int, ...]

    def as_dict(self) -> dict:
        return {c: {"mean": m, "std": s, "count": n}
                for c, m, s, n in zip(self.channels, self.mean, self.std, self.count)}


def _channel_samples(raster, roi: Roi) -> dict[str, np.ndarray]:
    if isinstance(raster, DigitalImage):
        roi.check(raster.values.shape)
        rs, cs = roi.slices()
        v = raster.values[rs, cs].astype(np.float64)
        ch = raster.channels()[rs, cs]
        return {CHANNELS[c]: v[ch == c] for c in range(3) if np.any(ch == c)}
    a = np.asarray(raster, dtype=np.float64)
    roi.check(a.shape)
    rs, cs = roi.slices()
    if a.ndim == 2:
        return {"v": a[rs, cs].ravel()}
    if a.ndim == 3 and a.shape[2] == 3:
        return {CHANNELS[c]: a[rs, cs, c].ravel() for c in range(3)}
    raise ValueError(f"unsupported raster shape {a.shape}")


def region_stats(raster, roi) -> RegionStats:
    """Per-channel sample mean and standard deviation (ddof=1) over ``roi``.

    A :class:`DigitalImage` is split by CFA site; an (H, W, 3) array by plane;
    a plain 2-D array is a single channel named ``v``.
    """
    roi = _as_roi(roi)
    if roi.height * roi.width < 16:
        raise ValueError("ROI must cover at least 16 pixels")
    samples = _channel_samples(raster, roi)
    names = tuple(samples)
    return RegionStats(
        names,
        tuple(float(samples[c].mean()) for c in names),
        tuple(float(samples[c].std(ddof=1)) for c in names),
        tuple(int(samples[c].size) for c in names),
    )


def write_stats_csv(stats: list[RegionStats], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["region", "channel", "mean", "std", "count"])
        for i, s in enumerate(stats):
            for c, m, sd, n in zip(s.channels, s.mean, s.std, s.count):
                w.writerow([i, c, f"{m:.6g}", f"{sd:.6g}", n])


def line_profile(rgb, row: int, col_start: int = 0, col_stop: int | None = None,
                 rows: int = 1) -> np.ndarray:
    """Values along one row segment: shape (n, 3) for RGB input, (n,) for 2-D.

    With ``rows > 1`` the profile is the mean over that many rows centred on
    ``row`` (``rows`` must be odd).
    """
    a = np.asarray(rgb, dtype=np.float64)
    if col_stop is None:
        col_stop = a.shape[1]
    if rows < 1 or rows % 2 == 0:
        raise ValueError(f"rows must be odd and positive, got {rows}")
    h = rows // 2
    if not h <= row < a.shape[0] - h:
        raise ValueError(f"rows {row - h}..{row + h} outside 0..{a.shape[0] - 1}")
    if not 0 <= col_start < col_stop <= a.shape[1]:
        raise ValueError(f"column range [{col_start}, {col_stop}) outside 0..{a.shape[1]}")
    return a[row - h:row + h + 1, col_start:col_stop].mean(axis=0)


def write_profile_csv(profile: np.ndarray, path, col_start: int = 0) -> None:
    p = np.asarray(profile)
    if p.ndim == 1:
        p = np.repeat(p[:, None], 3, axis=1)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["column", "r", "g", "b"])
        for i, (r, g, b) in enumerate(p):
            w.writerow([col_start + i, f"{r:.6g}", f"{g:.6g}", f"{b:.6g}"])


def rg_ratio(profile: np.ndarray, spans) -> float:
    """Mean of per-span R/G ratios, each from the span-averaged R and G."""
    p = np.asarray(profile, dtype=np.float64)
    ratios = []
    for a, b in spans:
        seg = p[a:b]
        ratios.append(seg[:, 0].mean() / seg[:, 1].mean())
    return float(np.mean(ratios))


# ---------------------------------------------------------------------------
# temporal noise

@dataclass(frozen=True)
class PhotonTransfer:
    means: np.ndarray
    variances: np.ndarray
    slope: float  # DN per electron when shot noise dominates the slope
    intercept: float  # DN^2, read + quantization floor


def photon_transfer(pairs, roi=None, channel: int | None = None) -> PhotonTransfer:
    """Variance-vs-mean line from pairs of flat-field frames at each level.

    Each pair's temporal variance is ``var(a - b) / 2``, which cancels any
    fixed pattern.  ``channel`` restricts the statistics to one CFA channel.
    """
    means, variances = [], []
    for a, b in pairs:
        va, vb = (np.asarray(x.values if isinstance(x, DigitalImage) else x, dtype=np.float64) for x in (a, b))
        mask = np.ones(va.shape, bool)
        if channel is not None:
            mask &= a.channels() == channel
        if roi is not None:
            roi = _as_roi(roi)
            roi.check(va.shape)
            m2 = np.zeros_like(mask)
            m2[roi.slices()] = True
            mask &= m2
        means.append(0.5 * (va[mask].mean() + vb[mask].mean()))
        variances.append(0.5 * np.var(va[mask] - vb[mask], ddof=1))
    means, variances = np.array(means), np.array(variances)
    if means.size < 2:
        raise ValueError("photon transfer needs at least two exposure levels")
    slope, intercept = np.polyfit(means, variances, 1)
    return PhotonTransfer(means, variances, float(slope), float(intercept))


@dataclass(frozen=True)
class DarkNoise:
    temporal_std: float  # DN, RMS over pixels of the per-pixel temporal std
    dsnu_std: float  # DN, spatial std of the stack mean with temporal noise removed
    raw_spatial_std: float  # DN, spatial std of the stack mean as measured
    frames: int


def dark_noise(stack) -> DarkNoise:
    """Split a dark stack into temporal noise and fixed-pattern offset spread."""
    v = np.stack([np.asarray(f.values if isinstance(f, DigitalImage) else f, dtype=np.float64)
                  for f in stack])
    n = v.shape[0]
    if n < 2:
        raise ValueError("dark-noise decomposition needs at least two frames")
    temporal_var = v.var(axis=0, ddof=1).mean()
    mean_frame = v.mean(axis=0)
    spatial_var = mean_frame.var(ddof=1)
    # the stack mean still carries temporal noise of variance temporal_var / n
    dsnu_var = max(spatial_var - temporal_var / n, 0.0)
    return DarkNoise(float(np.sqrt(temporal_var)), float(np.sqrt(dsnu_var)),
                     float(np.sqrt(spatial_var)), n)


def std_gaps(a, b, rois, mean_tolerance: float = 2.0) -> list[dict]:
    """Per-region, per-channel std differences between two frames.

    Each entry reports the mean gap as well, and whether the region counts
    as matched (all channel means within ``mean_tolerance`` DN).
    """
    out = []
    for roi in rois:
        sa, sb = region_stats(a, roi), region_stats(b, roi)
        mean_gap = [abs(x - y) for x, y in zip(sa.mean, sb.mean)]
        std_gap = [abs(x - y) for x, y in zip(sa.std, sb.std)]
        out.append({
            "roi": _as_roi(roi),
            "channels": sa.channels,
            "mean_a": sa.mean, "mean_b": sb.mean,
            "std_a": sa.std, "std_b": sb.std,
            "mean_gap": tuple(mean_gap), "std_gap": tuple(std_gap),
            "matched": max(mean_gap) <= mean_tolerance,
        })
    return out


def select_uniform_regions(img, count: int, block: int = 32, stride: int | None = None) -> list[Roi]:
    """Pick ``count`` non-overlapping flat blocks spanning a range of signal levels.

    Candidate blocks sit on a ``stride`` grid (default ``block // 4``) and are
    ranked by their largest per-channel std.  From the flatter half the picks
    are spread over quantiles of the mean level, skipping any block that
    overlaps an earlier pick.
    """
    shape = img.values.shape if isinstance(img, DigitalImage) else np.shape(img)[:2]
    block = int(block) - int(block) % 2
    if block < 4:
        raise ValueError("block must be at least 4 pixels")
    stride = max(2, block // 4) if stride is None else int(stride)
    stride -= stride % 2  # keep the CFA phase of every candidate
    if stride < 2:
        raise ValueError("stride must be at least 2 pixels")
    cands = []
    for r in range(0, shape[0] - block + 1, stride):
        for c in range(0, shape[1] - block + 1, stride):
            roi = Roi(r, c, block, block)
            s = region_stats(img, roi)
            cands.append((max(s.std), float(np.mean(s.mean)), roi))
    cands.sort(key=lambda t: t[0])
    flat = sorted(cands[:max(count, len(cands) // 2)], key=lambda t: t[1])

    def overlaps(a: Roi, b: Roi) -> bool:
        return (a.row < b.row + b.height and b.row < a.row + a.height
                and a.col < b.col + b.width and b.col < a.col + a.width)

    picks: list[Roi] = []
    for q in np.linspace(0, len(flat) - 1, count):
        # nearest free candidate to this quantile of the level ranking
        for k in sorted(range(len(flat)), key=lambda i: abs(i - q)):
            roi = flat[k][2]
            if not any(overlaps(roi, p) for p in picks):
                picks.append(roi)
                break
    if len(picks) < count:
        raise ValueError(f"only {len(picks)} non-overlapping blocks of {block} px fit; asked for {count}")
    return picks
