"""Slanted-edge MTF estimation (ISO 12233 style).

Steps: per-row edge location from the centroid of the horizontal derivative,
a straight-line fit through those locations, projection of every pixel onto
the edge normal and binning at ``1/oversample`` pixel into an edge spread
function, differentiation to the line spread function, a Hamming window
centred on the LSF peak, and a DFT normalised to one at zero frequency.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np


class EdgeError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class MtfCurve:
    frequencies: np.ndarray = field(repr=False)  # cycles/pixel
    modulation: np.ndarray = field(repr=False)
    angle_deg: float = float("nan")
    pitch_um: float | None = None

    def __post_init__(self):
        f = np.asarray(self.frequencies, dtype=np.float64)
        m = np.asarray(self.modulation, dtype=np.float64)
        if f.shape != m.shape or f.ndim != 1 or f.size < 2:
            raise ValueError("frequencies and modulation must be matching 1-D arrays")
        if np.any(np.diff(f) <= 0):
            raise ValueError("frequencies must be strictly increasing")
        object.__setattr__(self, "frequencies", f)
        object.__setattr__(self, "modulation", m)

    def cycles_per_mm(self, pitch_um: float | None = None) -> np.ndarray:
        pitch = self.pitch_um if pitch_um is None else pitch_um
        if pitch is None:
            raise ValueError("pixel pitch needed for cycles/mm")
        return self.frequencies / (pitch * 1e-3)

    def at(self, f) -> np.ndarray:
        """Linear interpolation of modulation at frequencies ``f`` (cycles/pixel)."""
        return np.interp(f, self.frequencies, self.modulation)

    def mtf50(self) -> float:
        below = np.nonzero(self.modulation < 0.5)[0]
        if below.size == 0:
            return float("nan")
        i = below[0]
        f0, f1 = self.frequencies[i - 1], self.frequencies[i]
        m0, m1 = self.modulation[i - 1], self.modulation[i]
        return float(f0 + (m0 - 0.5) / (m0 - m1) * (f1 - f0))


def write_mtf_csv(curve: MtfCurve, path, units: str = "cycles_per_pixel") -> None:
    f = curve.cycles_per_mm() if units == "cycles_per_mm" else curve.frequencies
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["frequency", "modulation"])
        for a, b in zip(f, curve.modulation):
            w.writerow([f"{a:.6g}", f"{b:.6g}"])


def read_mtf_csv(path) -> MtfCurve:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return MtfCurve(data[:, 0], data[:, 1])


def _hamming(n: int, centre: float) -> np.ndarray:
    """Hamming window of half-width ``max(centre, n - centre)`` centred on ``centre``."""
    half = max(centre, n - 1 - centre, 1.0)
    x = (np.arange(n) - centre) / half
    return 0.54 + 0.46 * np.cos(np.pi * np.clip(x, -1.0, 1.0))


def _row_centroids(img: np.ndarray, window_centres: np.ndarray | None = None) -> np.ndarray:
    d = np.diff(img, axis=1)  # position of d[:, j] is j + 0.5
    # signed, so flat-field noise cancels instead of dragging the centroid
    d = d * np.sign(d.sum())
    n = d.shape[1]
    if window_centres is not None:
        cols = np.arange(n)[None, :] + 0.5
        d = d * _hamming_rows(cols, window_centres[:, None], n)
    s = d.sum(axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        return (d * (np.arange(n) + 0.5)).sum(axis=1) / s


def _hamming_rows(cols, centres, n):
    half = np.maximum(np.maximum(centres, n - centres), 1.0)
    x = np.clip((cols - centres) / half, -1.0, 1.0)
    return 0.54 + 0.46 * np.cos(np.pi * x)


def _flatten_rows(img: np.ndarray, ends: int = 4) -> np.ndarray:
    """Map each row onto [dark, bright] levels that vary smoothly down the region.

    The levels are quadratic in row so lens falloff is removed along with a
    linear illumination gradient.
    """
    rows = np.arange(img.shape[0])
    k = max(1, min(ends, img.shape[1] // 8))
    deg = 2 if img.shape[0] >= 8 else 1
    left = np.polyval(np.polyfit(rows, img[:, :k].mean(axis=1), deg), rows)
    right = np.polyval(np.polyfit(rows, img[:, -k:].mean(axis=1), deg), rows)
    span = right - left
    if np.any(np.abs(span) < 1e-12 * max(np.abs(img).max(), 1e-300)) or np.any(np.sign(span) != np.sign(span[0])):
        return img
    # keep the original scale so contrast checks and units are unchanged
    ref_lo, ref_span = left.mean(), span.mean()
    return ref_lo + (img - left[:, None]) / span[:, None] * ref_span


def _flatten_by_distance(img: np.ndarray, dist: np.ndarray, half_span: float, band: float = 2.0) -> np.ndarray:
    """Row flattening with levels read at fixed distances from the edge.

    Reading them at fixed columns instead would let a wide blur leak the
    edge's own drift across rows into the levels.
    """
    if half_span <= band:
        return img
    rows = np.arange(img.shape[0])
    lo_mask = (dist >= -half_span) & (dist <= -half_span + band)
    hi_mask = (dist <= half_span) & (dist >= half_span - band)
    n_lo, n_hi = lo_mask.sum(axis=1), hi_mask.sum(axis=1)
    ok = (n_lo > 0) & (n_hi > 0)
    if ok.sum() < 8:
        return img
    lo = np.where(lo_mask, img, 0.0).sum(axis=1)[ok] / n_lo[ok]
    hi = np.where(hi_mask, img, 0.0).sum(axis=1)[ok] / n_hi[ok]
    left = np.polyval(np.polyfit(rows[ok], lo, 2), rows)
    right = np.polyval(np.polyfit(rows[ok], hi, 2), rows)
    span = right - left
    if np.any(np.abs(span) < 1e-12 * max(np.abs(img).max(), 1e-300)) or np.any(np.sign(span) != np.sign(span[0])):
        return img
    return left.mean() + (img - left[:, None]) / span[:, None] * span.mean()


def edge_fit(region, flatten_rows: bool = True) -> tuple[float, float]:
    """Return ``(slope, intercept)`` of the edge column against row index."""
    img = np.asarray(region, dtype=np.float64)
    if flatten_rows:
        img = _flatten_rows(img)
    return _fit_edge(img)


def _fit_edge(img: np.ndarray):
    rows = np.arange(img.shape[0])
    c = _row_centroids(img)
    for _ in range(2):
        ok = np.isfinite(c)
        if ok.sum() < 3:
            raise EdgeError("no detectable edge: fewer than 3 rows with a gradient")
        slope, intercept = np.polyfit(rows[ok], c[ok], 1)
        c = _row_centroids(img, intercept + slope * rows)
    ok = np.isfinite(c)
    slope, intercept = np.polyfit(rows[ok], c[ok], 1)
    return slope, intercept


def slanted_edge_mtf(region, oversample: int = 4, pitch_um: float | None = None,
                     max_frequency: float | None = None, min_contrast: float = 1e-3,
                     flatten_rows: bool = True,
                     edge: tuple[float, float] | None = None) -> MtfCurve:
    """MTF of a single-channel region containing one near-vertical edge.

    Frequencies are cycles/pixel along the edge normal, up to ``oversample/2``
    unless ``max_frequency`` is given.  The edge must be 2 to 43 degrees from
    vertical; a near-horizontal edge can be handled by transposing first.

    ``flatten_rows`` removes a smooth top-to-bottom illumination change before
    binning.  Each edge phase is sampled by its own subset of rows, so an
    uncorrected gradient turns into a one-pixel sawtooth in the ESF and a
    false peak at 1 cycle/pixel.

    ``edge`` is an optional ``(slope, intercept)`` giving the edge column as
    ``intercept + slope * row``.  Pass it (usually from :func:`edge_fit` on a
    sharper frame of the same scene) when blur spreads the transition across
    most of the region and the centroid fit is no longer reliable.
    """
    img = np.asarray(region, dtype=np.float64)
    if img.ndim != 2 or min(img.shape) < 8:
        raise EdgeError(f"region must be 2-D and at least 8x8, got shape {img.shape}")
    oversample = int(oversample)
    if oversample < 1:
        raise ValueError("oversample must be >= 1")
    spread = np.percentile(img, 95) - np.percentile(img, 5)
    if not spread > min_contrast * max(np.abs(img).max(), 1e-300):
        raise EdgeError("no detectable edge: region is (nearly) uniform")

    raw = img
    if edge is None:
        slope, intercept = _fit_edge(_flatten_rows(img) if flatten_rows else img)
    else:
        slope, intercept = float(edge[0]), float(edge[1])
    angle = np.degrees(np.arctan(abs(slope)))
    if not 2.0 <= angle <= 43.0:
        raise EdgeError(f"edge angle {angle:.2f} deg from vertical is outside [2, 43]")
    cos_t = 1.0 / np.sqrt(1.0 + slope * slope)

    # use a whole number of edge-phase cycles so every sub-pixel bin is
    # visited equally often
    cycles = int(np.floor(raw.shape[0] * abs(slope)))
    img = raw[:int(round(cycles / abs(slope)))] if cycles >= 1 else raw

    # pixel centres at integer coordinates; the fitted centroid positions use
    # the same convention since d[:, j] sits at j + 0.5 between samples j, j+1
    r, c = np.indices(img.shape)
    dist = (c - (intercept + slope * r)) * cos_t
    half_span = (min(intercept, img.shape[1] - 1 - intercept,
                     intercept + slope * (img.shape[0] - 1),
                     img.shape[1] - 1 - intercept - slope * (img.shape[0] - 1)) - 0.5) * cos_t
    if flatten_rows:
        img = _flatten_by_distance(img, dist, half_span)
    idx = np.floor(dist * oversample).astype(np.int64)
    k0 = idx.min()
    idx -= k0
    nbins = idx.max() + 1
    counts = np.bincount(idx.ravel(), minlength=nbins)
    sums = np.bincount(idx.ravel(), weights=img.ravel(), minlength=nbins)

    # keep the span every row covers so the ESF tails are not ragged
    centres = (np.arange(nbins) + k0 + 0.5) / oversample
    keep = np.abs(centres) <= half_span
    filled = counts > 0
    esf = np.interp(np.arange(nbins), np.nonzero(filled)[0], sums[filled] / counts[filled])
    esf = esf[keep]
    if esf.size < 8:
        raise EdgeError("region too narrow for the requested oversampling")

    lsf = np.diff(esf)
    peak = float(np.argmax(np.abs(lsf)))
    lsf = lsf * _hamming(lsf.size, peak)
    spec = np.abs(np.fft.rfft(lsf))
    if spec[0] <= 0:
        raise EdgeError("line spread function integrates to zero")
    freqs = np.fft.rfftfreq(lsf.size, d=1.0 / oversample)
    # the two-point difference has transfer sinc(f / oversample)
    corr = np.sinc(freqs / oversample)
    mod = spec / spec[0] / np.maximum(corr, 0.1)
    limit = oversample / 2.0 if max_frequency is None else max_frequency
    sel = freqs <= limit + 1e-12
    return MtfCurve(freqs[sel], mod[sel], float(angle), pitch_um)


def pixel_aperture_mtf(f, angle_deg: float = 0.0, fill: float = 1.0) -> np.ndarray:
    """MTF of a square box pixel along a direction ``angle_deg`` off the row axis."""
    t = np.radians(angle_deg)
    f = np.asarray(f, dtype=np.float64) * fill
    return np.abs(np.sinc(f * np.cos(t)) * np.sinc(f * np.sin(t)))
