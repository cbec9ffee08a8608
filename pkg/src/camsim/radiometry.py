"""Wavelength grids, sampled spectra and radiometric/photometric helpers.

Every spectral quantity in the package lives on a :class:`WavelengthGrid`
(constant step, nanometres).  Integration over wavelength uses the rectangle
rule with ``dlambda = step``; the photometric integral additionally halves the
weight of the two end samples (trapezoid).
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from pathlib import Path

import numpy as np

# CODATA 2018 exact values
PLANCK = 6.62607015e-34  # J s
LIGHT_SPEED = 299792458.0  # m / s
KM_PHOTOPIC = 683.0  # lm / W

UNITS = ("radiance", "irradiance", "reflectance", "qe", "power")
_BOUNDED_UNITS = ("reflectance", "qe")


class UnitError(ValueError):
    """Raised when an operation receives a spectrum with the wrong unit tag."""


class GridMismatchError(ValueError):
    """Raised when two spectra that must share a grid do not."""


@dataclass(frozen=True)
class WavelengthGrid:
    start_nm: float = 400.0
    step_nm: float = 10.0
    count: int = 31

    def __post_init__(self):
        if not self.start_nm > 0:
            raise ValueError(f"start_nm must be > 0, got {self.start_nm}")
        if not self.step_nm > 0:
            raise ValueError(f"step_nm must be > 0, got {self.step_nm}")
        if int(self.count) != self.count or self.count < 1:
            raise ValueError(f"count must be a positive integer, got {self.count}")
        object.__setattr__(self, "start_nm", float(self.start_nm))
        object.__setattr__(self, "step_nm", float(self.step_nm))
        object.__setattr__(self, "count", int(self.count))

    @property
    def wavelengths(self) -> np.ndarray:
        return self.start_nm + self.step_nm * np.arange(self.count)

    @property
    def stop_nm(self) -> float:
        return self.start_nm + self.step_nm * (self.count - 1)

    def to_dict(self) -> dict:
        return {"start_nm": self.start_nm, "step_nm": self.step_nm, "count": self.count}


DEFAULT_GRID = WavelengthGrid()


@dataclass(frozen=True, eq=False)
class SpectralDistribution:
    """A sampled function of wavelength with a unit tag.

    ``values`` is stored as a read-only float64 array.  Negative samples are
    rejected, as are reflectance/QE samples above one.
    """

    grid: WavelengthGrid
    values: np.ndarray = field(repr=False)
    unit: str = "radiance"

    def __post_init__(self):
        if self.unit not in UNITS:
            raise UnitError(f"unknown unit tag {self.unit!r}; expected one of {UNITS}")
        values = np.array(self.values, dtype=np.float64).reshape(-1)
        if values.shape[0] != self.grid.count:
            raise ValueError(
                f"{values.shape[0]} values supplied for a grid of {self.grid.count} samples"
            )
        if not np.all(np.isfinite(values)):
            raise ValueError("spectral values must be finite")
        if np.any(values < 0):
            raise ValueError("negative spectral values are not allowed")
        if self.unit in _BOUNDED_UNITS and np.any(values > 1.0):
            raise ValueError(f"{self.unit} values must lie in [0, 1]")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def constant(cls, value: float, unit: str, grid: WavelengthGrid = DEFAULT_GRID):
        return cls(grid, np.full(grid.count, float(value)), unit)

    @property
    def wavelengths(self) -> np.ndarray:
        return self.grid.wavelengths

    def scaled(self, factor: float) -> "SpectralDistribution":
        return SpectralDistribution(self.grid, self.values * factor, self.unit)

    def __eq__(self, other):
        if not isinstance(other, SpectralDistribution):
            return NotImplemented
        return (
            self.grid == other.grid
            and self.unit == other.unit
            and np.array_equal(self.values, other.values)
        )

    __hash__ = None


def resample(s: SpectralDistribution, target: WavelengthGrid) -> SpectralDistribution:
    """Linearly interpolate ``s`` onto ``target``; zero outside its support."""
    if target == s.grid:
        return SpectralDistribution(target, s.values.copy(), s.unit)
    src = s.grid.wavelengths
    dst = target.wavelengths
    if s.grid.count == 1:
        # point support: triangular ramp one target step wide on either side
        out = np.clip(1.0 - np.abs(dst - src[0]) / target.step_nm, 0.0, None) * s.values[0]
    else:
        out = np.interp(dst, src, s.values, left=0.0, right=0.0)
    return SpectralDistribution(target, out, s.unit)


def _require_same_grid(a: SpectralDistribution, b: SpectralDistribution):
    if a.grid != b.grid:
        raise GridMismatchError(f"grid mismatch: {a.grid} vs {b.grid}")


def inner_product(a: SpectralDistribution, b: SpectralDistribution) -> float:
    """Rectangle-rule integral of ``a(l) * b(l)`` over the shared grid."""
    _require_same_grid(a, b)
    return float(np.dot(a.values, b.values) * a.grid.step_nm)


@lru_cache(maxsize=None)
def _photopic_table() -> tuple[np.ndarray, np.ndarray]:
    text = resources.files("camsim").joinpath("data/cie1924_photopic.csv").read_text()
    wl, v = _parse_csv_text(text, source="cie1924_photopic.csv")
    return wl, v


def photopic_curve(grid: WavelengthGrid = DEFAULT_GRID) -> np.ndarray:
    """CIE 1924 photopic luminous efficiency V(l) sampled on ``grid``."""
    wl, v = _photopic_table()
    return np.interp(grid.wavelengths, wl, v, left=0.0, right=0.0)


def luminance_weights(grid: WavelengthGrid) -> np.ndarray:
    """Per-sample weights ``w`` such that luminance = ``sum(w * L)``."""
    w = KM_PHOTOPIC * photopic_curve(grid) * grid.step_nm
    if grid.count > 1:
        w[0] *= 0.5
        w[-1] *= 0.5
    return w


def luminance(radiance: SpectralDistribution) -> float:
    """Luminance in cd/m^2 of a spectral radiance."""
    if radiance.unit != "radiance":
        raise UnitError(f"luminance needs a radiance spectrum, got {radiance.unit!r}")
    return float(np.dot(luminance_weights(radiance.grid), radiance.values))


def photon_energy(wavelength_nm) -> np.ndarray:
    """Energy (J) of a photon of the given wavelength(s) in nm."""
    return PLANCK * LIGHT_SPEED / (np.asarray(wavelength_nm, dtype=np.float64) * 1e-9)


# ---------------------------------------------------------------------------
# Spectral CSV
# ---------------------------------------------------------------------------

def _parse_csv_text(text: str, source: str = "<text>"):
    reader = csv.reader(io.StringIO(text))
    rows = [r for r in reader if r and not r[0].startswith("#")]
    if not rows or [c.strip() for c in rows[0][:2]] != ["wavelength_nm", "value"]:
        raise ValueError(f"{source}: header must be 'wavelength_nm,value'")
    try:
        data = np.array([[float(r[0]), float(r[1])] for r in rows[1:]], dtype=np.float64)
    except (ValueError, IndexError) as exc:
        raise ValueError(f"{source}: malformed row ({exc})") from None
    if data.shape[0] == 0:
        raise ValueError(f"{source}: no samples")
    wl, v = data[:, 0], data[:, 1]
    if np.any(np.diff(wl) <= 0):
        raise ValueError(f"{source}: wavelengths must be strictly increasing")
    return wl, v


def read_spectrum_csv(path, unit: str, grid: WavelengthGrid | None = None) -> SpectralDistribution:
    """Read a ``wavelength_nm,value`` CSV.

    If ``grid`` is given the samples are linearly resampled onto it; otherwise
    the file must be evenly spaced and its own grid is used.
    """
    path = Path(path)
    wl, v = _parse_csv_text(path.read_text(), source=str(path))
    if grid is None:
        step = wl[1] - wl[0] if wl.size > 1 else 1.0
        if wl.size > 2 and not np.allclose(np.diff(wl), step, rtol=1e-9, atol=1e-9):
            raise ValueError(f"{path}: uneven spacing; pass a target grid to resample")
        return SpectralDistribution(WavelengthGrid(wl[0], step, wl.size), v, unit)
    return SpectralDistribution(grid, np.interp(grid.wavelengths, wl, v, left=0.0, right=0.0), unit)


def write_spectrum_csv(s: SpectralDistribution, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["wavelength_nm", "value"])
        for wl, v in zip(s.wavelengths, s.values):
            w.writerow([f"{wl:g}", repr(float(v))])


# ---------------------------------------------------------------------------
# Bundled spectra
# ---------------------------------------------------------------------------

def _gauss(wl, mu, sigma):
    return np.exp(-0.5 * ((wl - mu) / sigma) ** 2)


def _logistic(wl, mid, width):
    return 1.0 / (1.0 + np.exp(-(wl - mid) / width))


def default_light_spd(grid: WavelengthGrid = DEFAULT_GRID, peak: float = 1.0) -> SpectralDistribution:
    """Broadband white-LED-like radiance: narrow blue pump plus phosphor hump."""
    wl = grid.wavelengths
    v = 0.95 * _gauss(wl, 452.0, 11.0) + 0.62 * _gauss(wl, 565.0, 55.0) + 0.18 * _gauss(wl, 630.0, 40.0)
    v = v / v.max() * peak
    return SpectralDistribution(grid, v, "radiance")


def red_paper_reflectance(grid: WavelengthGrid = DEFAULT_GRID) -> SpectralDistribution:
    wl = grid.wavelengths
    v = 0.05 + 0.70 * _logistic(wl, 595.0, 12.0)
    return SpectralDistribution(grid, v, "reflectance")


def green_paper_reflectance(grid: WavelengthGrid = DEFAULT_GRID) -> SpectralDistribution:
    wl = grid.wavelengths
    v = 0.06 + 0.38 * _gauss(wl, 530.0, 38.0) + 0.04 * _logistic(wl, 690.0, 10.0)
    return SpectralDistribution(grid, v, "reflectance")


def white_paint_reflectance(grid: WavelengthGrid = DEFAULT_GRID) -> SpectralDistribution:
    wl = grid.wavelengths
    v = 0.80 - 0.08 * _gauss(wl, 400.0, 25.0)
    return SpectralDistribution(grid, v, "reflectance")


@lru_cache(maxsize=None)
def _mcc_table():
    text = resources.files("camsim").joinpath("data/mcc_reflectance.csv").read_text()
    rows = list(csv.reader(io.StringIO(text)))
    names = tuple(rows[0][1:])
    data = np.array([[float(x) for x in r] for r in rows[1:] if r], dtype=np.float64)
    return names, data[:, 0], data[:, 1:]


MCC_GRAY_SERIES = ("white", "neutral_8", "neutral_6_5", "neutral_5", "neutral_3_5", "black")


def mcc_reflectances(grid: WavelengthGrid = DEFAULT_GRID) -> dict[str, SpectralDistribution]:
    """The 24 Macbeth ColorChecker patches (BabelColor average), row-major order."""
    names, wl, data = _mcc_table()
    out = {}
    for i, name in enumerate(names):
        v = np.clip(np.interp(grid.wavelengths, wl, data[:, i], left=0.0, right=0.0), 0.0, 1.0)
        out[name] = SpectralDistribution(grid, v, "reflectance")
    return out
