"""Spectral rasters (radiance and irradiance cubes) and their file format.

File layout::

    SPECTRAL-RASTER v1
    width <W>
    height <H>
    grid <start_nm> <step_nm> <count>
    unit <radiance|irradiance>
    pitch_um <sample pitch at the sensor plane>
    end
    <count planes of H*W little-endian float32, wavelength-major, rows top-down>
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from camsim.radiometry import SpectralDistribution, WavelengthGrid, luminance_weights

MAGIC = "SPECTRAL-RASTER v1"
CUBE_UNITS = ("radiance", "irradiance")


@dataclass(frozen=True, eq=False)
class SpectralCube:
    values: np.ndarray = field(repr=False)  # (H, W, n_wavelengths)
    grid: WavelengthGrid
    unit: str = "radiance"
    pitch_um: float = 1.4

    def __post_init__(self):
        if self.unit not in CUBE_UNITS:
            raise ValueError(f"cube unit must be one of {CUBE_UNITS}, got {self.unit!r}")
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 3 or v.shape[2] != self.grid.count:
            raise ValueError(f"cube values must be (H, W, {self.grid.count}), got {v.shape}")
        if np.any(v < 0) or not np.all(np.isfinite(v)):
            raise ValueError("cube values must be finite and non-negative")
        if not self.pitch_um > 0:
            raise ValueError("pitch_um must be positive")
        object.__setattr__(self, "values", v)

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]

    def pixel(self, row: int, col: int) -> SpectralDistribution:
        return SpectralDistribution(self.grid, self.values[row, col], self.unit)

    def with_values(self, values, unit: str | None = None, pitch_um: float | None = None) -> "SpectralCube":
        return SpectralCube(
            values, self.grid, self.unit if unit is None else unit,
            self.pitch_um if pitch_um is None else pitch_um,
        )

    def luminance_map(self) -> np.ndarray:
        """Per-pixel luminance (cd/m^2); only meaningful for radiance cubes."""
        if self.unit != "radiance":
            raise ValueError("luminance is defined for radiance cubes only")
        return self.values @ luminance_weights(self.grid)

    def mean_luminance(self) -> float:
        return float(self.luminance_map().mean())

    def band_mean(self, lo_nm: float, hi_nm: float) -> np.ndarray:
        """Mean over samples with ``lo_nm <= wavelength < hi_nm``."""
        wl = self.grid.wavelengths
        sel = (wl >= lo_nm) & (wl < hi_nm)
        if not np.any(sel):
            raise ValueError(f"no samples in [{lo_nm}, {hi_nm}) nm")
        return self.values[:, :, sel].mean(axis=2)


def RadianceCube(values, grid: WavelengthGrid, pitch_um: float = 1.4) -> SpectralCube:
    return SpectralCube(values, grid, "radiance", pitch_um)


def IrradianceCube(values, grid: WavelengthGrid, pitch_um: float = 1.4) -> SpectralCube:
    return SpectralCube(values, grid, "irradiance", pitch_um)


def write_cube(cube: SpectralCube, path) -> None:
    g = cube.grid
    header = "\n".join([
        MAGIC,
        f"width {cube.width}",
        f"height {cube.height}",
        f"grid {g.start_nm!r} {g.step_nm!r} {g.count}",
        f"unit {cube.unit}",
        f"pitch_um {cube.pitch_um!r}",
        "end",
    ]) + "\n"
    planes = np.ascontiguousarray(np.moveaxis(cube.values, 2, 0), dtype="<f4")
    with open(path, "wb") as fh:
        fh.write(header.encode("ascii"))
        fh.write(planes.tobytes())


def read_cube(path) -> SpectralCube:
    path = Path(path)
    with open(path, "rb") as fh:
        if fh.readline().decode("ascii", "replace").strip() != MAGIC:
            raise ValueError(f"{path}: not a {MAGIC} file")
        fields = {}
        while True:
            line = fh.readline()
            if not line:
                raise ValueError(f"{path}: header not terminated by 'end'")
            text = line.decode("ascii").strip()
            if text == "end":
                break
            key, _, rest = text.partition(" ")
            fields[key] = rest.split()
        try:
            w = int(fields["width"][0])
            h = int(fields["height"][0])
            start, step, count = fields["grid"]
            grid = WavelengthGrid(float(start), float(step), int(count))
            unit = fields["unit"][0]
            pitch = float(fields.get("pitch_um", ["1.4"])[0])
        except (KeyError, IndexError, ValueError) as exc:
            raise ValueError(f"{path}: bad header ({exc})") from None
        data = np.frombuffer(fh.read(), dtype="<f4")
    if data.size != w * h * grid.count:
        raise ValueError(f"{path}: expected {w * h * grid.count} floats, found {data.size}")
    values = np.moveaxis(data.reshape(grid.count, h, w), 0, 2).astype(np.float64)
    return SpectralCube(values, grid, unit, pitch)
