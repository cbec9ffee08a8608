"""Pixel signal chain: spectral irradiance to raw mosaicked digital values.

Per pixel, in order: pick the QE curve from the CFA site, integrate photons to
an expected electron count, draw Poisson shot noise and clip at the well,
apply PRNU gain, dark voltage, DSNU offset and read noise in the voltage
domain, apply analog gain and offset, clip to the voltage swing and quantize.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from camsim.analysis.qe import REFERENCE_M, apply_qe_transform
from camsim.cube import SpectralCube
from camsim.radiometry import (
    DEFAULT_GRID,
    LIGHT_SPEED,
    PLANCK,
    GridMismatchError,
    SpectralDistribution,
    UnitError,
    WavelengthGrid,
    resample,
)
from camsim.raw import DigitalImage, channel_map, check_cfa
from camsim.rng import STREAM_NOISE, STREAM_PATTERN, box_muller, poisson_array, uniform_array

# tolerance on well_capacity * conversion_gain versus voltage_swing
ELECTRICAL_TOLERANCE = 1e-3


class SensorError(ValueError):
    pass


def _gauss(wl, mu, sigma):
    return np.exp(-0.5 * ((wl - mu) / sigma) ** 2)


def published_qe(grid: WavelengthGrid = DEFAULT_GRID) -> tuple[SpectralDistribution, ...]:
    """Plausible datasheet-style R, G, B quantum efficiency curves.

    Smooth sums of Gaussians standing in for a vendor's published curves,
    including the small cross-channel lobes real colour filters show.
    """
    wl = grid.wavelengths
    r = 0.86 * _gauss(wl, 605.0, 34.0) + 0.10 * _gauss(wl, 530.0, 35.0) + 0.04 * _gauss(wl, 450.0, 25.0)
    g = 0.84 * _gauss(wl, 535.0, 38.0) + 0.08 * _gauss(wl, 465.0, 22.0) + 0.06 * _gauss(wl, 615.0, 30.0)
    b = 0.80 * _gauss(wl, 458.0, 27.0) + 0.08 * _gauss(wl, 530.0, 35.0) + 0.02 * _gauss(wl, 620.0, 30.0)
    return tuple(SpectralDistribution(grid, np.clip(v, 0.0, 1.0), "qe") for v in (r, g, b))


def default_qe(grid: WavelengthGrid = DEFAULT_GRID) -> tuple[SpectralDistribution, ...]:
    """Published curves mixed by the calibrated 3x3 matrix; the simulation default."""
    return apply_qe_transform(published_qe(grid), REFERENCE_M)


@dataclass(frozen=True, eq=False)
class SensorConfig:
    """Electrical, geometric and colour parameters of one sensor.

    Field names carry their units; defaults are the IMX363 datasheet values
    with unit analog gain and no pedestal.
    """

    pixel_size_um: tuple[float, float] = (1.4, 1.4)
    fill_factor_percent: float = 100.0
    well_capacity_e: float = 6000.0
    voltage_swing_v: float = 0.4591
    conversion_gain_v_per_e: float = 7.65e-5
    analog_gain: float = 1.0
    analog_offset_mv: float = 0.0
    quantization_bits: int = 12
    dsnu_mv: float = 0.64
    prnu_percent: float = 0.7
    dark_voltage_mv_per_s: float = 0.0
    read_noise_mv: float = 5.0
    qe: tuple = field(default_factory=default_qe, repr=False)
    cfa_pattern: str = "RGGB"
    exposure_time_s: float = 1.0 / 30.0
    rows: int = 128
    cols: int = 128
    pattern_seed: int = 0
    noise_seed: int = 0
    shot_noise: bool = True

    def __post_init__(self):
        object.__setattr__(self, "pixel_size_um", tuple(float(v) for v in self.pixel_size_um))
        object.__setattr__(self, "cfa_pattern", check_cfa(self.cfa_pattern))
        if len(self.pixel_size_um) != 2 or min(self.pixel_size_um) <= 0:
            raise SensorError("pixel_size_um must be two positive numbers")
        if not 0 < self.fill_factor_percent <= 100:
            raise SensorError("fill_factor_percent must lie in (0, 100]")
        for name in ("well_capacity_e", "voltage_swing_v", "conversion_gain_v_per_e",
                     "analog_gain", "exposure_time_s"):
            if not getattr(self, name) > 0:
                raise SensorError(f"{name} must be positive")
        for name in ("dsnu_mv", "prnu_percent", "dark_voltage_mv_per_s", "read_noise_mv"):
            if not getattr(self, name) >= 0:
                raise SensorError(f"{name} must be non-negative")
        if int(self.quantization_bits) != self.quantization_bits or not 8 <= self.quantization_bits <= 16:
            raise SensorError("quantization_bits must be an integer in [8, 16]")
        if self.rows < 1 or self.cols < 1:
            raise SensorError("rows and cols must be positive")
        full_well_v = self.well_capacity_e * self.conversion_gain_v_per_e
        if full_well_v > self.voltage_swing_v * (1.0 + ELECTRICAL_TOLERANCE):
            raise SensorError(
                f"well capacity x conversion gain = {full_well_v:.6g} V exceeds the "
                f"{self.voltage_swing_v:.6g} V voltage swing"
            )
        qe = tuple(self.qe)
        if len(qe) != 3:
            raise SensorError("qe needs exactly three curves (R, G, B)")
        for q in qe:
            if q.unit != "qe":
                raise UnitError(f"QE curves must carry the 'qe' unit tag, got {q.unit!r}")
            if q.grid != qe[0].grid:
                raise GridMismatchError("R, G and B QE curves must share a grid")
        object.__setattr__(self, "qe", qe)

    @property
    def grid(self) -> WavelengthGrid:
        return self.qe[0].grid

    @property
    def max_dn(self) -> int:
        return (1 << int(self.quantization_bits)) - 1

    @property
    def pixel_area_m2(self) -> float:
        return self.pixel_size_um[0] * self.pixel_size_um[1] * 1e-12

    @property
    def dn_per_volt(self) -> float:
        """DN per volt at the pixel output, analog gain included."""
        return self.analog_gain * self.max_dn / self.voltage_swing_v

    @property
    def dn_per_electron(self) -> float:
        return self.conversion_gain_v_per_e * self.dn_per_volt

    def electrical_mismatch(self) -> float:
        """Relative gap between full-well voltage and voltage swing."""
        return abs(self.well_capacity_e * self.conversion_gain_v_per_e / self.voltage_swing_v - 1.0)

    def noiseless(self) -> "SensorConfig":
        return replace(self, dsnu_mv=0.0, prnu_percent=0.0, read_noise_mv=0.0,
                       dark_voltage_mv_per_s=0.0, shot_noise=False)

    def with_grid(self, grid: WavelengthGrid) -> "SensorConfig":
        return replace(self, qe=tuple(resample(q, grid) for q in self.qe))

    def to_dict(self) -> dict:
        d = {k: v for k, v in asdict(self).items() if k != "qe"}
        d["pixel_size_um"] = list(self.pixel_size_um)
        g = self.grid
        d["qe"] = {
            "start_nm": g.start_nm,
            "step_nm": g.step_nm,
            **{c: q.values.tolist() for c, q in zip("rgb", self.qe)},
        }
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SensorConfig":
        d = dict(d)
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(d) - known
        if unknown:
            raise SensorError(f"unknown sensor fields: {sorted(unknown)}")
        if "qe" in d:
            q = d["qe"]
            grid = WavelengthGrid(q["start_nm"], q["step_nm"], len(q["r"]))
            d["qe"] = tuple(SpectralDistribution(grid, q[c], "qe") for c in "rgb")
        return cls(**d)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_json(cls, text: str) -> "SensorConfig":
        return cls.from_dict(json.loads(text))


def load_sensor_config(path) -> SensorConfig:
    return SensorConfig.from_json(Path(path).read_text())


def save_sensor_config(config: SensorConfig, path) -> None:
    Path(path).write_text(config.to_json() + "\n")


# ---------------------------------------------------------------------------
# photons to electrons

def _electron_weights(qe: SpectralDistribution, config: SensorConfig) -> np.ndarray:
    """Per-band factor turning irradiance (W m^-2 nm^-1) into expected electrons."""
    wl_m = qe.grid.wavelengths * 1e-9
    scale = config.pixel_area_m2 * config.fill_factor_percent / 100.0 * config.exposure_time_s
    return scale * qe.values * wl_m / (PLANCK * LIGHT_SPEED) * qe.grid.step_nm


def mean_electrons(irradiance: SpectralDistribution, qe: SpectralDistribution,
                   config: SensorConfig) -> float:
    """Expected photo-electron count for one pixel under a uniform irradiance."""
    if irradiance.unit != "irradiance":
        raise UnitError(f"expected an irradiance spectrum, got {irradiance.unit!r}")
    if irradiance.grid != qe.grid:
        raise GridMismatchError(f"grid mismatch: {irradiance.grid} vs {qe.grid}")
    return float(np.dot(irradiance.values, _electron_weights(qe, config)))


def _check_cube(cube: SpectralCube, config: SensorConfig):
    if cube.unit != "irradiance":
        raise UnitError(f"sensor input must be an irradiance cube, got {cube.unit!r}")
    if (cube.height, cube.width) != (config.rows, config.cols):
        raise SensorError(
            f"cube is {cube.height}x{cube.width} but the sensor is {config.rows}x{config.cols}"
        )
    if cube.grid != config.grid:
        raise GridMismatchError(f"cube grid {cube.grid} differs from QE grid {config.grid}")


def electron_map(cube: SpectralCube, config: SensorConfig) -> np.ndarray:
    """Expected electrons per pixel with the QE of each pixel's CFA site."""
    _check_cube(cube, config)
    w = np.stack([_electron_weights(q, config) for q in config.qe], axis=1)  # (n_wl, 3)
    per_channel = cube.values @ w
    ch = channel_map(config.cfa_pattern, config.rows, config.cols)
    return np.take_along_axis(per_channel, ch[..., None], axis=2)[..., 0]


def integrate_pixels(cube: SpectralCube, factor: int) -> SpectralCube:
    """Average ``factor x factor`` blocks of an oversampled cube into pixels."""
    factor = int(factor)
    if factor < 1:
        raise ValueError("factor must be >= 1")
    h, w = cube.height // factor, cube.width // factor
    if h * factor != cube.height or w * factor != cube.width:
        raise ValueError(f"cube size {cube.height}x{cube.width} is not a multiple of {factor}")
    v = cube.values.reshape(h, factor, w, factor, -1).mean(axis=(1, 3))
    return cube.with_values(v, pitch_um=cube.pitch_um * factor)


# ---------------------------------------------------------------------------
# fixed patterns and exposure

@dataclass(frozen=True, eq=False)
class FixedPatternMaps:
    offset_mv: np.ndarray = field(repr=False)  # DSNU, mV per pixel
    gain: np.ndarray = field(repr=False)  # PRNU, multiplicative per pixel

    def __post_init__(self):
        if np.shape(self.offset_mv) != np.shape(self.gain) or np.ndim(self.gain) != 2:
            raise SensorError("offset and gain maps must be 2-D and the same shape")

    @property
    def shape(self) -> tuple[int, int]:
        return self.gain.shape


def _normal_field(seed: int, stream: int, dim: int, rows: int, cols: int) -> np.ndarray:
    y, x = np.indices((rows, cols))
    u1 = uniform_array(seed, stream, dim, y, x)
    u2 = uniform_array(seed, stream, dim + 1, y, x)
    return box_muller(u1, u2)


def make_fixed_patterns(config: SensorConfig) -> FixedPatternMaps:
    r, c = config.rows, config.cols
    offset = np.zeros((r, c))
    gain = np.ones((r, c))
    if config.dsnu_mv > 0:
        offset = config.dsnu_mv * _normal_field(config.pattern_seed, STREAM_PATTERN, 0, r, c)
    if config.prnu_percent > 0:
        gain = 1.0 + config.prnu_percent / 100.0 * _normal_field(config.pattern_seed, STREAM_PATTERN, 2, r, c)
    return FixedPatternMaps(offset, gain)


def expose(cube: SpectralCube, config: SensorConfig, patterns: FixedPatternMaps | None = None,
           frame: int = 0) -> DigitalImage:
    """One raw frame.  Temporal noise is keyed on ``(noise_seed, frame, pixel)``."""
    if patterns is None:
        patterns = make_fixed_patterns(config)
    if patterns.shape != (config.rows, config.cols):
        raise SensorError(f"pattern maps are {patterns.shape}, sensor is {(config.rows, config.cols)}")
    mean_e = electron_map(cube, config)
    r, c = mean_e.shape
    seed = config.noise_seed
    y, x = np.indices((r, c))
    base = 16 * int(frame)

    if config.shot_noise:
        u = uniform_array(seed, STREAM_NOISE, base, y, x)
        z = box_muller(uniform_array(seed, STREAM_NOISE, base + 1, y, x),
                       uniform_array(seed, STREAM_NOISE, base + 2, y, x))
        electrons = poisson_array(mean_e, u, z)
    else:
        electrons = mean_e
    electrons = np.minimum(electrons, config.well_capacity_e)

    v = electrons * config.conversion_gain_v_per_e * patterns.gain
    v = v + (config.dark_voltage_mv_per_s * config.exposure_time_s + patterns.offset_mv) * 1e-3
    if config.read_noise_mv > 0:
        v = v + config.read_noise_mv * 1e-3 * box_muller(
            uniform_array(seed, STREAM_NOISE, base + 3, y, x),
            uniform_array(seed, STREAM_NOISE, base + 4, y, x))
    v = np.clip(v * config.analog_gain + config.analog_offset_mv * 1e-3, 0.0, config.voltage_swing_v)
    dn = np.floor(v / config.voltage_swing_v * config.max_dn + 0.5)
    return DigitalImage(dn.astype(np.uint16), config.quantization_bits, config.cfa_pattern)


def expose_stack(cube: SpectralCube, config: SensorConfig, patterns: FixedPatternMaps | None = None,
                 count: int = 1) -> list[DigitalImage]:
    """``count`` frames sharing fixed patterns, with independent temporal noise."""
    if count < 1:
        raise SensorError("count must be >= 1")
    if patterns is None:
        patterns = make_fixed_patterns(config)
    return [expose(cube, config, patterns, frame=k) for k in range(count)]
