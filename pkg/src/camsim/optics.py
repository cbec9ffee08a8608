"""Shift-invariant wavefront optics.

The lens is a circular pupil with a Zernike wavefront error (ANSI single
index, orthonormal over the unit disc, coefficients in micrometres of optical
path).  The PSF is ``|FT(pupil)|^2`` and the OTF is its Fourier transform,
normalised to one at zero frequency.  Scene radiance becomes sensor irradiance
through per-wavelength convolution, the camera-equation factor
``pi / (4 N^2)`` and a radial relative-illumination polynomial.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import polynomial as P
from scipy import ndimage

from camsim.cube import SpectralCube


class OpticsError(ValueError):
    pass


@dataclass(frozen=True)
class OpticsConfig:
    focal_length_mm: float = 4.38
    f_number: float = 1.73
    # ((j, c_j in um), ...) with ANSI single indices
    zernike: tuple = ()
    # ascending-power polynomial in normalised image height, constant term 1
    relative_illumination: tuple = (1.0,)
    pupil_grid_size: int = 512
    psf_mode: str = "wavefront"  # "wavefront" or "delta"

    def __post_init__(self):
        if not self.f_number > 0:
            raise OpticsError("f_number must be positive")
        if not self.focal_length_mm > 0:
            raise OpticsError("focal_length_mm must be positive")
        z = self.zernike.items() if isinstance(self.zernike, dict) else self.zernike
        z = tuple(sorted((int(j), float(c)) for j, c in z))
        for j, _ in z:
            if j < 0:
                raise OpticsError(f"unsupported Zernike index {j}")
        object.__setattr__(self, "zernike", z)
        ri = tuple(float(c) for c in self.relative_illumination)
        if not ri or abs(ri[0] - 1.0) > 1e-12:
            raise OpticsError("relative illumination must equal 1 on axis")
        r = np.linspace(0.0, 1.0, 201)
        vals = P.polyval(r, ri)
        if np.any(vals <= 0) or np.any(vals > 1.0 + 1e-12):
            raise OpticsError("relative illumination must stay within (0, 1] for r in [0, 1]")
        object.__setattr__(self, "relative_illumination", ri)
        if self.psf_mode not in ("wavefront", "delta"):
            raise OpticsError(f"unknown psf_mode {self.psf_mode!r}")
        if self.psf_mode == "wavefront" and int(self.pupil_grid_size) < 64:
            raise OpticsError("pupil_grid_size must be at least 64")
        object.__setattr__(self, "pupil_grid_size", int(self.pupil_grid_size))

    @property
    def coefficients(self) -> dict[int, float]:
        return dict(self.zernike)

    def with_defocus(self, c4_um: float) -> "OpticsConfig":
        z = self.coefficients
        z[4] = float(c4_um)
        return OpticsConfig(
            self.focal_length_mm, self.f_number, tuple(z.items()),
            self.relative_illumination, self.pupil_grid_size, self.psf_mode,
        )

    def to_dict(self) -> dict:
        return {
            "focal_length_mm": self.focal_length_mm,
            "f_number": self.f_number,
            "zernike": {str(j): c for j, c in self.zernike},
            "relative_illumination": list(self.relative_illumination),
            "pupil_grid_size": self.pupil_grid_size,
            "psf_mode": self.psf_mode,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "OpticsConfig":
        known = {"focal_length_mm", "f_number", "zernike", "relative_illumination",
                 "pupil_grid_size", "psf_mode"}
        extra = set(d) - known
        if extra:
            raise OpticsError(f"unknown optics keys: {sorted(extra)}")
        d = dict(d)
        if "zernike" in d:
            d["zernike"] = tuple((int(j), float(c)) for j, c in dict(d["zernike"]).items())
        if "relative_illumination" in d:
            d["relative_illumination"] = tuple(d["relative_illumination"])
        return cls(**d)


# ---------------------------------------------------------------------------
# Zernike polynomials
# ---------------------------------------------------------------------------

def ansi_to_nm(j: int) -> tuple[int, int]:
    """ANSI single index -> (radial order n, azimuthal frequency m)."""
    if int(j) != j or j < 0:
        raise OpticsError(f"unsupported Zernike index {j}")
    n = int(math.ceil((-3.0 + math.sqrt(9.0 + 8.0 * j)) / 2.0))
    m = 2 * j - n * (n + 2)
    return n, m


def zernike(j: int, rho, theta) -> np.ndarray:
    """Orthonormal ANSI Zernike polynomial ``Z_j`` (unit RMS over the disc)."""
    n, m = ansi_to_nm(j)
    rho = np.asarray(rho, dtype=np.float64)
    am = abs(m)
    radial = np.zeros_like(rho)
    for k in range((n - am) // 2 + 1):
        coef = ((-1) ** k * math.factorial(n - k)
                / (math.factorial(k) * math.factorial((n + am) // 2 - k) * math.factorial((n - am) // 2 - k)))
        radial = radial + coef * rho ** (n - 2 * k)
    if m == 0:
        return math.sqrt(n + 1) * radial
    norm = math.sqrt(2 * (n + 1))
    if m > 0:
        return norm * radial * np.cos(am * np.asarray(theta))
    return norm * radial * np.sin(am * np.asarray(theta))


def _pupil_coords(n: int):
    x = (np.arange(n) + 0.5 - n / 2.0) / (n / 2.0)
    xx, yy = np.meshgrid(x, x)
    return np.hypot(xx, yy), np.arctan2(yy, xx)


def wavefront(config: OpticsConfig) -> tuple[np.ndarray, np.ndarray]:
    """Wavefront error (um) on the pupil grid and the boolean aperture mask."""
    rho, theta = _pupil_coords(config.pupil_grid_size)
    mask = rho <= 1.0
    w = np.zeros_like(rho)
    for j, c in config.zernike:
        if c != 0.0:
            w += c * zernike(j, rho, theta)
    return np.where(mask, w, 0.0), mask


def wavefront_rms(config: OpticsConfig) -> float:
    """RMS wavefront error over the aperture, piston removed."""
    w, mask = wavefront(config)
    vals = w[mask]
    return float(np.sqrt(np.mean((vals - vals.mean()) ** 2)))


def pupil_function(config: OpticsConfig, wavelength_nm: float) -> np.ndarray:
    """Complex pupil ``circ(rho) * exp(i 2 pi W / lambda)`` on an n x n grid."""
    w, mask = wavefront(config)
    lam_um = wavelength_nm * 1e-3
    return np.where(mask, np.exp(2j * np.pi * w / lam_um), 0.0)


# ---------------------------------------------------------------------------
# PSF / OTF
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class PointSpread:
    values: np.ndarray = field(repr=False)  # centred, unit sum
    spacing_um: float
    wavelength_nm: float

    def central_row(self):
        n = self.values.shape[0]
        x = (np.arange(n) - n // 2) * self.spacing_um
        return x, self.values[n // 2]


@dataclass(frozen=True, eq=False)
class TransferFunction:
    values: np.ndarray = field(repr=False)  # complex, centred (index n//2 is DC)
    spacing_cy_per_um: float
    cutoff_cy_per_um: float
    wavelength_nm: float

    def frequencies(self) -> np.ndarray:
        n = self.values.shape[0]
        return (np.arange(n) - n // 2) * self.spacing_cy_per_um

    def at(self, fx, fy) -> np.ndarray:
        """Bilinearly interpolated OTF at frequencies in cycles/um."""
        fx, fy = np.broadcast_arrays(np.asarray(fx, dtype=np.float64), np.asarray(fy, dtype=np.float64))
        n = self.values.shape[0]
        coords = np.array([fy / self.spacing_cy_per_um + n // 2, fx / self.spacing_cy_per_um + n // 2])
        flat = coords.reshape(2, -1)
        re = ndimage.map_coordinates(self.values.real, flat, order=1, mode="constant", cval=0.0)
        im = ndimage.map_coordinates(self.values.imag, flat, order=1, mode="constant", cval=0.0)
        out = (re + 1j * im).reshape(fx.shape)
        # the sampled OTF is exactly zero past cutoff; interpolation must not leak
        return np.where(np.hypot(fx, fy) >= self.cutoff_cy_per_um, 0.0, out)


def _transfer(config: OpticsConfig, wavelength_nm: float):
    n = config.pupil_grid_size
    m = 2 * n
    pupil = np.zeros((m, m), dtype=np.complex128)
    pupil[:n, :n] = pupil_function(config, wavelength_nm)
    amp = np.fft.fft2(pupil)
    psf = amp.real ** 2 + amp.imag ** 2
    psf /= psf.sum()
    otf = np.fft.fft2(psf)
    otf /= otf[0, 0]
    dx = wavelength_nm * 1e-3 * config.f_number * n / m
    return psf, otf, dx


def psf(config: OpticsConfig, wavelength_nm: float) -> PointSpread:
    """Unit-sum PSF sampled at ``lambda N / 2`` (Nyquist for the intensity PSF)."""
    p, _, dx = _transfer(config, wavelength_nm)
    return PointSpread(np.fft.fftshift(p), dx, wavelength_nm)


def otf(config: OpticsConfig, wavelength_nm: float) -> TransferFunction:
    _, o, dx = _transfer(config, wavelength_nm)
    m = o.shape[0]
    return TransferFunction(
        np.fft.fftshift(o), 1.0 / (m * dx),
        1.0 / (wavelength_nm * 1e-3 * config.f_number), wavelength_nm,
    )


def diffraction_mtf(f_norm) -> np.ndarray:
    """Analytic MTF of an aberration-free circular pupil; ``f_norm = f / f_cutoff``."""
    f = np.clip(np.abs(np.asarray(f_norm, dtype=np.float64)), 0.0, 1.0)
    return (2.0 / np.pi) * (np.arccos(f) - f * np.sqrt(1.0 - f * f))


def cutoff_frequency(f_number: float, wavelength_nm: float) -> float:
    """Incoherent cutoff in cycles/um."""
    return 1.0 / (wavelength_nm * 1e-3 * f_number)


def defocus_coefficient(focal_length_mm: float, f_number: float,
                        focus_distance_m: float, object_distance_m: float) -> float:
    """Defocus Zernike coefficient c4 (um) for an object off the focus plane.

    Thin-lens image distances for the two object distances give the
    longitudinal shift ``dz``; the peak wavefront defocus is
    ``W020 = dz / (8 N^2)`` and ``c4 = W020 / (2 sqrt 3)``.
    """
    f = focal_length_mm * 1e-3
    for name, d in (("focus_distance", focus_distance_m), ("object_distance", object_distance_m)):
        if not d > f:
            raise OpticsError(f"{name} {d} m must exceed the focal length {f} m")

    def image_distance(u):
        return 1.0 / (1.0 / f - 1.0 / u)

    dz_um = abs(image_distance(object_distance_m) - image_distance(focus_distance_m)) * 1e6
    w020 = dz_um / (8.0 * f_number ** 2)
    return w020 / (2.0 * math.sqrt(3.0))


# ---------------------------------------------------------------------------
# Radiance -> irradiance
# ---------------------------------------------------------------------------

def normalized_radius(height: int, width: int) -> np.ndarray:
    """Distance of each pixel centre from the image centre over the half-diagonal."""
    y = np.arange(height) + 0.5 - height / 2.0
    x = np.arange(width) + 0.5 - width / 2.0
    return np.hypot(*np.meshgrid(x, y)) / math.hypot(width / 2.0, height / 2.0)


def relative_illumination(config: OpticsConfig, r) -> np.ndarray:
    return P.polyval(np.asarray(r, dtype=np.float64), config.relative_illumination)


def _encircled_radius_um(psf_centred: np.ndarray, dx: float, fraction: float = 0.999) -> float:
    n = psf_centred.shape[0]
    c = (np.arange(n) - n // 2) * dx
    r = np.hypot(*np.meshgrid(c, c)).ravel()
    order = np.argsort(r)
    cum = np.cumsum(psf_centred.ravel()[order])
    return float(r[order][np.searchsorted(cum, fraction * cum[-1])])


def _blur_plane(plane: np.ndarray, config: OpticsConfig, wavelength_nm: float, pitch_um: float) -> np.ndarray:
    p, o, dx = _transfer(config, wavelength_nm)
    radius_um = _encircled_radius_um(np.fft.fftshift(p), dx)
    pad = int(math.ceil(radius_um / pitch_um)) + 2
    padded = np.pad(plane, pad, mode="edge")
    h, w = padded.shape
    tf = TransferFunction(np.fft.fftshift(o), 1.0 / (o.shape[0] * dx),
                          cutoff_frequency(config.f_number, wavelength_nm), wavelength_nm)
    fy = np.fft.fftfreq(h, d=pitch_um)
    fx = np.fft.fftfreq(w, d=pitch_um)
    fxx, fyy = np.meshgrid(fx, fy)
    kernel_tf = tf.at(fxx, fyy)
    out = np.fft.ifft2(np.fft.fft2(padded) * kernel_tf).real
    return out[pad:pad + plane.shape[0], pad:pad + plane.shape[1]]


def radiance_to_irradiance(cube: SpectralCube, config: OpticsConfig) -> SpectralCube:
    """Sensor-plane spectral irradiance (W m^-2 nm^-1) from scene radiance."""
    if cube.unit != "radiance":
        raise OpticsError(f"expected a radiance cube, got {cube.unit!r}")
    factor = math.pi / (4.0 * config.f_number ** 2)
    ri = relative_illumination(config, normalized_radius(cube.height, cube.width))
    out = np.empty_like(cube.values)
    for k, wl in enumerate(cube.grid.wavelengths):
        plane = cube.values[:, :, k]
        if config.psf_mode == "wavefront" and np.ptp(plane) > 0:
            plane = _blur_plane(plane, config, wl, cube.pitch_um)
        out[:, :, k] = plane * factor * ri
    np.maximum(out, 0.0, out=out)
    return SpectralCube(out, cube.grid, "irradiance", cube.pitch_um)


# ---------------------------------------------------------------------------
# Lens shading fit
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RelativeIlluminationFit:
    coefficients: tuple  # ascending powers, constant term 1
    residual_rms: float  # in units of the on-axis value
    on_axis_value: float


def fit_relative_illumination(flat_field) -> RelativeIlluminationFit:
    """Fit ``1 + a2 r^2 + a4 r^4`` to an image of a uniform source."""
    img = np.asarray(flat_field, dtype=np.float64)
    if img.ndim == 3:
        img = img.mean(axis=2)
    if img.ndim != 2:
        raise OpticsError("flat field must be a 2-D image")
    r = normalized_radius(*img.shape).ravel()
    if np.ptp(r) < 1e-9:
        raise OpticsError("degenerate flat field: all samples at the same radius")
    a = np.column_stack([np.ones_like(r), r ** 2, r ** 4])
    coef, _, rank, _ = np.linalg.lstsq(a, img.ravel(), rcond=None)
    if rank < 3:
        raise OpticsError("degenerate flat field: too few distinct radii for the fit")
    c0, c2, c4 = coef
    if c0 <= 0:
        raise OpticsError("flat field has non-positive on-axis level")
    resid = img.ravel() / c0 - a @ np.array([1.0, c2 / c0, c4 / c0])
    return RelativeIlluminationFit((1.0, 0.0, c2 / c0, 0.0, c4 / c0),
                                   float(np.sqrt(np.mean(resid ** 2))), float(c0))


# ---------------------------------------------------------------------------
# Export
# ---------------------------------------------------------------------------

def write_psf_csv(ps: PointSpread, path) -> None:
    x, v = ps.central_row()
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["position_um", "value"])
        w.writerows(zip(x.tolist(), v.tolist()))


def write_otf_csv(tf: TransferFunction, path) -> None:
    f = tf.frequencies()
    row = tf.values[tf.values.shape[0] // 2]
    keep = (f >= 0) & (f <= tf.cutoff_cy_per_um)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["frequency_cy_per_mm", "mtf", "otf_real", "otf_imag"])
        for fi, o in zip(f[keep], row[keep]):
            w.writerow([fi * 1e3, abs(o), o.real, o.imag])
