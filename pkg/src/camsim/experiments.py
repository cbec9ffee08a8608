"""Reusable end-to-end experiments shared by the scripts, CLI and acceptance tests."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from camsim.analysis.demosaic import demosaic_bilinear
from camsim.analysis.mtf import MtfCurve, edge_fit, pixel_aperture_mtf, slanted_edge_mtf
from camsim.analysis.stats import line_profile, rg_ratio
from camsim.cube import SpectralCube
from camsim.optics import OpticsConfig, cutoff_frequency, diffraction_mtf, radiance_to_irradiance
from camsim.render import RenderConfig, render
from camsim.scene import build_cornell_box, build_furnace, mcc_patch_centers, place_mcc, slanted_edge_fixture
from camsim.sensor import SensorConfig, electron_map, expose, integrate_pixels

# chart centres on the back wall for the left, centre and right placements
MCC_POSITIONS = {"left": 0.14, "center": 0.275, "right": 0.41}
MCC_HEIGHT = 0.43
MCC_WIDTH = 0.20


def exposure_for_fill(cube: SpectralCube, config: SensorConfig, fill: float = 0.7,
                      percentile: float = 99.5) -> float:
    """Exposure time putting the ``percentile`` pixel at ``fill`` of the well."""
    probe = replace(config, exposure_time_s=1.0)
    e = electron_map(cube, probe)
    level = np.percentile(e, percentile)
    if not level > 0:
        raise ValueError("irradiance is zero everywhere")
    return float(fill * config.well_capacity_e / level)


# ---------------------------------------------------------------------------
# slanted edge

@dataclass
class EdgeResult:
    curve: MtfCurve
    raw: np.ndarray
    irradiance: SpectralCube
    weights: np.ndarray  # per-band polychromatic weights, normalised to sum 1
    edge: tuple[float, float]


def edge_radiance(spp: int = 256, seed: int = 0, sensor_pixels: int = 64, oversample: int = 4,
                  distance_m: float = 0.5, angle_deg: float = 5.0, threads: int | None = None,
                  **fixture):
    """Render the slanted-edge fixture; extra keywords go to :func:`slanted_edge_fixture`."""
    scene = slanted_edge_fixture(distance_m=distance_m, angle_deg=angle_deg,
                                 sensor_pixels=sensor_pixels, oversample=oversample, **fixture)
    return scene, render(scene, RenderConfig(samples_per_pixel=spp, seed=seed), threads=threads)


# A wide field for strong defocus.  3.5 um of defocus blurs over a disc of
# ~60 px radius, so the analysed 128 px region keeps the edge plateaus in view
# and a 64 px margin on every side supplies the light that blur pulls in from
# outside it.  Two render samples per pixel side push the replica that a
# sampled PSF convolution leaves at the sampling frequency out past cutoff.
# The target is raised above the blocks so nothing occludes it.
WIDE_EDGE = dict(sensor_pixels=256, oversample=2, target_size=0.08, target_center=(0.275, 0.45, 0.42))
WIDE_MARGIN = 64


def edge_mtf(radiance: SpectralCube, optics: OpticsConfig, oversample: int = 4,
             pixel_pitch_um: float = 1.4, edge: tuple[float, float] | None = None,
             margin: int = 0) -> EdgeResult:
    """Optics, pixel integration, a noise-free monochrome sensor, then the slanted-edge MTF.

    ``edge`` fixes the edge line (see :func:`slanted_edge_mtf`); defocus does not
    move the edge, so the fit from an in-focus run can be reused.  ``margin``
    sensor pixels are cut from every side after the optics, so the analysed
    pixels receive blur from real scene content rather than from padding.
    """
    irr = integrate_pixels(radiance_to_irradiance(radiance, optics), oversample)
    if margin:
        if 2 * margin >= min(irr.height, irr.width):
            raise ValueError(f"margin {margin} leaves no pixels of a {irr.height}x{irr.width} image")
        irr = irr.with_values(irr.values[margin:-margin, margin:-margin])
    sensor = SensorConfig(rows=irr.height, cols=irr.width, cfa_pattern="MONO",
                          pixel_size_um=(pixel_pitch_um, pixel_pitch_um)).noiseless()
    sensor = replace(sensor, exposure_time_s=exposure_for_fill(irr, sensor))
    raw = expose(irr, sensor).values.astype(np.float64)
    curve = slanted_edge_mtf(raw, oversample=4, pitch_um=pixel_pitch_um, edge=edge)
    # photo-electron weight of each band across the bright side of the edge
    qe = sensor.qe[1]
    w = irr.values.reshape(-1, irr.grid.count).sum(axis=0) * qe.values * qe.grid.wavelengths
    return EdgeResult(curve, raw, irr, w / w.sum(), edge_fit(raw) if edge is None else edge)


def defocus_series(radiance: SpectralCube, defocus_um=(0.0, 1.225, 3.5), oversample: int = 4,
                   pixel_pitch_um: float = 1.4, margin: int = 0) -> dict[float, EdgeResult]:
    """Edge MTFs of one rendered edge under several defocus coefficients.

    The edge line is fitted once on the first (sharpest) entry and reused,
    since strong blur leaves too little transition for a stable fit.
    """
    out: dict[float, EdgeResult] = {}
    edge = None
    for c4 in defocus_um:
        res = edge_mtf(radiance, OpticsConfig().with_defocus(c4), oversample, pixel_pitch_um, edge, margin)
        edge = res.edge
        out[float(c4)] = res
    return out


def ordering_violations(curves, f_max: float, step: float = 0.005) -> list[tuple[float, float]]:
    """Largest excess of each curve over its predecessor on (0, f_max).

    Returns one ``(excess, frequency)`` per adjacent pair; the pair is ordered
    when the excess is <= 0.
    """
    f = np.arange(step, f_max, step)
    vals = [c.at(f) for c in curves]
    out = []
    for a, b in zip(vals, vals[1:]):
        d = b - a
        k = int(np.argmax(d))
        out.append((float(d[k]), float(f[k])))
    return out


def analytic_edge_mtf(f_cyc_per_px, weights, grid, f_number: float = 1.73,
                      pitch_um: float = 1.4, angle_deg: float = 5.0) -> np.ndarray:
    """Band-weighted diffraction MTF times the square-pixel aperture MTF."""
    f = np.asarray(f_cyc_per_px, dtype=np.float64)
    total = np.zeros_like(f)
    for w, wl in zip(weights, grid.wavelengths):
        fc = cutoff_frequency(f_number, wl) * pitch_um  # cycles/pixel
        total += w * diffraction_mtf(f / fc)
    return total * pixel_aperture_mtf(f, angle_deg)


def analytic_optics_mtf(f_cyc_per_px, weights, grid, optics: OpticsConfig, pitch_um: float = 1.4,
                        angle_deg: float = 5.0) -> np.ndarray:
    """Band-weighted |OTF| of ``optics`` along x times the square-pixel aperture MTF.

    Unlike :func:`analytic_edge_mtf` this takes any wavefront, using the
    pupil-based OTF of each band.
    """
    from camsim.optics import otf
    f = np.asarray(f_cyc_per_px, dtype=np.float64)
    total = np.zeros(f.shape, dtype=np.complex128)
    for w, wl in zip(weights, grid.wavelengths):
        total += w * otf(optics, wl).at(f / pitch_um, 0.0)
    return np.abs(total) * pixel_aperture_mtf(f, angle_deg)


def reference_cutoff_px(f_number: float = 1.73, wavelength_nm: float = 550.0, pitch_um: float = 1.4) -> float:
    return cutoff_frequency(f_number, wavelength_nm) * pitch_um


# ---------------------------------------------------------------------------
# chart placement and interreflection

def mcc_scene(position: str, resolution: int = 128):
    from camsim.scene import PinholeCamera
    base = build_cornell_box(camera=PinholeCamera(resolution=(resolution, resolution)))
    x = MCC_POSITIONS[position]
    return place_mcc(base, (x, MCC_HEIGHT, 0.548), MCC_WIDTH)


def gray_series_rg(position: str, spp: int = 64, seed: int = 0, resolution: int = 256,
                   sensor: SensorConfig | None = None, threads: int | None = None) -> dict:
    """R/G of the six gray patches along the bottom chart row.

    The scene goes through the full chain (render, optics, sensor,
    demosaic); each patch's R and G are averaged over the middle half of the
    patch on the row through the patch centres.
    """
    scene = mcc_scene(position, resolution)
    radiance = render(scene, RenderConfig(samples_per_pixel=spp, seed=seed), threads=threads)
    irr = radiance_to_irradiance(radiance, OpticsConfig())
    if sensor is None:
        sensor = SensorConfig(rows=resolution, cols=resolution)
    sensor = replace(sensor, exposure_time_s=exposure_for_fill(irr, sensor, fill=0.6, percentile=99.0))
    rgb = demosaic_bilinear(expose(irr, sensor))
    centres = mcc_patch_centers(scene)
    from camsim.radiometry import MCC_GRAY_SERIES
    pts = [scene.camera.project(centres[n]) for n in MCC_GRAY_SERIES]
    row = int(round(np.mean([p[1] for p in pts])))
    cols = [p[0] for p in pts]
    half = 0.25 * abs(cols[-1] - cols[0]) / (len(cols) - 1)
    spans = [(int(round(c - half)), int(round(c + half)) + 1) for c in cols]
    lo, hi = min(a for a, _ in spans), max(b for _, b in spans)
    profile = line_profile(rgb, row, lo, hi, rows=2 * int(half) + 1)
    shifted = [(a - lo, b - lo) for a, b in spans]
    return {"rg": rg_ratio(profile, shifted), "row": row, "spans": spans, "profile": profile,
            "col_start": lo, "rows": 2 * int(half) + 1, "rgb": rgb}


def furnace_mean(reflectance: float = 0.5, emitted: float = 1.0, spp: int = 256,
                 resolution: int = 16, seed: int = 0, max_depth: int = 64, threads: int | None = None):
    """Mean rendered radiance in a closed uniform box and its Monte Carlo sigma."""
    scene = build_furnace(reflectance, emitted, resolution=resolution)
    cube = render(scene, RenderConfig(samples_per_pixel=spp, max_depth=max_depth,
                                      seed=seed), threads=threads)
    per_pixel = cube.values.mean(axis=2).ravel()
    return float(per_pixel.mean()), float(per_pixel.std(ddof=1) / np.sqrt(per_pixel.size))


# ---------------------------------------------------------------------------
# noise

def flat_cube(level: float, rows: int, cols: int, grid=None) -> SpectralCube:
    """Spectrally flat irradiance of ``level`` W/m^2/nm everywhere."""
    from camsim.radiometry import DEFAULT_GRID
    grid = DEFAULT_GRID if grid is None else grid
    return SpectralCube(np.full((rows, cols, grid.count), float(level)), grid, "irradiance")


def photon_transfer_series(levels=(1e-5, 3e-5, 6e-5, 1e-4, 1.5e-4, 2e-4, 3e-4), size: int = 512,
                           offset_mv: float = 50.0, seed: int = 0):
    """Flat-field frame pairs with fixed-pattern noise off, one pair per level.

    The analog offset keeps the dark end of the series off the zero clip.
    """
    from camsim.analysis.stats import photon_transfer
    config = replace(SensorConfig(rows=size, cols=size, cfa_pattern="MONO", noise_seed=seed),
                     dsnu_mv=0.0, prnu_percent=0.0, analog_offset_mv=offset_mv)
    pairs = []
    for level in levels:
        cube = flat_cube(level, size, size, config.grid)
        pairs.append((expose(cube, config, frame=0), expose(cube, config, frame=1)))
    return photon_transfer(pairs), config


def dark_stack_noise(frames: int = 100, size: int = 128, offset_mv: float = 50.0, seed: int = 0):
    """Temporal and fixed-pattern noise from a stack of dark frames."""
    from camsim.analysis.stats import dark_noise
    from camsim.sensor import expose_stack
    config = replace(SensorConfig(rows=size, cols=size, cfa_pattern="MONO", noise_seed=seed,
                                  pattern_seed=seed), analog_offset_mv=offset_mv)
    stack = expose_stack(flat_cube(0.0, size, size, config.grid), config, count=frames)
    return dark_noise(stack), config


def noise_parity(seeds=(1, 2), size: int = 512, spp: int = 16, region: int = 160,
                 count: int = 3, render_seed: int = 0, threads: int | None = None):
    """Std gaps between two sensor simulations of one rendered scene.

    Both runs share the radiance, so scene texture cancels and the gaps
    measure only the noise model.  Each run draws its own fixed patterns and
    temporal noise.
    """
    from camsim.analysis.stats import select_uniform_regions, std_gaps
    from camsim.scene import PinholeCamera
    scene = build_cornell_box(camera=PinholeCamera(resolution=(size, size)))
    radiance = render(scene, RenderConfig(samples_per_pixel=spp, seed=render_seed), threads=threads)
    irr = radiance_to_irradiance(radiance, OpticsConfig())
    base = SensorConfig(rows=size, cols=size)
    base = replace(base, exposure_time_s=exposure_for_fill(irr, base, fill=0.6, percentile=99.0))
    frames = [expose(irr, replace(base, noise_seed=s, pattern_seed=s)) for s in seeds]
    rois = select_uniform_regions(frames[0], count, block=region)
    return std_gaps(frames[0], frames[1], rois), frames


# ---------------------------------------------------------------------------
# QE transform

def qe_fit_problem(m0=None, noise: float = 0.0, seed: int = 0):
    """Predicted and synthetic measured responses for 24 chart patches under 3 lights.

    The lights are the box light and the same light after a bounce off the
    red and the green paper.  ``measured = predicted @ m0`` with optional
    relative Gaussian noise.  Returns ``(predicted, measured, m0)``.
    """
    from camsim.analysis.qe import REFERENCE_M, predict_rgb
    from camsim.radiometry import (SpectralDistribution, default_light_spd, green_paper_reflectance,
                                   mcc_reflectances, red_paper_reflectance)
    from camsim.sensor import published_qe
    m0 = np.asarray(REFERENCE_M if m0 is None else m0, dtype=np.float64)
    light = default_light_spd()
    lights = [light.values, light.values * red_paper_reflectance().values,
              light.values * green_paper_reflectance().values]
    spectra = [SpectralDistribution(light.grid, e * r.values, "radiance")
               for e in lights for r in mcc_reflectances().values()]
    predicted = predict_rgb(spectra, published_qe())
    predicted = predicted / predicted.max()
    measured = predicted @ m0
    if noise > 0:
        rng = np.random.default_rng(seed)
        measured = measured * (1.0 + noise * rng.standard_normal(measured.shape))
    return predicted, measured, m0
