import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from camsim.analysis.demosaic import demosaic_bilinear
from camsim.analysis.mtf import EdgeError, MtfCurve, pixel_aperture_mtf, read_mtf_csv, slanted_edge_mtf, write_mtf_csv
from camsim.analysis.qe import (
    REFERENCE_M, QeTransform, RankDeficientError, apply_qe_transform, predict_rgb, residual_rms,
    solve_qe_transform,
)
from camsim.analysis.stats import (
    Roi, dark_noise, line_profile, photon_transfer, region_stats, select_uniform_regions,
    std_gaps, write_profile_csv, write_stats_csv,
)
from camsim.radiometry import DEFAULT_GRID, GridMismatchError, SpectralDistribution, WavelengthGrid
from camsim.raw import DigitalImage
from camsim.sensor import published_qe


def ideal_edge(angle_deg=5.0, size=64, ss=8, pos=31.3, dark=0.0, bright=1.0):
    """Box-integrated step edge; ``ss`` sub-samples per pixel side."""
    t = np.tan(np.radians(angle_deg))
    y = (np.arange(size * ss) + 0.5) / ss - 0.5
    yy, xx = np.meshgrid(y, y, indexing="ij")
    e = np.where(xx > pos + t * (yy - size / 2), bright, dark)
    return e.reshape(size, ss, size, ss).mean(axis=(1, 3))


# demosaic -------------------------------------------------------------------

def test_demosaic_uniform():
    img = DigitalImage(np.full((6, 8), 700), 12, "RGGB")
    rgb = demosaic_bilinear(img)
    assert rgb.shape == (6, 8, 3)
    assert np.all(rgb == 700)


def test_demosaic_green_impulse_stencil():
    v = np.zeros((6, 6))
    v[2, 3] = 8.0  # a G site in RGGB
    rgb = demosaic_bilinear(v, "RGGB")
    np.testing.assert_array_equal(rgb[1:4, 2:5, 1], [[0, 2, 0], [2, 8, 2], [0, 2, 0]])
    assert np.all(rgb[..., 0] == 0) and np.all(rgb[..., 2] == 0)


def test_demosaic_red_impulse_stencil():
    v = np.zeros((6, 6))
    v[2, 2] = 8.0  # an R site
    r = demosaic_bilinear(v, "RGGB")[..., 0]
    np.testing.assert_array_equal(r[1:4, 1:4], [[2, 4, 2], [4, 8, 4], [2, 4, 2]])


def test_demosaic_border_uses_available_neighbours():
    v = np.zeros((4, 4))
    v[0, 2] = 4.0  # R site; (0, 3) is a G site on the right border with one R neighbour
    r = demosaic_bilinear(v, "RGGB")[..., 0]
    assert r[0, 3] == 4.0
    # the B site below it has two in-frame diagonal R neighbours, (0, 2) and (2, 2)
    assert r[1, 3] == 2.0


def test_demosaic_unknown_cfa():
    with pytest.raises(ValueError):
        demosaic_bilinear(np.zeros((4, 4)), "RGBW")


@given(st.integers(0, 2**16), st.sampled_from(["RGGB", "BGGR", "GRBG", "GBRG"]))
def test_demosaic_preserves_native_sites(seed, cfa):
    v = np.random.default_rng(seed).integers(0, 4096, (6, 10))
    img = DigitalImage(v, 12, cfa)
    rgb = demosaic_bilinear(img)
    ch = img.channels()
    for c in range(3):
        assert np.array_equal(rgb[..., c][ch == c], v[ch == c])


# MTF -------------------------------------------------------------------------

def test_ideal_edge_matches_pixel_aperture():
    curve = slanted_edge_mtf(ideal_edge())
    assert curve.modulation[0] == 1.0
    assert curve.angle_deg == pytest.approx(5.0, abs=0.05)
    assert curve.at(0.5) == pytest.approx(2 / np.pi, abs=0.01)
    f = curve.frequencies[curve.frequencies <= 1.0]
    np.testing.assert_allclose(curve.at(f), pixel_aperture_mtf(f, 5.0), atol=0.02)


def test_edge_mirror_and_polarity_invariance():
    e = ideal_edge(7.0) * 0.8 + 0.1
    base = slanted_edge_mtf(e)
    for variant in (e[:, ::-1], 1.0 - e, e[::-1, :]):
        other = slanted_edge_mtf(variant)
        n = min(base.modulation.size, other.modulation.size)
        np.testing.assert_allclose(other.modulation[:n], base.modulation[:n], atol=0.02)


def test_edge_rejections():
    with pytest.raises(EdgeError, match="angle"):
        slanted_edge_mtf(ideal_edge(0.0))
    with pytest.raises(EdgeError, match="uniform"):
        slanted_edge_mtf(np.full((32, 32), 5.0))
    with pytest.raises(EdgeError):
        slanted_edge_mtf(np.zeros((4, 4)))


def test_mtf_cycles_per_mm_and_csv(tmp_path):
    curve = slanted_edge_mtf(ideal_edge(), pitch_um=1.4)
    assert curve.cycles_per_mm()[1] == pytest.approx(curve.frequencies[1] / 1.4e-3)
    write_mtf_csv(curve, tmp_path / "m.csv")
    text = (tmp_path / "m.csv").read_text().splitlines()
    assert text[0] == "frequency,modulation" and text[1] == "0,1"
    back = read_mtf_csv(tmp_path / "m.csv")
    np.testing.assert_allclose(back.modulation, curve.modulation, atol=1e-5)


def test_mtf_curve_validation():
    with pytest.raises(ValueError):
        MtfCurve([0.0, 0.0], [1.0, 0.5])


# QE transform ---------------------------------------------------------------

def test_apply_identity_and_reference_matrix():
    q = published_qe()
    same = apply_qe_transform(q, np.eye(3))
    for a, b in zip(q, same):
        np.testing.assert_array_equal(a.values, b.values)
    r2, g2, b2 = apply_qe_transform(q, REFERENCE_M)
    np.testing.assert_array_equal(r2.values, 0.532 * q[0].values + 0.06 * q[1].values)
    np.testing.assert_array_equal(g2.values, 0.70 * q[1].values + 0.36 * q[2].values)
    np.testing.assert_array_equal(b2.values, 0.84 * q[2].values)


def test_apply_then_inverse():
    q = published_qe()
    m = REFERENCE_M
    back = apply_qe_transform(apply_qe_transform(q, m), np.linalg.inv(m))
    for a, b in zip(q, back):
        np.testing.assert_allclose(a.values, b.values, atol=1e-10)


def test_apply_grid_mismatch():
    q = list(published_qe())
    q[2] = SpectralDistribution.constant(0.5, "qe", WavelengthGrid(400, 5, 61))
    with pytest.raises(GridMismatchError):
        apply_qe_transform(q, np.eye(3))


def test_solve_identity():
    p = np.random.default_rng(1).uniform(0.1, 1, (24, 3))
    np.testing.assert_allclose(solve_qe_transform(p, p).m, np.eye(3), atol=1e-10)


def test_solve_recovers_known_matrix():
    rng = np.random.default_rng(2)
    p = rng.uniform(0.05, 1.0, (72, 3))
    m0 = REFERENCE_M + np.array([[0, 0.03, -0.02], [0, 0, 0.05], [0.01, 0, 0]])
    np.testing.assert_allclose(solve_qe_transform(p, p @ m0).m, m0, atol=1e-8)


def test_solve_with_noise():
    rng = np.random.default_rng(3)
    p = rng.uniform(0.05, 1.0, (72, 3))
    clean = p @ REFERENCE_M
    meas = clean * (1 + 0.01 * rng.standard_normal(clean.shape))
    fit = solve_qe_transform(p, meas)
    assert np.abs(fit.m - REFERENCE_M).max() < 0.02
    noise_rms = np.sqrt(np.mean((meas - clean) ** 2))
    assert fit.residual_rms == pytest.approx(noise_rms, rel=0.1)
    assert fit.residual_rms <= residual_rms(p, meas, np.eye(3))


def test_solve_threshold_zeroes_small_entries():
    rng = np.random.default_rng(4)
    p = rng.uniform(0.05, 1.0, (72, 3))
    meas = (p @ REFERENCE_M) * (1 + 0.002 * rng.standard_normal((72, 3)))
    fit = solve_qe_transform(p, meas, zero_threshold=0.01)
    assert np.all(fit.m[REFERENCE_M == 0] == 0)
    np.testing.assert_allclose(fit.m, REFERENCE_M, atol=0.01)


def test_solve_rank_deficient():
    p = np.ones((10, 3))
    with pytest.raises(RankDeficientError):
        solve_qe_transform(p, p)


def test_qe_json_row_major():
    t = QeTransform(REFERENCE_M)
    assert json.loads(t.to_json()) == [[0.532, 0.0, 0.0], [0.06, 0.7, 0.0], [0.0, 0.36, 0.84]]
    assert np.array_equal(QeTransform.from_json(t.to_json()).m, REFERENCE_M)


def test_predict_rgb():
    q = published_qe()
    s = SpectralDistribution.constant(1.0, "radiance")
    rgb = predict_rgb([s, s.scaled(2)], q)
    assert rgb.shape == (2, 3)
    np.testing.assert_allclose(rgb[1], 2 * rgb[0])


# statistics -------------------------------------------------------------------

def test_region_stats_constant_and_bounds():
    a = np.full((10, 10), 7.0)
    s = region_stats(a, (0, 0, 5, 5))
    assert s.mean == (7.0,) and s.std == (0.0,) and s.count == (25,)
    with pytest.raises(ValueError):
        region_stats(a, (8, 8, 5, 5))
    with pytest.raises(ValueError):
        region_stats(a, (0, 0, 3, 3))


def test_region_stats_sampling_oracle():
    v = np.random.default_rng(5).normal(100, 2, (100, 100))
    s = region_stats(v, Roi(0, 0, 100, 100))
    assert abs(s.mean[0] - 100) < 0.1
    assert abs(s.std[0] - 2) < 0.05


def test_region_stats_translation():
    v = np.random.default_rng(6).normal(50, 3, (200, 200))
    a = region_stats(v, (0, 0, 60, 60))
    b = region_stats(v, (120, 100, 60, 60))
    se_mean = 3 / 60
    se_std = 3 / np.sqrt(2 * 3600)
    assert abs(a.mean[0] - b.mean[0]) < 3 * np.sqrt(2) * se_mean
    assert abs(a.std[0] - b.std[0]) < 3 * np.sqrt(2) * se_std


def test_region_stats_raw_channels():
    v = np.zeros((4, 4), int)
    v[0::2, 0::2] = 10  # R
    v[1::2, 1::2] = 30  # B
    v[0::2, 1::2] = v[1::2, 0::2] = 20
    s = region_stats(DigitalImage(v, 12, "RGGB"), (0, 0, 4, 4))
    assert s.channels == ("r", "g", "b")
    assert s.mean == (10.0, 20.0, 30.0) and s.count == (4, 8, 4)


def test_line_profile(tmp_path):
    rgb = np.full((5, 9, 3), 3.0)
    p = line_profile(rgb, 2, 1, 7)
    assert p.shape == (6, 3) and np.all(p == 3.0)
    with pytest.raises(ValueError):
        line_profile(rgb, 5)
    with pytest.raises(ValueError):
        line_profile(rgb, 0, 4, 20)
    write_profile_csv(p, tmp_path / "p.csv", 1)
    lines = (tmp_path / "p.csv").read_text().splitlines()
    assert lines[0] == "column,r,g,b" and lines[1] == "1,3,3,3" and len(lines) == 7


def test_line_profile_row_band():
    img = np.arange(5.0)[:, None] * np.ones((5, 4))
    assert np.all(line_profile(img, 2, rows=3) == 2.0)
    assert np.all(line_profile(img ** 2, 2, rows=3) == (1 + 4 + 9) / 3)
    for bad in (dict(row=0, rows=3), dict(row=2, rows=2)):
        with pytest.raises(ValueError):
            line_profile(img, **bad)


def test_stats_csv(tmp_path):
    s = region_stats(np.arange(100.0).reshape(10, 10), (0, 0, 4, 4))
    write_stats_csv([s], tmp_path / "s.csv")
    assert (tmp_path / "s.csv").read_text().startswith("region,channel,mean,std,count\n0,v,")


def test_dark_noise_oracle():
    rng = np.random.default_rng(7)
    offset = rng.normal(0, 3.0, (64, 64))
    stack = [100 + offset + rng.normal(0, 10.0, (64, 64)) for _ in range(100)]
    d = dark_noise(stack)
    assert d.temporal_std == pytest.approx(10.0, rel=0.01)
    # the raw stack-mean spread includes 10/sqrt(100) = 1 DN of temporal noise
    assert d.raw_spatial_std == pytest.approx(np.sqrt(offset.var(ddof=1) + 1.0), rel=0.03)
    assert d.dsnu_std == pytest.approx(offset.std(ddof=1), rel=0.03)


def test_photon_transfer_synthetic():
    rng = np.random.default_rng(8)
    k = 0.7
    pairs = []
    for n_e in (200, 800, 2000, 4000):
        a = k * rng.poisson(n_e, (128, 128)) + rng.normal(0, 5, (128, 128))
        b = k * rng.poisson(n_e, (128, 128)) + rng.normal(0, 5, (128, 128))
        pairs.append((a, b))
    pt = photon_transfer(pairs)
    assert pt.slope == pytest.approx(k, rel=0.05)
    assert pt.intercept == pytest.approx(25, abs=15)


def test_std_gaps_and_region_selection():
    rng = np.random.default_rng(9)
    field = np.repeat(np.linspace(100, 800, 8), 16)[None, :].repeat(64, axis=0)
    a = field + rng.normal(0, 4, field.shape)
    b = field + rng.normal(0, 4, field.shape)
    rois = select_uniform_regions(a, 3, block=16)
    assert len(rois) == 3
    gaps = std_gaps(a, b, rois)
    assert all(g["matched"] for g in gaps)
    assert max(max(g["std_gap"]) for g in gaps) < 2.0
