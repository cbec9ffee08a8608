import json

import numpy as np
import pytest

from camsim.pipeline import (ARTIFACTS, ManifestError, PipelineManifest, StageError, load_manifest,
                             run_pipeline)
from camsim.raw import read_pgm
from camsim.render import RenderConfig
from camsim.scene import PinholeCamera, build_cornell_box, save_scene


@pytest.fixture
def scene_file(tmp_path):
    path = tmp_path / "scene.json"
    save_scene(build_cornell_box(camera=PinholeCamera(resolution=(16, 16))), path)
    return path


def manifest(scene_file, out, **kw):
    kw.setdefault("render", RenderConfig(samples_per_pixel=2, seed=3))
    kw.setdefault("sensor", {"noise_seed": 5, "pattern_seed": 6})
    kw.setdefault("auto_exposure", 0.5)
    return PipelineManifest(scene=scene_file, out=out, **kw)


def test_full_run_writes_artifacts_and_provenance(scene_file, tmp_path):
    rec = run_pipeline(manifest(scene_file, tmp_path / "out"), log=lambda *_: None)
    out = tmp_path / "out"
    for name in ARTIFACTS.values():
        assert (out / name).is_file()
    assert not list(out.glob("*.partial"))
    prov = json.loads((out / "provenance.json").read_text())
    assert prov == rec
    assert prov["seeds"] == {"render": 3, "pattern": 6, "noise": 5}
    assert set(prov["artifacts"]) == set(ARTIFACTS.values())
    img = read_pgm(out / "raw.pgm")
    assert img.values.shape == (16, 16)


def test_same_manifest_same_bytes_any_threads(scene_file, tmp_path):
    run_pipeline(manifest(scene_file, tmp_path / "a"), threads=1, log=lambda *_: None)
    run_pipeline(manifest(scene_file, tmp_path / "b"), threads=2, log=lambda *_: None)
    assert (tmp_path / "a/raw.pgm").read_bytes() == (tmp_path / "b/raw.pgm").read_bytes()


def test_stage_prefix(scene_file, tmp_path):
    run_pipeline(manifest(scene_file, tmp_path / "o", stages=("scene", "render")), log=lambda *_: None)
    assert (tmp_path / "o/radiance.cube").is_file()
    assert not (tmp_path / "o/raw.pgm").exists()
    with pytest.raises(ManifestError):
        manifest(scene_file, tmp_path / "o", stages=("render",))


def test_oversample_halves_the_image(scene_file, tmp_path):
    run_pipeline(manifest(scene_file, tmp_path / "o", oversample=2), log=lambda *_: None)
    assert read_pgm(tmp_path / "o/raw.pgm").values.shape == (8, 8)


def test_bad_sensor_config_is_a_stage_error(scene_file, tmp_path):
    m = manifest(scene_file, tmp_path / "o", sensor={"well_capacity_e": 7000})
    with pytest.raises(StageError) as err:
        run_pipeline(m, log=lambda *_: None)
    assert err.value.stage == "sensor"
    assert (tmp_path / "o/irradiance.cube").is_file()


def test_manifest_file_roundtrip(scene_file, tmp_path):
    m = manifest(scene_file, tmp_path / "o", luminance=50.0)
    path = tmp_path / "m.json"
    path.write_text(json.dumps(m.to_dict()))
    assert load_manifest(path).to_dict() == m.to_dict()


def test_manifest_errors(scene_file, tmp_path):
    with pytest.raises(ManifestError):
        PipelineManifest.from_dict({"scene": str(scene_file), "colour": 1})
    with pytest.raises(ManifestError):
        PipelineManifest.from_dict({"out": "x"})
    with pytest.raises(ManifestError):
        PipelineManifest(scene=tmp_path / "missing.json", out=tmp_path)
    bad = tmp_path / "bad.json"
    bad.write_text("{")
    with pytest.raises(ManifestError):
        load_manifest(bad)


def test_luminance_scaling_applied(scene_file, tmp_path):
    from camsim.cube import read_cube
    run_pipeline(manifest(scene_file, tmp_path / "o", luminance=40.0, stages=("scene", "render")),
                 log=lambda *_: None)
    cube = read_cube(tmp_path / "o/radiance.cube")
    assert cube.mean_luminance() == pytest.approx(40.0, rel=1e-6)
    assert np.all(cube.values >= 0)
