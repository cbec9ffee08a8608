import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from camsim.radiometry import DEFAULT_GRID
from camsim.scene import (
    MCC_NAMES, Box, PinholeCamera, Quad, SceneError, build_cornell_box, build_furnace,
    load_scene, mcc_patch_centers, parse_scene, place_mcc, place_slanted_edge, quad_area,
    save_scene, scene_to_dict, serialize_scene, slanted_edge_fixture,
)


@pytest.fixture(scope="module")
def box():
    return build_cornell_box()


def test_default_box_contents(box):
    names = {q.name for q in box.quads()}
    for n in ("floor", "back_wall", "left_wall", "right_wall", "tall_block.left", "short_block.top"):
        assert n in names
    assert box.lights[0].name == "ceiling_light"
    lo, hi = box.bounds()
    np.testing.assert_allclose(lo, 0.0, atol=1e-12)
    np.testing.assert_allclose(hi, 0.55, atol=1e-12)


def test_light_faces_down_with_hole_area(box):
    light = box.lights[0]
    assert light.normal[1] == pytest.approx(-1.0)
    assert light.area == pytest.approx(0.13 * 0.105)


def test_walls_face_inward(box):
    quads = {q.name: q for q in box.quads()}
    assert quads["left_wall"].normal[0] > 0
    assert quads["right_wall"].normal[0] < 0
    assert quads["floor"].normal[1] > 0
    assert quads["back_wall"].normal[2] < 0


def test_block_rotation_preserves_area():
    b = Box("b", (0.2, 0.2), (0.1, 0.2, 0.15), "white", 37.0)
    # five faces: the bottom rests on the floor and is never visible
    assert len(b.quads()) == 5
    assert sum(q.area for q in b.quads()) == pytest.approx(0.1 * 0.15 + 2 * 0.2 * 0.1 + 2 * 0.2 * 0.15)


def test_quad_validation():
    with pytest.raises(SceneError, match="degenerate"):
        Quad("q", [(0, 0, 0), (1, 0, 0), (2, 0, 0), (3, 0, 0)], "white")
    with pytest.raises(SceneError, match="coplanar"):
        Quad("q", [(0, 0, 0), (1, 0, 0), (1, 1, 0), (0, 1, 0.5)], "white")
    with pytest.raises(SceneError, match="convex"):
        Quad("q", [(0, 0, 0), (1, 0, 0), (0.2, 0.2, 0), (0, 1, 0)], "white")


def test_bad_builder_arguments():
    with pytest.raises(SceneError):
        build_cornell_box(light_hole=(0.2, 0.2, 0.2, 0.3))
    from camsim.scene import BlockSpec
    with pytest.raises(SceneError, match="taller"):
        build_cornell_box(block_specs=(BlockSpec("tower", (0.2, 0.2), (0.1, 0.6, 0.1)),))
    with pytest.raises(SceneError, match="outside"):
        build_cornell_box(block_specs=(BlockSpec("out", (0.54, 0.2), (0.1, 0.1, 0.1)),))


def test_camera_projection_centre():
    cam = PinholeCamera()
    col, row = cam.project(cam.look_at)
    assert (col, row) == pytest.approx((64.0, 64.0))
    # a point to the camera's right lands in a larger column
    col2, _ = cam.project(np.add(cam.look_at, (0.05, 0.0, 0.0)))
    assert col2 > col
    assert cam.pitch_um == pytest.approx(2.8e3 / 128)


def test_camera_rejects_nonsquare_pixels():
    with pytest.raises(SceneError, match="square"):
        PinholeCamera(resolution=(128, 64))


def test_mcc_layout(box):
    s = place_mcc(box, (0.275, 0.43, 0.548), 0.2)
    centres = mcc_patch_centers(s)
    assert len(centres) == 24
    # row-major from top-left as seen by the camera
    cam = s.camera
    c0, r0 = cam.project(centres[MCC_NAMES[0]])
    c5, _ = cam.project(centres[MCC_NAMES[5]])
    _, r18 = cam.project(centres[MCC_NAMES[18]])
    assert c5 > c0 and r18 > r0
    assert centres["white"][0] < centres["black"][0]


def test_mcc_outside_box_rejected(box):
    with pytest.raises(SceneError, match="outside"):
        place_mcc(box, (0.5, 0.43, 0.548), 0.2)


def test_slanted_edge_geometry(box):
    s = place_slanted_edge(box, (0.275, 0.2, 0.42), 0.05, 5.0, normal=(0, 0, -1))
    quads = {q.name: q for q in s.quads()}
    assert quads["edge.dark"].area == pytest.approx(0.05 ** 2 / 2)
    assert quads["edge.bright"].area == pytest.approx(0.05 ** 2 / 2)
    cam = s.camera
    dark_c = cam.project(np.mean(quads["edge.dark"].vertices, axis=0))[0]
    bright_c = cam.project(np.mean(quads["edge.bright"].vertices, axis=0))[0]
    assert dark_c < bright_c
    with pytest.raises(SceneError):
        place_slanted_edge(box, (0.275, 0.2, 0.42), 0.05, 0.0)


def test_edge_fixture_pitch():
    s = slanted_edge_fixture(sensor_pixels=16, oversample=4)
    assert s.camera.resolution == (64, 64)
    assert s.camera.pitch_um == pytest.approx(0.35)


def test_json_roundtrip(box, tmp_path):
    s = place_mcc(box, (0.14, 0.43, 0.548), 0.2)
    p = tmp_path / "s.json"
    save_scene(s, p)
    back = load_scene(p)
    assert serialize_scene(back) == serialize_scene(s)


def test_json_errors(box):
    doc = scene_to_dict(box)
    no_cam = {k: v for k, v in doc.items() if k != "camera"}
    with pytest.raises(SceneError, match="camera required"):
        parse_scene(json.dumps(no_cam))
    bad = json.loads(json.dumps(doc))
    bad["materials"]["white"] = [1.5] * 31
    with pytest.raises(SceneError, match="out of range|\\[0, 1\\]"):
        parse_scene(json.dumps(bad))
    extra = dict(doc, fog=1)
    with pytest.raises(SceneError, match="unknown"):
        parse_scene(json.dumps(extra))
    with pytest.raises(SceneError, match="invalid JSON"):
        parse_scene("{")


def test_spectrum_from_csv_path(box, tmp_path):
    from camsim.radiometry import white_paint_reflectance, write_spectrum_csv
    write_spectrum_csv(white_paint_reflectance(), tmp_path / "white.csv")
    doc = scene_to_dict(box)
    doc["materials"]["white"] = "white.csv"
    s = parse_scene(json.dumps(doc), base=tmp_path)
    np.testing.assert_allclose(s.materials["white"].reflectance.values, white_paint_reflectance().values)


def test_furnace_closed():
    f = build_furnace(0.5, 1.0)
    assert len(f.lights) == 6
    assert f.grid == DEFAULT_GRID


@given(st.floats(0.01, 0.3), st.floats(0.01, 0.3))
def test_quad_area_rectangle(w, h):
    assert quad_area([(0, 0, 0), (w, 0, 0), (w, h, 0), (0, h, 0)]) == pytest.approx(w * h)
