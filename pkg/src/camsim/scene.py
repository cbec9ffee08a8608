"""Cornell-box scene description, builders, validation and JSON (de)serialisation.

Coordinates are metres.  The box occupies ``[0, S]^3``: ``x`` runs from the
red (left) wall to the green (right) wall, ``y`` from floor to ceiling and
``z`` from the open front to the back wall.  The camera looks along ``+z``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from camsim.radiometry import (
    DEFAULT_GRID,
    SpectralDistribution,
    WavelengthGrid,
    default_light_spd,
    green_paper_reflectance,
    mcc_reflectances,
    read_spectrum_csv,
    red_paper_reflectance,
    white_paint_reflectance,
)


class SceneError(ValueError):
    """Invalid scene geometry or document; the message names the offending item."""


def _vec(v) -> tuple:
    return tuple(float(x) for x in v)


def _quad_normal(verts) -> np.ndarray:
    v = np.asarray(verts, dtype=np.float64)
    n = np.cross(v[1] - v[0], v[3] - v[0])
    return n / np.linalg.norm(n)


def quad_area(verts) -> float:
    v = np.asarray(verts, dtype=np.float64)
    return 0.5 * (np.linalg.norm(np.cross(v[1] - v[0], v[2] - v[0]))
                  + np.linalg.norm(np.cross(v[2] - v[0], v[3] - v[0])))


def _check_quad(name: str, verts):
    v = np.asarray(verts, dtype=np.float64)
    if v.shape != (4, 3) or not np.all(np.isfinite(v)):
        raise SceneError(f"{name}: a quad needs 4 finite 3-D vertices")
    area = quad_area(v)
    scale = max(np.ptp(v, axis=0).max(), 1e-12)
    if area <= 1e-12 * scale * scale or area == 0.0:
        raise SceneError(f"{name}: degenerate quad (zero area)")
    n = np.cross(v[1] - v[0], v[2] - v[0])
    n /= np.linalg.norm(n)
    if abs(np.dot(v[3] - v[0], n)) > 1e-9 * scale:
        raise SceneError(f"{name}: quad vertices are not coplanar")
    # convexity: all corner cross products point the same way
    for i in range(4):
        c = np.cross(v[(i + 1) % 4] - v[i], v[(i + 2) % 4] - v[(i + 1) % 4])
        if np.dot(c, n) < -1e-12 * scale * scale:
            raise SceneError(f"{name}: quad is not convex")


@dataclass(frozen=True)
class MatteMaterial:
    reflectance: SpectralDistribution

    def __post_init__(self):
        if self.reflectance.unit != "reflectance":
            raise SceneError("matte material needs a reflectance spectrum")


@dataclass(frozen=True)
class Quad:
    name: str
    vertices: tuple  # 4 coplanar points, counter-clockwise seen from the front
    material: str

    def __post_init__(self):
        object.__setattr__(self, "vertices", tuple(_vec(p) for p in self.vertices))
        _check_quad(self.name, self.vertices)

    @property
    def normal(self) -> np.ndarray:
        return _quad_normal(self.vertices)

    @property
    def area(self) -> float:
        return quad_area(self.vertices)

    def quads(self) -> list["Quad"]:
        return [self]


@dataclass(frozen=True)
class Box:
    """Axis-aligned block resting on the floor, rotated about the vertical axis."""

    name: str
    center: tuple  # (x, z) of the footprint centre
    size: tuple  # (width along x, height, depth along z) before rotation
    material: str
    rotation_deg: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "center", _vec(self.center))
        object.__setattr__(self, "size", _vec(self.size))
        if len(self.center) != 2 or len(self.size) != 3:
            raise SceneError(f"{self.name}: box needs center (x, z) and size (w, h, d)")
        if min(self.size) <= 0:
            raise SceneError(f"{self.name}: box dimensions must be positive")

    def corners(self) -> np.ndarray:
        w, h, d = self.size
        a = math.radians(self.rotation_deg)
        ca, sa = math.cos(a), math.sin(a)
        out = []
        for y in (0.0, h):
            for lx, lz in ((-w / 2, -d / 2), (w / 2, -d / 2), (w / 2, d / 2), (-w / 2, d / 2)):
                out.append((self.center[0] + lx * ca + lz * sa, y, self.center[1] - lx * sa + lz * ca))
        return np.array(out)

    def quads(self) -> list[Quad]:
        c = self.corners()  # 0-3 bottom ring, 4-7 top ring
        faces = {
            "front": (0, 4, 5, 1),
            "right": (1, 5, 6, 2),
            "back": (2, 6, 7, 3),
            "left": (3, 7, 4, 0),
            "top": (4, 7, 6, 5),
        }
        return [Quad(f"{self.name}.{k}", [c[i] for i in idx], self.material) for k, idx in faces.items()]


@dataclass(frozen=True)
class AreaLight:
    name: str
    vertices: tuple
    spd: SpectralDistribution
    two_sided: bool = False
    material: str | None = None  # reflectance of the emitting surface, black if None

    def __post_init__(self):
        object.__setattr__(self, "vertices", tuple(_vec(p) for p in self.vertices))
        _check_quad(self.name, self.vertices)
        if self.spd.unit != "radiance":
            raise SceneError(f"{self.name}: light spd must be a radiance spectrum")

    @property
    def normal(self) -> np.ndarray:
        return _quad_normal(self.vertices)

    @property
    def area(self) -> float:
        return quad_area(self.vertices)


@dataclass(frozen=True)
class PinholeCamera:
    position: tuple = (0.275, 0.275, -0.85)
    look_at: tuple = (0.275, 0.275, 0.55)
    up: tuple = (0.0, 1.0, 0.0)
    focal_length_mm: float = 4.38
    sensor_width_mm: float = 2.8
    sensor_height_mm: float = 2.8
    resolution: tuple = (128, 128)  # (width, height) in pixels

    def __post_init__(self):
        for k in ("position", "look_at", "up"):
            object.__setattr__(self, k, _vec(getattr(self, k)))
        object.__setattr__(self, "resolution", tuple(int(x) for x in self.resolution))
        fwd = np.subtract(self.look_at, self.position)
        if np.linalg.norm(fwd) == 0:
            raise SceneError("camera: look_at equals position")
        if np.linalg.norm(np.cross(fwd / np.linalg.norm(fwd), self.up)) < 1e-9:
            raise SceneError("camera: up vector is parallel to the view direction")
        if min(self.focal_length_mm, self.sensor_width_mm, self.sensor_height_mm) <= 0:
            raise SceneError("camera: physical dimensions must be positive")
        if len(self.resolution) != 2 or min(self.resolution) < 1:
            raise SceneError("camera: resolution must be two positive integers")
        px = self.sensor_width_mm / self.resolution[0]
        py = self.sensor_height_mm / self.resolution[1]
        if abs(px - py) > 1e-9 * max(px, py):
            raise SceneError("camera: pixels must be square (sensor size / resolution)")

    @property
    def pitch_um(self) -> float:
        return 1e3 * self.sensor_width_mm / self.resolution[0]

    def basis(self):
        fwd = np.subtract(self.look_at, self.position)
        fwd = fwd / np.linalg.norm(fwd)
        right = np.cross(self.up, fwd)
        right /= np.linalg.norm(right)
        up = np.cross(fwd, right)
        return fwd, right, up

    def project(self, point) -> tuple[float, float]:
        """Continuous (column, row) image coordinates of a world point."""
        fwd, right, up = self.basis()
        d = np.subtract(point, self.position)
        z = np.dot(d, fwd)
        if z <= 0:
            raise SceneError("point is behind the camera")
        sx = self.focal_length_mm * np.dot(d, right) / z
        sy = self.focal_length_mm * np.dot(d, up) / z
        w, h = self.resolution
        col = (sx / self.sensor_width_mm + 0.5) * w
        row = (0.5 - sy / self.sensor_height_mm) * h
        return float(col), float(row)


@dataclass(frozen=True)
class Target:
    name: str
    kind: str  # "mcc" or "slanted_edge"
    center: tuple
    size: float
    angle_deg: float = 0.0
    primitives: tuple = ()  # names of the quads making up the target

    def __post_init__(self):
        object.__setattr__(self, "center", _vec(self.center))
        object.__setattr__(self, "primitives", tuple(self.primitives))


@dataclass(frozen=True)
class SceneGraph:
    camera: PinholeCamera
    materials: dict = field(default_factory=dict)  # name -> MatteMaterial
    primitives: tuple = ()
    lights: tuple = ()
    targets: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "primitives", tuple(self.primitives))
        object.__setattr__(self, "lights", tuple(self.lights))
        object.__setattr__(self, "targets", tuple(self.targets))
        validate(self)

    @property
    def grid(self) -> WavelengthGrid:
        for m in self.materials.values():
            return m.reflectance.grid
        return self.lights[0].spd.grid

    def quads(self) -> list[Quad]:
        out = []
        for p in self.primitives:
            out.extend(p.quads())
        return out

    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        pts = [np.asarray(q.vertices) for q in self.quads()]
        pts += [np.asarray(l.vertices) for l in self.lights]
        pts = np.concatenate(pts)
        return pts.min(axis=0), pts.max(axis=0)

    def with_camera(self, camera: PinholeCamera) -> "SceneGraph":
        return replace(self, camera=camera)


def validate(scene: SceneGraph) -> None:
    if not isinstance(scene.camera, PinholeCamera):
        raise SceneError("camera required")
    if not scene.lights:
        raise SceneError("scene needs at least one light")
    grids = {m.reflectance.grid for m in scene.materials.values()} | {l.spd.grid for l in scene.lights}
    if len(grids) > 1:
        raise SceneError("all spectra in a scene must share one wavelength grid")
    names = set()
    for p in list(scene.primitives) + list(scene.lights):
        if p.name in names:
            raise SceneError(f"duplicate primitive name {p.name!r}")
        names.add(p.name)
        mat = getattr(p, "material", None)
        if mat is not None and mat not in scene.materials:
            raise SceneError(f"{p.name}: unknown material {mat!r}")
    qnames = {q.name for q in scene.quads()}
    for t in scene.targets:
        missing = [n for n in t.primitives if n not in qnames]
        if missing:
            raise SceneError(f"target {t.name}: missing primitives {missing}")


# ---------------------------------------------------------------------------
# Builders
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BlockSpec:
    name: str
    center: tuple  # (x, z)
    size: tuple  # (w, h, d)
    rotation_deg: float = 0.0


DEFAULT_BLOCKS = (
    BlockSpec("tall_block", (0.15, 0.27), (0.165, 0.33, 0.165), -30.0),
    BlockSpec("short_block", (0.40, 0.20), (0.165, 0.165, 0.165), 20.0),
)
DEFAULT_LIGHT_HOLE = (0.2100, 0.2225, 0.3400, 0.3275)  # (x0, z0, x1, z1)


def _rect_quad(name, material, x0, x1, y0, y1, z0, z1, facing):
    """Axis-aligned rectangle in a constant-coordinate plane, normal along ``facing``."""
    if facing in ("+y", "-y"):
        y = y0
        pts = [(x0, y, z0), (x1, y, z0), (x1, y, z1), (x0, y, z1)]
    elif facing in ("+x", "-x"):
        x = x0
        pts = [(x, y0, z0), (x, y0, z1), (x, y1, z1), (x, y1, z0)]
    else:
        z = z0
        pts = [(x0, y0, z), (x0, y1, z), (x1, y1, z), (x1, y0, z)]
    n = _quad_normal(pts)
    axis = "xyz".index(facing[1])
    want = 1.0 if facing[0] == "+" else -1.0
    if n[axis] * want < 0:
        pts = pts[::-1]
    return Quad(name, pts, material)


def build_cornell_box(
    box_size: float = 0.55,
    block_specs=DEFAULT_BLOCKS,
    light_hole=DEFAULT_LIGHT_HOLE,
    wall_spectra: dict | None = None,
    light_spd: SpectralDistribution | None = None,
    camera: PinholeCamera | None = None,
    grid: WavelengthGrid = DEFAULT_GRID,
) -> SceneGraph:
    """Five-walled box (open front) with red left wall, green right wall, white
    floor/ceiling/back, two white blocks and an area light over the ceiling hole.
    """
    s = float(box_size)
    if not s > 0:
        raise SceneError("box_size must be positive")
    spectra = {"white": white_paint_reflectance(grid), "red": red_paper_reflectance(grid),
               "green": green_paper_reflectance(grid)}
    spectra.update(wall_spectra or {})
    materials = {k: MatteMaterial(v) for k, v in spectra.items()}
    spd = light_spd if light_spd is not None else default_light_spd(grid)

    hx0, hz0, hx1, hz1 = (float(v) for v in light_hole)
    if not (hx1 > hx0 and hz1 > hz0):
        raise SceneError("light_hole: zero-area light hole")
    if not (0 < hx0 and hx1 < s and 0 < hz0 and hz1 < s):
        raise SceneError("light_hole: hole must lie strictly within the ceiling")

    prims = [
        _rect_quad("floor", "white", 0, s, 0, 0, 0, s, "+y"),
        _rect_quad("back_wall", "white", 0, s, 0, s, s, s, "-z"),
        _rect_quad("left_wall", "red", 0, 0, 0, s, 0, s, "+x"),
        _rect_quad("right_wall", "green", s, s, 0, s, 0, s, "-x"),
        # ceiling as four strips framing the hole
        _rect_quad("ceiling.front", "white", 0, s, s, s, 0, hz0, "-y"),
        _rect_quad("ceiling.back", "white", 0, s, s, s, hz1, s, "-y"),
        _rect_quad("ceiling.left", "white", 0, hx0, s, s, hz0, hz1, "-y"),
        _rect_quad("ceiling.right", "white", hx1, s, s, s, hz0, hz1, "-y"),
    ]
    for b in block_specs:
        box = Box(b.name, b.center, b.size, "white", b.rotation_deg)
        c = box.corners()
        if c[:, 0].min() < 0 or c[:, 0].max() > s or c[:, 2].min() < 0 or c[:, 2].max() > s:
            raise SceneError(f"{b.name}: block footprint extends outside the box")
        if b.size[1] >= s:
            raise SceneError(f"{b.name}: block is taller than the box")
        prims.append(box)
    light = AreaLight("ceiling_light", _rect_quad("_", "white", hx0, hx1, s, s, hz0, hz1, "-y").vertices, spd)
    cam = camera if camera is not None else PinholeCamera(
        position=(s / 2, s / 2, -1.545 * s), look_at=(s / 2, s / 2, s))
    return SceneGraph(cam, materials, tuple(prims), (light,), ())


def build_furnace(reflectance: float = 0.5, emitted_radiance: float = 1.0, size: float = 1.0,
                  resolution: int = 16, grid: WavelengthGrid = DEFAULT_GRID) -> SceneGraph:
    """Closed cube whose six inward-facing walls all emit ``emitted_radiance`` and
    reflect ``reflectance``; every camera ray sees ``Le / (1 - rho)``.
    """
    s = float(size)
    mat = {"wall": MatteMaterial(SpectralDistribution.constant(reflectance, "reflectance", grid))}
    spd = SpectralDistribution.constant(emitted_radiance, "radiance", grid)
    walls = [
        _rect_quad("floor", "wall", 0, s, 0, 0, 0, s, "+y"),
        _rect_quad("ceiling", "wall", 0, s, s, s, 0, s, "-y"),
        _rect_quad("left", "wall", 0, 0, 0, s, 0, s, "+x"),
        _rect_quad("right", "wall", s, s, 0, s, 0, s, "-x"),
        _rect_quad("front", "wall", 0, s, 0, s, 0, 0, "+z"),
        _rect_quad("back", "wall", 0, s, 0, s, s, s, "-z"),
    ]
    lights = tuple(AreaLight(w.name, w.vertices, spd, False, "wall") for w in walls)
    cam = PinholeCamera(position=(s / 2, s / 2, s / 4), look_at=(s / 2, s / 2, s), focal_length_mm=4.0,
                        sensor_width_mm=6.0, sensor_height_mm=6.0, resolution=(resolution, resolution))
    return SceneGraph(cam, mat, (), lights, ())


def _inside_box(scene: SceneGraph, pts, what: str):
    lo, hi = scene.bounds()
    pts = np.asarray(pts)
    tol = 1e-9
    if np.any(pts < lo - tol) or np.any(pts > hi + tol):
        raise SceneError(f"{what}: placement extends outside the box")


def _target_frame(center, normal, up):
    n = np.asarray(normal, dtype=np.float64)
    n /= np.linalg.norm(n)
    u = np.asarray(up, dtype=np.float64)
    u = u - np.dot(u, n) * n
    u /= np.linalg.norm(u)
    r = np.cross(n, u)  # "right" as seen by a viewer looking against n
    return np.asarray(center, dtype=np.float64), r, u, n


def _planar_quad(c, r, u, n, corners_ru, offset=0.0):
    pts = [c + a * r + b * u + offset * n for a, b in corners_ru]
    # wind so that the normal points along n
    if np.dot(_quad_normal(pts), n) < 0:
        pts = pts[::-1]
    return pts


MCC_NAMES = tuple(mcc_reflectances().keys())


def place_mcc(scene: SceneGraph, center, size: float, margin_reflectance: float = 0.0,
              normal=(0.0, 0.0, -1.0), up=(0.0, 1.0, 0.0), name: str = "mcc") -> SceneGraph:
    """Add a 6x4 Macbeth chart of width ``size`` (m) centred on ``center``."""
    if not size > 0:
        raise SceneError(f"{name}: chart size must be positive")
    grid = scene.grid
    c, r, u, n = _target_frame(center, normal, up)
    width, height = float(size), float(size) * 4.0 / 6.0
    pitch = width / 6.0
    patch = 0.8 * pitch
    board = _planar_quad(c, r, u, n, [(-width / 2, -height / 2), (width / 2, -height / 2),
                                      (width / 2, height / 2), (-width / 2, height / 2)], 0.002)
    _inside_box(scene, board, name)
    refl = mcc_reflectances(grid)
    materials = dict(scene.materials)
    materials[f"{name}.margin"] = MatteMaterial(SpectralDistribution.constant(margin_reflectance, "reflectance", grid))
    prims = [Quad(f"{name}.board", board, f"{name}.margin")]
    for i, pname in enumerate(MCC_NAMES):
        row, col = divmod(i, 6)
        pc = c + (-width / 2 + pitch * (col + 0.5)) * r + (height / 2 - pitch * (row + 0.5)) * u
        h = patch / 2
        verts = _planar_quad(pc, r, u, n, [(-h, -h), (h, -h), (h, h), (-h, h)], 0.003)
        mat = f"{name}.{pname}"
        materials[mat] = MatteMaterial(refl[pname])
        prims.append(Quad(mat, verts, mat))
    target = Target(name, "mcc", tuple(c), width, 0.0, tuple(p.name for p in prims))
    return replace(scene, materials=materials, primitives=scene.primitives + tuple(prims),
                   targets=scene.targets + (target,))


def mcc_patch_centers(scene: SceneGraph, name: str = "mcc") -> dict[str, np.ndarray]:
    """World-space centres of the chart patches keyed by patch name."""
    quads = {q.name: q for q in scene.quads()}
    return {p: np.mean(quads[f"{name}.{p}"].vertices, axis=0) for p in MCC_NAMES}


def place_slanted_edge(scene: SceneGraph, center, size: float, angle_deg: float = 5.0,
                       normal=None, up=(0.0, 1.0, 0.0), dark: float = 0.04, bright: float = 0.9,
                       name: str = "edge") -> SceneGraph:
    """Add a square target split by a straight edge ``angle_deg`` from vertical.

    The left half (as seen from the camera) is dark, the right half bright.
    ``normal`` defaults to the direction from the target toward the camera.
    """
    if not (0.0 < angle_deg < 45.0):
        raise SceneError(f"{name}: edge angle must lie in (0, 45) degrees, got {angle_deg}")
    if not size > 0:
        raise SceneError(f"{name}: target size must be positive")
    grid = scene.grid
    if normal is None:
        normal = np.subtract(scene.camera.position, center)
    c, r, u, n = _target_frame(center, normal, up)
    h = size / 2.0
    t = math.tan(math.radians(angle_deg))
    left = _planar_quad(c, r, u, n, [(-h, -h), (-h * t, -h), (h * t, h), (-h, h)])
    right = _planar_quad(c, r, u, n, [(-h * t, -h), (h, -h), (h, h), (h * t, h)])
    _inside_box(scene, left + right, name)
    materials = dict(scene.materials)
    materials[f"{name}.dark"] = MatteMaterial(SpectralDistribution.constant(dark, "reflectance", grid))
    materials[f"{name}.bright"] = MatteMaterial(SpectralDistribution.constant(bright, "reflectance", grid))
    prims = (Quad(f"{name}.dark", left, f"{name}.dark"), Quad(f"{name}.bright", right, f"{name}.bright"))
    target = Target(name, "slanted_edge", tuple(c), float(size), float(angle_deg), tuple(p.name for p in prims))
    return replace(scene, materials=materials, primitives=scene.primitives + prims,
                   targets=scene.targets + (target,))


def slanted_edge_fixture(distance_m: float = 0.5, angle_deg: float = 5.0, sensor_pixels: int = 64,
                         pixel_pitch_um: float = 1.4, oversample: int = 4,
                         target_center=(0.275, 0.20, 0.42), target_size: float = 0.05,
                         focal_length_mm: float = 4.38) -> SceneGraph:
    """Cornell box with a slanted-edge target ``distance_m`` in front of the camera.

    The camera is rendered ``oversample`` times finer than the sensor so the
    sensor stage can integrate each pixel's full aperture.
    """
    res = sensor_pixels * oversample
    width_mm = res * pixel_pitch_um / oversample * 1e-3
    c = np.asarray(target_center, dtype=np.float64)
    cam = PinholeCamera(position=tuple(c - np.array([0.0, 0.0, distance_m])), look_at=tuple(c),
                        focal_length_mm=focal_length_mm, sensor_width_mm=width_mm,
                        sensor_height_mm=width_mm, resolution=(res, res))
    box = build_cornell_box(camera=cam)
    return place_slanted_edge(box, tuple(c), target_size, angle_deg, normal=(0.0, 0.0, -1.0))


# ---------------------------------------------------------------------------
# JSON document
# ---------------------------------------------------------------------------

_TOP_KEYS = {"camera", "materials", "lights", "primitives", "targets"}


def _spectrum_to_json(s: SpectralDistribution) -> dict:
    return {"start_nm": s.grid.start_nm, "step_nm": s.grid.step_nm, "values": [float(v) for v in s.values]}


def _spectrum_from_json(obj, unit: str, path: str, base: Path | None) -> SpectralDistribution:
    try:
        if isinstance(obj, str):
            p = Path(obj)
            if base is not None and not p.is_absolute():
                p = base / p
            return read_spectrum_csv(p, unit, DEFAULT_GRID)
        if isinstance(obj, list):
            return SpectralDistribution(DEFAULT_GRID, obj, unit)
        if isinstance(obj, dict):
            extra = set(obj) - {"start_nm", "step_nm", "values"}
            if extra:
                raise SceneError(f"{path}: unknown keys {sorted(extra)}")
            vals = obj["values"]
            grid = WavelengthGrid(obj.get("start_nm", 400.0), obj.get("step_nm", 10.0), len(vals))
            return SpectralDistribution(grid, vals, unit)
    except SceneError:
        raise
    except (ValueError, KeyError, TypeError, OSError) as exc:
        msg = str(exc)
        if "[0, 1]" in msg:
            msg = "reflectance out of range"
        raise SceneError(f"{path}: {msg}") from None
    raise SceneError(f"{path}: expected a CSV path, an array, or a spectrum object")


def _require(obj: dict, keys: set, optional: set, path: str):
    if not isinstance(obj, dict):
        raise SceneError(f"{path}: expected an object")
    missing = keys - set(obj)
    if missing:
        raise SceneError(f"{path}: missing keys {sorted(missing)}")
    extra = set(obj) - keys - optional
    if extra:
        raise SceneError(f"{path}: unknown keys {sorted(extra)}")


def scene_to_dict(scene: SceneGraph) -> dict:
    cam = scene.camera
    prims = []
    for p in scene.primitives:
        if isinstance(p, Box):
            prims.append({"type": "box", "name": p.name, "center": list(p.center), "size": list(p.size),
                          "rotation_deg": p.rotation_deg, "material": p.material})
        else:
            prims.append({"type": "quad", "name": p.name, "vertices": [list(v) for v in p.vertices],
                          "material": p.material})
    return {
        "camera": {"position": list(cam.position), "look_at": list(cam.look_at), "up": list(cam.up),
                   "focal_length_mm": cam.focal_length_mm, "sensor_width_mm": cam.sensor_width_mm,
                   "sensor_height_mm": cam.sensor_height_mm, "resolution": list(cam.resolution)},
        "materials": {k: _spectrum_to_json(m.reflectance) for k, m in scene.materials.items()},
        "lights": [{"name": l.name, "vertices": [list(v) for v in l.vertices], "spd": _spectrum_to_json(l.spd),
                    "two_sided": l.two_sided, "material": l.material} for l in scene.lights],
        "primitives": prims,
        "targets": [{"name": t.name, "kind": t.kind, "center": list(t.center), "size": t.size,
                     "angle_deg": t.angle_deg, "primitives": list(t.primitives)} for t in scene.targets],
    }


def serialize_scene(scene: SceneGraph) -> str:
    return json.dumps(scene_to_dict(scene), indent=1)


def scene_from_dict(doc: dict, base: Path | None = None) -> SceneGraph:
    if not isinstance(doc, dict):
        raise SceneError("scene document must be a JSON object")
    extra = set(doc) - _TOP_KEYS
    if extra:
        raise SceneError(f"unknown top-level keys {sorted(extra)}")
    if "camera" not in doc:
        raise SceneError("camera required")
    try:
        c = doc["camera"]
        _require(c, {"position", "look_at"}, {"up", "focal_length_mm", "sensor_width_mm",
                                             "sensor_height_mm", "resolution"}, "camera")
        camera = PinholeCamera(**c)
        mats = doc.get("materials", {})
        if not isinstance(mats, dict):
            raise SceneError("materials: expected an object")
        materials = {k: MatteMaterial(_spectrum_from_json(v, "reflectance", f"materials.{k}", base))
                     for k, v in mats.items()}
        lights = []
        for i, l in enumerate(doc.get("lights", [])):
            path = f"lights[{i}]"
            _require(l, {"name", "vertices", "spd"}, {"two_sided", "material"}, path)
            lights.append(AreaLight(l["name"], l["vertices"], _spectrum_from_json(l["spd"], "radiance", f"{path}.spd", base),
                                    bool(l.get("two_sided", False)), l.get("material")))
        prims = []
        for i, p in enumerate(doc.get("primitives", [])):
            path = f"primitives[{i}]"
            kind = p.get("type") if isinstance(p, dict) else None
            if kind == "quad":
                _require(p, {"type", "name", "vertices", "material"}, set(), path)
                prims.append(Quad(p["name"], p["vertices"], p["material"]))
            elif kind == "box":
                _require(p, {"type", "name", "center", "size", "material"}, {"rotation_deg"}, path)
                prims.append(Box(p["name"], p["center"], p["size"], p["material"], float(p.get("rotation_deg", 0.0))))
            else:
                raise SceneError(f"{path}.type: expected 'quad' or 'box'")
        targets = []
        for i, t in enumerate(doc.get("targets", [])):
            path = f"targets[{i}]"
            _require(t, {"name", "kind", "center", "size"}, {"angle_deg", "primitives"}, path)
            targets.append(Target(t["name"], t["kind"], t["center"], float(t["size"]),
                                  float(t.get("angle_deg", 0.0)), t.get("primitives", ())))
        return SceneGraph(camera, materials, tuple(prims), tuple(lights), tuple(targets))
    except SceneError:
        raise
    except (TypeError, ValueError) as exc:
        raise SceneError(str(exc)) from None


def parse_scene(text: str, base: Path | None = None) -> SceneGraph:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SceneError(f"invalid JSON: {exc}") from None
    return scene_from_dict(doc, base)


def load_scene(path) -> SceneGraph:
    path = Path(path)
    return parse_scene(path.read_text(), base=path.parent)


def save_scene(scene: SceneGraph, path) -> None:
    Path(path).write_text(serialize_scene(scene))
