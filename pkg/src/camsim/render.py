"""Monte Carlo spectral path tracer for Lambertian scenes.

Paths carry the full spectral vector.  At every diffuse vertex the
integrator samples a point on the emitters (area-proportional) and a
cosine-weighted bounce direction, and combines the two strategies for
emitter hits with the power heuristic.  Russian roulette starts at a
configurable depth.  Each random number is keyed by
``(seed, pixel, sample, dimension)`` so images do not depend on the number of
threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numba as nb
import numpy as np

from camsim.cube import SpectralCube
from camsim.radiometry import SpectralDistribution
from camsim.rng import STREAM_RENDER, uniform01
from camsim.scene import AreaLight, SceneGraph

_EPS = 1e-7
# barycentric slack so rays grazing a shared edge are not lost to roundoff
_EDGE_TOL = 1e-12

if nb.config.THREADING_LAYER == "default":
    # deterministic results do not depend on the layer; avoid probing an old TBB
    nb.config.THREADING_LAYER = "workqueue"


@dataclass(frozen=True)
class RenderConfig:
    samples_per_pixel: int = 256
    max_depth: int = 10
    russian_roulette_start_depth: int = 5
    seed: int = 0

    def __post_init__(self):
        if int(self.samples_per_pixel) < 1:
            raise ValueError("samples_per_pixel must be >= 1")
        if int(self.max_depth) < 1:
            raise ValueError("max_depth must be >= 1")
        if int(self.russian_roulette_start_depth) < 1:
            raise ValueError("russian_roulette_start_depth must be >= 1")
        if int(self.seed) < 0:
            raise ValueError("seed must be non-negative")

    def to_dict(self) -> dict:
        return {"samples_per_pixel": self.samples_per_pixel, "max_depth": self.max_depth,
                "russian_roulette_start_depth": self.russian_roulette_start_depth, "seed": self.seed}

    @classmethod
    def from_dict(cls, d: dict) -> "RenderConfig":
        extra = set(d) - {"samples_per_pixel", "max_depth", "russian_roulette_start_depth", "seed"}
        if extra:
            raise ValueError(f"unknown render keys: {sorted(extra)}")
        return cls(**d)


@dataclass(frozen=True, eq=False)
class CompiledScene:
    """Triangle soup plus emitter tables in the layout the kernels expect."""

    v0: np.ndarray
    e1: np.ndarray
    e2: np.ndarray
    normal: np.ndarray
    material: np.ndarray  # row into reflectance
    emitter: np.ndarray  # row into emission, -1 if not emissive
    quad_index: np.ndarray  # owning quad (for id buffers)
    quad_names: tuple
    reflectance: np.ndarray  # (n_materials + 1, n_wl); last row is black
    emission: np.ndarray  # (n_emitters, n_wl)
    two_sided: np.ndarray  # (n_emitters,) uint8
    light_tris: np.ndarray
    light_cdf: np.ndarray
    light_area: float


def _split_quad(verts):
    v = np.asarray(verts, dtype=np.float64)
    return [(v[0], v[1], v[2]), (v[0], v[2], v[3])]


def compile_scene(scene: SceneGraph) -> CompiledScene:
    mat_names = list(scene.materials)
    mat_row = {m: i for i, m in enumerate(mat_names)}
    grid = scene.grid
    refl = np.zeros((len(mat_names) + 1, grid.count))
    for i, m in enumerate(mat_names):
        refl[i] = scene.materials[m].reflectance.values
    black = len(mat_names)

    tris, mats, emits, owners, names = [], [], [], [], []
    for q in scene.quads():
        for t in _split_quad(q.vertices):
            tris.append(t)
            mats.append(mat_row[q.material])
            emits.append(-1)
            owners.append(len(names))
        names.append(q.name)
    emission = np.zeros((len(scene.lights), grid.count))
    two = np.zeros(len(scene.lights), dtype=np.uint8)
    for k, light in enumerate(scene.lights):
        emission[k] = light.spd.values
        two[k] = light.two_sided
        for t in _split_quad(light.vertices):
            tris.append(t)
            mats.append(mat_row[light.material] if light.material else black)
            emits.append(k)
            owners.append(len(names))
        names.append(light.name)

    tri = np.array(tris)  # (T, 3 vertices, 3)
    v0 = tri[:, 0].copy()
    e1 = tri[:, 1] - tri[:, 0]
    e2 = tri[:, 2] - tri[:, 0]
    n = np.cross(e1, e2)
    area = 0.5 * np.linalg.norm(n, axis=1)
    n /= np.linalg.norm(n, axis=1)[:, None]
    emits = np.array(emits, dtype=np.int64)
    light_tris = np.nonzero(emits >= 0)[0].astype(np.int64)
    la = area[light_tris]
    return CompiledScene(
        v0, np.ascontiguousarray(e1), np.ascontiguousarray(e2), np.ascontiguousarray(n),
        np.array(mats, dtype=np.int64), emits, np.array(owners, dtype=np.int64), tuple(names),
        refl, emission, two, light_tris, np.cumsum(la) / la.sum(), float(la.sum()),
    )


# ---------------------------------------------------------------------------
# Kernels
# ---------------------------------------------------------------------------

@nb.njit(cache=True)
def _intersect(ox, oy, oz, dx, dy, dz, v0, e1, e2, tmax):
    best = tmax
    hit = -1
    for i in range(v0.shape[0]):
        ax, ay, az = e1[i, 0], e1[i, 1], e1[i, 2]
        bx, by, bz = e2[i, 0], e2[i, 1], e2[i, 2]
        px = dy * bz - dz * by
        py = dz * bx - dx * bz
        pz = dx * by - dy * bx
        det = ax * px + ay * py + az * pz
        if abs(det) < 1e-18:
            continue
        inv = 1.0 / det
        tx, ty, tz = ox - v0[i, 0], oy - v0[i, 1], oz - v0[i, 2]
        u = (tx * px + ty * py + tz * pz) * inv
        if u < -_EDGE_TOL or u > 1.0 + _EDGE_TOL:
            continue
        qx = ty * az - tz * ay
        qy = tz * ax - tx * az
        qz = tx * ay - ty * ax
        v = (dx * qx + dy * qy + dz * qz) * inv
        if v < -_EDGE_TOL or u + v > 1.0 + _EDGE_TOL:
            continue
        t = (bx * qx + by * qy + bz * qz) * inv
        if t > 1e-9 and t < best:
            best = t
            hit = i
    return hit, best


@nb.njit(cache=True)
def _sample_light(u, ua, ub, v0, e1, e2, light_tris, light_cdf):
    k = np.searchsorted(light_cdf, u, side="right")
    if k >= light_tris.shape[0]:
        k = light_tris.shape[0] - 1
    tri = light_tris[k]
    su = math.sqrt(ua)
    b1 = su * (1.0 - ub)
    b2 = su * ub
    qx = v0[tri, 0] + b1 * e1[tri, 0] + b2 * e2[tri, 0]
    qy = v0[tri, 1] + b1 * e1[tri, 1] + b2 * e2[tri, 1]
    qz = v0[tri, 2] + b1 * e1[tri, 2] + b2 * e2[tri, 2]
    return tri, qx, qy, qz


@nb.njit(cache=True)
def _trace(ox, oy, oz, dx, dy, dz, seed, pix, s, max_depth, rr_start,
           v0, e1, e2, nrm, mat, emit, refl, emission, two, light_tris, light_cdf, light_area, out):
    nl = refl.shape[1]
    beta = np.ones(nl)
    pb_prev = 1.0
    inv_pi = 1.0 / math.pi
    for depth in range(max_depth + 1):
        hit, t = _intersect(ox, oy, oz, dx, dy, dz, v0, e1, e2, 1e30)
        if hit < 0:
            break
        px = ox + t * dx
        py = oy + t * dy
        pz = oz + t * dz
        nx, ny, nz = nrm[hit, 0], nrm[hit, 1], nrm[hit, 2]
        cos_o = -(dx * nx + dy * ny + dz * nz)
        e = emit[hit]
        if e >= 0 and (cos_o > 0.0 or two[e] != 0):
            w = 1.0
            if depth > 0:
                pl = t * t / (abs(cos_o) * light_area)
                w = pb_prev * pb_prev / (pb_prev * pb_prev + pl * pl)
            for k in range(nl):
                out[k] += beta[k] * emission[e, k] * w
        if depth == max_depth:
            break
        if cos_o < 0.0:
            nx, ny, nz = -nx, -ny, -nz
        m = mat[hit]
        rmax = 0.0
        for k in range(nl):
            rmax = max(rmax, refl[m, k])
        if rmax == 0.0:
            break
        scale = _EPS * (1.0 + abs(px) + abs(py) + abs(pz))
        sx, sy, sz = px + scale * nx, py + scale * ny, pz + scale * nz

        base = 2 + 6 * depth
        # next-event estimation
        if light_tris.shape[0] > 0:
            ltri, qx, qy, qz = _sample_light(
                uniform01(seed, STREAM_RENDER, pix, s, base), uniform01(seed, STREAM_RENDER, pix, s, base + 1),
                uniform01(seed, STREAM_RENDER, pix, s, base + 2), v0, e1, e2, light_tris, light_cdf)
            wx, wy, wz = qx - px, qy - py, qz - pz
            d2 = wx * wx + wy * wy + wz * wz
            dist = math.sqrt(d2)
            if dist > 0.0:
                wx, wy, wz = wx / dist, wy / dist, wz / dist
                cos_s = nx * wx + ny * wy + nz * wz
                le = emit[ltri]
                cos_l = -(nrm[ltri, 0] * wx + nrm[ltri, 1] * wy + nrm[ltri, 2] * wz)
                if cos_s > 0.0 and (cos_l > 0.0 or two[le] != 0) and abs(cos_l) > 1e-12:
                    blocker, _ = _intersect(sx, sy, sz, wx, wy, wz, v0, e1, e2, dist * (1.0 - 1e-7) - scale)
                    if blocker < 0:
                        pl = d2 / (abs(cos_l) * light_area)
                        pb = cos_s * inv_pi
                        w = pl * pl / (pl * pl + pb * pb)
                        f = cos_s * inv_pi / pl * w
                        for k in range(nl):
                            out[k] += beta[k] * refl[m, k] * emission[le, k] * f
        # cosine-weighted bounce
        u1 = uniform01(seed, STREAM_RENDER, pix, s, base + 3)
        u2 = uniform01(seed, STREAM_RENDER, pix, s, base + 4)
        r = math.sqrt(u1)
        phi = 2.0 * math.pi * u2
        lx, ly, lz = r * math.cos(phi), r * math.sin(phi), math.sqrt(max(0.0, 1.0 - u1))
        # orthonormal basis around n (Duff et al.)
        sign = 1.0 if nz >= 0.0 else -1.0
        a = -1.0 / (sign + nz)
        b = nx * ny * a
        tx, ty, tz = 1.0 + sign * nx * nx * a, sign * b, -sign * nx
        bx, by, bz = b, sign + ny * ny * a, -ny
        dx = lx * tx + ly * bx + lz * nx
        dy = lx * ty + ly * by + lz * ny
        dz = lx * tz + ly * bz + lz * nz
        norm = math.sqrt(dx * dx + dy * dy + dz * dz)
        dx, dy, dz = dx / norm, dy / norm, dz / norm
        pb_prev = lz * inv_pi
        ox, oy, oz = sx, sy, sz
        bmax = 0.0
        for k in range(nl):
            beta[k] *= refl[m, k]
            bmax = max(bmax, beta[k])
        if depth + 1 >= rr_start:
            q = min(max(bmax, 0.05), 0.95)
            if uniform01(seed, STREAM_RENDER, pix, s, base + 5) >= q:
                break
            for k in range(nl):
                beta[k] /= q


@nb.njit(parallel=True, cache=True)
def _render_kernel(width, height, spp, max_depth, rr_start, seed, cam,
                   v0, e1, e2, nrm, mat, emit, refl, emission, two, light_tris, light_cdf, light_area, out):
    nl = refl.shape[1]
    ox, oy, oz = cam[0], cam[1], cam[2]
    for pix in nb.prange(width * height):
        col = pix % width
        row = pix // width
        acc = np.zeros(nl)
        for s in range(spp):
            u0 = uniform01(seed, STREAM_RENDER, pix, s, 0)
            u1 = uniform01(seed, STREAM_RENDER, pix, s, 1)
            sx = ((col + u0) / width - 0.5) * cam[13]
            sy = (0.5 - (row + u1) / height) * cam[14]
            dx = cam[3] * cam[12] + cam[6] * sx + cam[9] * sy
            dy = cam[4] * cam[12] + cam[7] * sx + cam[10] * sy
            dz = cam[5] * cam[12] + cam[8] * sx + cam[11] * sy
            norm = math.sqrt(dx * dx + dy * dy + dz * dz)
            _trace(ox, oy, oz, dx / norm, dy / norm, dz / norm, seed, pix, s, max_depth, rr_start,
                   v0, e1, e2, nrm, mat, emit, refl, emission, two, light_tris, light_cdf, light_area, acc)
        for k in range(nl):
            out[row, col, k] = acc[k] / spp


@nb.njit(cache=True)
def _primary_kernel(width, height, cam, v0, e1, e2, out):
    for pix in range(width * height):
        col = pix % width
        row = pix // width
        sx = ((col + 0.5) / width - 0.5) * cam[13]
        sy = (0.5 - (row + 0.5) / height) * cam[14]
        dx = cam[3] * cam[12] + cam[6] * sx + cam[9] * sy
        dy = cam[4] * cam[12] + cam[7] * sx + cam[10] * sy
        dz = cam[5] * cam[12] + cam[8] * sx + cam[11] * sy
        norm = math.sqrt(dx * dx + dy * dy + dz * dz)
        hit, _ = _intersect(cam[0], cam[1], cam[2], dx / norm, dy / norm, dz / norm, v0, e1, e2, 1e30)
        out[row, col] = hit


def _camera_vector(scene: SceneGraph) -> np.ndarray:
    cam = scene.camera
    fwd, right, up = cam.basis()
    return np.concatenate([cam.position, fwd, right, up,
                           [cam.focal_length_mm, cam.sensor_width_mm, cam.sensor_height_mm]]).astype(np.float64)


def render(scene: SceneGraph, config: RenderConfig = RenderConfig(), threads: int | None = None,
           compiled: CompiledScene | None = None) -> SpectralCube:
    """Spectral radiance (W sr^-1 m^-2 nm^-1) seen by the scene camera."""
    cs = compiled if compiled is not None else compile_scene(scene)
    width, height = scene.camera.resolution
    out = np.zeros((height, width, cs.reflectance.shape[1]))
    previous = nb.get_num_threads()
    if threads is not None:
        nb.set_num_threads(max(1, min(int(threads), nb.config.NUMBA_NUM_THREADS)))
    try:
        _render_kernel(width, height, int(config.samples_per_pixel), int(config.max_depth),
                       int(config.russian_roulette_start_depth), int(config.seed), _camera_vector(scene),
                       cs.v0, cs.e1, cs.e2, cs.normal, cs.material, cs.emitter, cs.reflectance,
                       cs.emission, cs.two_sided, cs.light_tris, cs.light_cdf, cs.light_area, out)
    finally:
        nb.set_num_threads(previous)
    return SpectralCube(out, scene.grid, "radiance", scene.camera.pitch_um)


def primary_hits(scene: SceneGraph, compiled: CompiledScene | None = None) -> tuple[np.ndarray, tuple]:
    """Index of the quad seen through each pixel centre (-1 for none) and the quad names."""
    cs = compiled if compiled is not None else compile_scene(scene)
    width, height = scene.camera.resolution
    tri = np.empty((height, width), dtype=np.int64)
    _primary_kernel(width, height, _camera_vector(scene), cs.v0, cs.e1, cs.e2, tri)
    ids = np.where(tri >= 0, cs.quad_index[np.maximum(tri, 0)], -1)
    return ids, cs.quad_names


def direct_light_estimate(scene: SceneGraph, hit_point, normal, reflectance: SpectralDistribution,
                          light: AreaLight, rng: np.random.Generator,
                          compiled: CompiledScene | None = None) -> SpectralDistribution:
    """One-sample area-light estimate of reflected radiance at ``hit_point``.

    Returns ``Le * (rho/pi) * cos_s * cos_l * A / d^2`` for a uniformly chosen
    point on ``light``, or zero when the point is occluded or faces away.
    """
    cs = compiled if compiled is not None else compile_scene(scene)
    p = np.asarray(hit_point, dtype=np.float64)
    n = np.asarray(normal, dtype=np.float64)
    n = n / np.linalg.norm(n)
    verts = np.asarray(light.vertices)
    tris = [(verts[0], verts[1], verts[2]), (verts[0], verts[2], verts[3])]
    areas = np.array([0.5 * np.linalg.norm(np.cross(b - a, c - a)) for a, b, c in tris])
    a, b, c = tris[0] if rng.random() * areas.sum() < areas[0] else tris[1]
    su = math.sqrt(rng.random())
    ub = rng.random()
    q = a + su * (1.0 - ub) * (b - a) + su * ub * (c - a)
    w = q - p
    dist = float(np.linalg.norm(w))
    w /= dist
    cos_s = float(np.dot(n, w))
    cos_l = float(-np.dot(light.normal, w))
    zero = SpectralDistribution(reflectance.grid, np.zeros(reflectance.grid.count), "radiance")
    if cos_s <= 0.0 or (cos_l <= 0.0 and not light.two_sided) or dist == 0.0:
        return zero
    scale = _EPS * (1.0 + np.abs(p).sum())
    s = p + scale * n
    blocker, _ = _intersect(s[0], s[1], s[2], w[0], w[1], w[2], cs.v0, cs.e1, cs.e2, dist * (1.0 - 1e-7) - scale)
    if blocker >= 0:
        return zero
    g = cos_s * abs(cos_l) * areas.sum() / dist ** 2
    return SpectralDistribution(reflectance.grid, light.spd.values * reflectance.values / math.pi * g, "radiance")


def scale_to_luminance(cube: SpectralCube, target: float) -> SpectralCube:
    """Uniformly rescale so that the mean image luminance equals ``target`` cd/m^2."""
    if target < 0:
        raise ValueError("target luminance must be non-negative")
    current = cube.mean_luminance()
    if not current > 0:
        raise ValueError("cannot scale a cube with zero mean luminance")
    return cube.with_values(cube.values * (target / current))
