"""Manifest-driven pipeline: scene -> render -> optics -> sensor -> analysis.

Each stage writes its artifact under a ``.partial`` name and renames it once
the write completes, so a failed run leaves only clearly marked leftovers.
A ``provenance.json`` sidecar records seeds, config hashes, the tool version
and a digest of every artifact.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

import camsim
from camsim.analysis.demosaic import demosaic_bilinear
from camsim.cube import read_cube, write_cube
from camsim.optics import OpticsConfig, radiance_to_irradiance
from camsim.raw import read_pgm, write_pgm, write_ppm16
from camsim.render import RenderConfig, render, scale_to_luminance
from camsim.scene import load_scene, save_scene
from camsim.sensor import SensorConfig, expose, integrate_pixels, make_fixed_patterns

STAGES = ("scene", "render", "optics", "sensor", "analysis")
ARTIFACTS = {
    "scene": "scene.json",
    "render": "radiance.cube",
    "optics": "irradiance.cube",
    "sensor": "raw.pgm",
    "analysis": "preview.ppm",
}


class ManifestError(ValueError):
    pass


class StageError(RuntimeError):
    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"stage {stage!r} failed: {cause}")
        self.stage = stage


def _digest(obj) -> str:
    text = json.dumps(obj, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode()).hexdigest()


def _file_digest(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


@dataclass
class PipelineManifest:
    scene: Path
    out: Path
    render: RenderConfig = field(default_factory=RenderConfig)
    optics: OpticsConfig = field(default_factory=OpticsConfig)
    sensor: dict = field(default_factory=dict)  # SensorConfig fields; rows/cols default to the image
    stages: tuple = STAGES
    luminance: float | None = None  # mean scene luminance (cd/m^2) after scaling
    oversample: int = 1
    auto_exposure: float | None = None  # fill fraction of the well at the 99th percentile

    def __post_init__(self):
        self.scene = Path(self.scene)
        self.out = Path(self.out)
        self.stages = tuple(self.stages)
        if not self.stages or self.stages != STAGES[:len(self.stages)]:
            raise ManifestError(f"stages must be a non-empty prefix of {list(STAGES)}, got {list(self.stages)}")
        if not self.scene.is_file():
            raise ManifestError(f"scene file not found: {self.scene}")
        if self.oversample < 1:
            raise ManifestError("oversample must be >= 1")
        if self.luminance is not None and self.luminance < 0:
            raise ManifestError("luminance must be non-negative")

    def to_dict(self) -> dict:
        return {
            "scene": str(self.scene),
            "out": str(self.out),
            "render": self.render.to_dict(),
            "optics": self.optics.to_dict(),
            "sensor": dict(self.sensor),
            "stages": list(self.stages),
            "luminance": self.luminance,
            "oversample": self.oversample,
            "auto_exposure": self.auto_exposure,
        }

    @classmethod
    def from_dict(cls, d: dict, base: Path | None = None) -> "PipelineManifest":
        known = {"scene", "out", "render", "optics", "sensor", "stages", "luminance",
                 "oversample", "auto_exposure"}
        extra = set(d) - known
        if extra:
            raise ManifestError(f"unknown manifest keys: {sorted(extra)}")
        if "scene" not in d:
            raise ManifestError("manifest needs a 'scene' path")
        base = base or Path(".")
        scene = Path(d["scene"])
        out = Path(d.get("out", "out"))
        return cls(
            scene=scene if scene.is_absolute() else base / scene,
            out=out if out.is_absolute() else base / out,
            render=RenderConfig.from_dict(d.get("render", {})),
            optics=OpticsConfig.from_dict(d.get("optics", {})),
            sensor=dict(d.get("sensor", {})),
            stages=tuple(d.get("stages", STAGES)),
            luminance=d.get("luminance"),
            oversample=int(d.get("oversample", 1)),
            auto_exposure=d.get("auto_exposure"),
        )


def load_manifest(path) -> PipelineManifest:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ManifestError(f"{path}: invalid JSON: {exc}") from None
    return PipelineManifest.from_dict(doc, base=path.parent)


def sensor_config_for(manifest: PipelineManifest, rows: int, cols: int) -> SensorConfig:
    d = dict(manifest.sensor)
    d.setdefault("rows", rows)
    d.setdefault("cols", cols)
    return SensorConfig.from_dict(d)


def _commit(tmp: Path, final: Path):
    os.replace(tmp, final)


def _partial(path: Path) -> Path:
    return path.with_name(path.name + ".partial")


def run_pipeline(manifest: PipelineManifest, threads: int | None = None, log=print) -> dict:
    """Execute the manifest's stages; returns the provenance record."""
    out = manifest.out
    out.mkdir(parents=True, exist_ok=True)
    paths = {s: out / ARTIFACTS[s] for s in STAGES}
    record = {
        "tool": "camsim",
        "version": camsim.__version__,
        "manifest": manifest.to_dict(),
        "config_sha256": {
            "render": _digest(manifest.render.to_dict()),
            "optics": _digest(manifest.optics.to_dict()),
            "sensor": _digest(manifest.sensor),
            "manifest": _digest(manifest.to_dict()),
        },
        "seeds": {"render": manifest.render.seed},
        "artifacts": {},
    }
    state = {}

    def stage_scene():
        scene = load_scene(manifest.scene)
        tmp = _partial(paths["scene"])
        save_scene(scene, tmp)
        _commit(tmp, paths["scene"])
        state["scene"] = scene

    def stage_render():
        cube = render(state["scene"], manifest.render, threads=threads)
        if manifest.luminance is not None:
            cube = scale_to_luminance(cube, manifest.luminance)
        tmp = _partial(paths["render"])
        write_cube(cube, tmp)
        _commit(tmp, paths["render"])
        state["radiance"] = cube

    def stage_optics():
        irr = radiance_to_irradiance(state["radiance"], manifest.optics)
        if manifest.oversample > 1:
            irr = integrate_pixels(irr, manifest.oversample)
        tmp = _partial(paths["optics"])
        write_cube(irr, tmp)
        _commit(tmp, paths["optics"])
        state["irradiance"] = irr

    def stage_sensor():
        irr = state["irradiance"]
        cfg = sensor_config_for(manifest, irr.height, irr.width)
        if cfg.grid != irr.grid:
            cfg = cfg.with_grid(irr.grid)
        if manifest.auto_exposure is not None:
            from camsim.experiments import exposure_for_fill
            cfg = replace(cfg, exposure_time_s=exposure_for_fill(irr, cfg, manifest.auto_exposure, 99.0))
        img = expose(irr, cfg, make_fixed_patterns(cfg))
        tmp = _partial(paths["sensor"])
        write_pgm(img, tmp)
        _commit(tmp, paths["sensor"])
        record["seeds"].update(pattern=cfg.pattern_seed, noise=cfg.noise_seed)
        record["sensor_exposure_s"] = cfg.exposure_time_s
        state["raw"] = img

    def stage_analysis():
        img = state["raw"] if "raw" in state else read_pgm(paths["sensor"])
        rgb = demosaic_bilinear(img)
        tmp = _partial(paths["analysis"])
        write_ppm16(rgb, tmp, img.max_dn)
        _commit(tmp, paths["analysis"])

    actions = {"scene": stage_scene, "render": stage_render, "optics": stage_optics,
               "sensor": stage_sensor, "analysis": stage_analysis}
    for name in manifest.stages:
        log(f"[{name}] -> {paths[name]}")
        try:
            actions[name]()
        except Exception as exc:
            raise StageError(name, exc) from exc
        record["artifacts"][ARTIFACTS[name]] = _file_digest(paths[name])

    prov = out / "provenance.json"
    tmp = _partial(prov)
    tmp.write_text(json.dumps(record, indent=2, sort_keys=True) + "\n")
    _commit(tmp, prov)
    return record


def resume_cube(path):
    """Read a previously written cube artifact."""
    return read_cube(path)


def load_raw_values(path) -> np.ndarray:
    return read_pgm(path).values.astype(np.float64)
