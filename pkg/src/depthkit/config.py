"""Experiment configuration documents.

A config is a JSON object with a schema_version and optional sections:
camera, noise, filter, volume, planes, scene, plus a top-level seed.
Unknown keys are rejected everywhere; defaults are identical to the module
defaults. See README for the full schema.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .camera import CameraModel
from .denoise import FilterConfig
from .errors import ConfigError
from .image import Pose
from .noise import NoiseParams
from .planes import DEFAULT_MIN_AREA, DEFAULT_SIGMA, MERGE_ANGLE_DEG
from .synth import PlaneSurface, sinusoidal_relief, sphere

SCHEMA_VERSION = 1

_TOP_KEYS = {"schema_version", "seed", "camera", "noise", "filter", "volume", "planes", "scene"}
_CAMERA_KEYS = {"f", "baseline", "u", "v", "disparity_step", "depth_step"}
_NOISE_KEYS = {"k"}
_FILTER_KEYS = {"mode", "sigma_s", "radius", "sigma_d", "k"}
_VOLUME_KEYS = {"voxel_size", "f_min", "f_max"}
_PLANES_KEYS = {"sigma", "tau", "min_area", "residual_threshold", "merge_angle_deg"}
_SCENE_KEYS = {"width", "height", "pose", "surfaces", "disparity_noise_px"}
_SURFACE_KEYS = {
    "plane": {"type", "coeffs", "point", "normal", "bounds"},
    "sphere": {"type", "center", "radius"},
    "relief": {"type", "depth", "amplitude", "wavelength"},
}


@dataclass(frozen=True)
class PlaneExtractionParams:
    sigma: float = DEFAULT_SIGMA
    tau: float | None = None
    min_area: int = DEFAULT_MIN_AREA
    residual_threshold: float | None = None
    merge_angle_deg: float = MERGE_ANGLE_DEG


@dataclass(frozen=True)
class VolumeParams:
    voxel_size: float = 4.0
    f_min: float | None = None
    f_max: float | None = None


@dataclass(frozen=True)
class SceneConfig:
    surfaces: tuple
    width: int = 640
    height: int = 480
    pose: Pose = field(default_factory=Pose.identity)
    disparity_noise_px: float = 0.0


@dataclass(frozen=True)
class ExperimentConfig:
    camera: CameraModel
    noise: NoiseParams
    filter: FilterConfig | None = None
    volume: VolumeParams = VolumeParams()
    planes: PlaneExtractionParams = PlaneExtractionParams()
    scene: SceneConfig | None = None
    seed: int = 0


def _check_keys(section: dict, allowed: set, context: str) -> None:
    if not isinstance(section, dict):
        raise ConfigError(f"{context}: expected an object")
    unknown = set(section) - allowed
    if unknown:
        raise ConfigError(f"{context}: unknown keys {sorted(unknown)}")


def _parse_camera(doc: dict) -> CameraModel:
    _check_keys(doc, _CAMERA_KEYS, "camera")
    base = CameraModel.kinect()
    try:
        return CameraModel(
            f=float(doc.get("f", base.f)),
            baseline=float(doc.get("baseline", base.baseline)),
            u=float(doc.get("u", base.u)),
            v=float(doc.get("v", base.v)),
            disparity_step=float(doc.get("disparity_step", base.disparity_step)),
            depth_step=float(doc.get("depth_step", base.depth_step)),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"camera: {exc}") from exc


def _parse_surface(doc: dict, index: int):
    if not isinstance(doc, dict) or "type" not in doc:
        raise ConfigError(f"scene.surfaces[{index}]: missing type")
    kind = doc["type"]
    if kind not in _SURFACE_KEYS:
        raise ConfigError(f"scene.surfaces[{index}]: unknown type {kind!r}")
    _check_keys(doc, _SURFACE_KEYS[kind], f"scene.surfaces[{index}]")
    try:
        if kind == "plane":
            bounds = doc.get("bounds")
            if "coeffs" in doc:
                if "point" in doc or "normal" in doc:
                    raise ConfigError(
                        f"scene.surfaces[{index}]: give coeffs or point+normal, not both"
                    )
                return PlaneSurface(doc["coeffs"], bounds=bounds)
            return PlaneSurface.from_point_normal(
                doc["point"], doc["normal"], bounds=bounds
            )
        if kind == "sphere":
            return sphere(doc["center"], doc["radius"])
        return sinusoidal_relief(doc["depth"], doc["amplitude"], doc["wavelength"])
    except ConfigError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"scene.surfaces[{index}]: {exc}") from exc


def _parse_scene(doc: dict) -> SceneConfig:
    _check_keys(doc, _SCENE_KEYS, "scene")
    surfaces = doc.get("surfaces")
    if not surfaces:
        raise ConfigError("scene: needs a non-empty surfaces list")
    parsed = tuple(_parse_surface(s, i) for i, s in enumerate(surfaces))
    pose = Pose.identity()
    if "pose" in doc:
        try:
            pose = Pose.from_matrix(np.asarray(doc["pose"], dtype=float))
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"scene.pose: {exc}") from exc
    return SceneConfig(
        surfaces=parsed,
        width=int(doc.get("width", 640)),
        height=int(doc.get("height", 480)),
        pose=pose,
        disparity_noise_px=float(doc.get("disparity_noise_px", 0.0)),
    )


def parse_config(doc: dict) -> ExperimentConfig:
    """Validate and materialize a config document. Raises ConfigError."""
    _check_keys(doc, _TOP_KEYS, "config")
    version = doc.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise ConfigError(f"unsupported schema_version {version}")
    camera = _parse_camera(doc.get("camera", {}))

    noise_doc = doc.get("noise", {})
    _check_keys(noise_doc, _NOISE_KEYS, "noise")
    try:
        noise = (
            NoiseParams(k=float(noise_doc["k"]))
            if "k" in noise_doc
            else NoiseParams.from_camera(camera)
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"noise: {exc}") from exc

    filt = None
    if "filter" in doc:
        fdoc = doc["filter"]
        _check_keys(fdoc, _FILTER_KEYS, "filter")
        try:
            filt = FilterConfig(
                sigma_s=float(fdoc.get("sigma_s", 3.0)),
                radius=int(fdoc["radius"]) if "radius" in fdoc else None,
                sigma_d=float(fdoc["sigma_d"]) if "sigma_d" in fdoc else None,
                k=float(fdoc["k"]) if "k" in fdoc else None,
            )
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"filter: {exc}") from exc

    vdoc = doc.get("volume", {})
    _check_keys(vdoc, _VOLUME_KEYS, "volume")
    try:
        volume = VolumeParams(
            voxel_size=float(vdoc.get("voxel_size", 4.0)),
            f_min=float(vdoc["f_min"]) if "f_min" in vdoc else None,
            f_max=float(vdoc["f_max"]) if "f_max" in vdoc else None,
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"volume: {exc}") from exc

    pdoc = doc.get("planes", {})
    _check_keys(pdoc, _PLANES_KEYS, "planes")
    try:
        planes = PlaneExtractionParams(
            sigma=float(pdoc.get("sigma", DEFAULT_SIGMA)),
            tau=float(pdoc["tau"]) if "tau" in pdoc else None,
            min_area=int(pdoc.get("min_area", DEFAULT_MIN_AREA)),
            residual_threshold=(
                float(pdoc["residual_threshold"])
                if "residual_threshold" in pdoc
                else None
            ),
            merge_angle_deg=float(pdoc.get("merge_angle_deg", MERGE_ANGLE_DEG)),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"planes: {exc}") from exc

    scene = _parse_scene(doc["scene"]) if "scene" in doc else None

    seed = doc.get("seed", 0)
    if not isinstance(seed, int):
        raise ConfigError("seed must be an integer")
    return ExperimentConfig(
        camera=camera,
        noise=noise,
        filter=filt,
        volume=volume,
        planes=planes,
        scene=scene,
        seed=seed,
    )


def load_config(path) -> ExperimentConfig:
    """Load and validate a JSON config file."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: config root must be an object")
    return parse_config(doc)
