"""Command-line toolkit wiring the modules into reproducible experiments.

Subcommands: simulate, analyze-noise, denoise, fuse, planes. Exit codes:
0 success, 2 usage or config error, 3 insufficient data, 4 I/O failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import io
from .camera import CameraModel
from .config import load_config
from .denoise import (
    FilterConfig,
    adaptive_bilateral_filter,
    bilateral_filter,
    gaussian_filter,
)
from .errors import ConfigError, InsufficientDataError
from .fusion import WeightingMode, extract_mesh, fit_volume, integrate_scan
from .image import depth_map_to_disparity_map
from .noise import analyze_depth_resolution, estimate_subpixel_resolution
from .planes import extract_planes
from .synth import synth_scene


def _camera_from_flag(path: str | None) -> CameraModel:
    if path is None:
        return CameraModel.kinect()
    return load_config(path).camera


def cmd_simulate(args) -> int:
    cfg = load_config(args.scene)
    if cfg.scene is None:
        raise ConfigError(f"{args.scene}: scene section required for simulate")
    sc = cfg.scene
    scene = synth_scene(
        sc.surfaces,
        cfg.camera,
        sc.width,
        sc.height,
        pose=sc.pose,
        quantize=args.quantize,
        disparity_noise_px=sc.disparity_noise_px,
        seed=cfg.seed,
    )
    if args.quantize:
        step = cfg.camera.depth_step
    else:
        zmax = scene.depth.valid_values().max(initial=1.0)
        step = max(zmax / 65000.0, 1e-6)
    io.save_depth_raster(scene.depth, args.out, depth_step=step)
    labels_out = args.labels_out or str(Path(args.out).with_suffix(".labels.dkr"))
    io.save_label_raster(scene.labels, labels_out)
    n_valid = int(np.count_nonzero(scene.depth.valid))
    print(f"wrote {args.out} ({sc.width}x{sc.height}, {n_valid} valid, depth_step={step:g} mm)")
    print(f"wrote {labels_out}")
    return 0


def cmd_analyze_noise(args) -> int:
    depth_map = io.load_depth_raster(args.input)
    analysis = analyze_depth_resolution(depth_map.valid_values())
    if args.csv:
        with open(args.csv, "w", encoding="utf-8") as fh:
            fh.write("z_mm,delta_z_mm\n")
            for z, dz in zip(analysis.unique_depths[:-1], analysis.delta_z):
                fh.write(f"{z:.10g},{dz:.10g}\n")
        print(f"wrote {args.csv}")
    print(f"unique depths: {analysis.unique_depths.size}")
    print(f"slope: {analysis.slope:.6f}")
    print(f"intercept: {analysis.intercept:.6f}")
    if args.camera:
        cam = _camera_from_flag(args.camera)
        step = estimate_subpixel_resolution(depth_map, cam)
        print(f"estimated disparity step: {step:.6f} px")
    return 0


_FILTERS = {
    "gaussian": gaussian_filter,
    "bilateral": bilateral_filter,
    "adaptive": adaptive_bilateral_filter,
}


def cmd_denoise(args) -> int:
    if args.mode != "bilateral" and args.sigma_d is not None:
        raise ConfigError(f"--sigma-d conflicts with mode {args.mode}")
    if args.mode != "adaptive" and args.k is not None:
        raise ConfigError(f"--k conflicts with mode {args.mode}")
    if args.mode == "bilateral" and args.sigma_d is None:
        raise ConfigError("bilateral mode requires --sigma-d")
    if args.mode == "adaptive" and args.k is None:
        raise ConfigError("adaptive mode requires --k")
    try:
        cfg = FilterConfig(
            sigma_s=args.sigma_s, radius=args.radius, sigma_d=args.sigma_d, k=args.k
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    depth_map = io.load_depth_raster(args.input)
    step = io.read_raster_header(args.input).depth_step
    out = _FILTERS[args.mode](depth_map, cfg)
    io.save_depth_raster(out, args.out, depth_step=step)
    m = depth_map.valid
    rms = float(np.sqrt(np.mean((out.z[m] - depth_map.z[m]) ** 2))) if m.any() else 0.0
    print(f"wrote {args.out}")
    print(f"rms change: {rms:.6f} mm over {int(np.count_nonzero(m))} valid pixels")
    return 0


def _read_manifest(path):
    base = Path(path).parent
    entries = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 2:
                raise ConfigError(f"{path}: manifest lines must be '<raster> <pose>'")
            entries.append((base / parts[0], base / parts[1]))
    if not entries:
        raise ConfigError(f"{path}: manifest lists no scans")
    return entries


def cmd_fuse(args) -> int:
    cam = _camera_from_flag(args.camera)
    scans = []
    for raster_path, pose_path in _read_manifest(args.scans):
        try:
            depth_map = io.load_depth_raster(raster_path)
            pose = io.load_pose(pose_path)
        except (OSError, ValueError) as exc:
            raise OSError(f"cannot read scan {raster_path}: {exc}") from exc
        scans.append((depth_map, pose))
    mode = WeightingMode.UNIFORM if args.mode == "uniform" else WeightingMode.INVERSE_QUARTIC
    vol = fit_volume(scans, cam, args.voxel)
    for depth_map, pose in scans:
        integrate_scan(vol, depth_map, pose, cam, mode)
    mesh = extract_mesh(vol)
    io.save_ply(mesh, args.out, binary=not args.ascii)
    if args.volume_out:
        io.save_volume(vol, args.volume_out)
        print(f"wrote {args.volume_out}")
    observed = int(np.count_nonzero(vol.observed))
    total = int(np.prod(vol.dims))
    print(f"volume: dims {vol.dims[0]}x{vol.dims[1]}x{vol.dims[2]}, "
          f"{observed}/{total} voxels observed, voxel {vol.voxel_size:g} mm")
    print(f"mesh: {len(mesh.vertices)} vertices, {len(mesh.triangles)} triangles")
    print(f"wrote {args.out}")
    return 0


def cmd_planes(args) -> int:
    cam = _camera_from_flag(args.camera)
    depth_map = io.load_depth_raster(args.input)
    disp = depth_map_to_disparity_map(depth_map, cam)
    seg = extract_planes(
        disp,
        cam,
        sigma=args.sigma,
        tau=args.tau,
        min_area=args.min_area,
    )
    if args.labels_out:
        io.save_label_raster(seg.labels, args.labels_out)
        print(f"wrote {args.labels_out}")
    if args.json_out:
        doc = {
            "planes": [
                {
                    "affine": list(p.affine),
                    "world": list(p.world),
                    "support": p.support,
                }
                for p in seg.planes
            ]
        }
        with open(args.json_out, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=2)
            fh.write("\n")
        print(f"wrote {args.json_out}")
    print(f"planes found: {len(seg.planes)}")
    for i, p in enumerate(seg.planes):
        print(f"  plane {i}: support {p.support}, world ({p.world[0]:.6g}, "
              f"{p.world[1]:.6g}, {p.world[2]:.6g})")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="depthkit",
        description="Structured-light depth camera noise model toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="render a synthetic scene to a depth raster")
    p.add_argument("--scene", required=True, help="config file with a scene section")
    p.add_argument("--out", required=True, help="output depth raster")
    p.add_argument("--labels-out", help="output label raster (default: derived from --out)")
    p.add_argument("--quantize", action="store_true", help="apply the sensor quantization chain")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("analyze-noise", help="unique-depth resolution analysis")
    p.add_argument("--in", dest="input", required=True, help="input depth raster")
    p.add_argument("--camera", help="config file providing camera parameters")
    p.add_argument("--csv", help="write (z_mm, delta_z_mm) pairs to this CSV")
    p.set_defaults(func=cmd_analyze_noise)

    p = sub.add_parser("denoise", help="filter a depth raster")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--mode", required=True, choices=sorted(_FILTERS))
    p.add_argument("--sigma-s", type=float, default=3.0)
    p.add_argument("--radius", type=int, default=None)
    p.add_argument("--sigma-d", type=float, default=None)
    p.add_argument("--k", type=float, default=None)
    p.set_defaults(func=cmd_denoise)

    p = sub.add_parser("fuse", help="merge registered scans into a mesh")
    p.add_argument("--scans", required=True,
                   help="manifest: one '<raster> <pose>' pair per line")
    p.add_argument("--mode", choices=["uniform", "quartic"], default="quartic")
    p.add_argument("--voxel", type=float, default=4.0, help="voxel size in mm")
    p.add_argument("--out", required=True, help="output PLY mesh")
    p.add_argument("--ascii", action="store_true", help="write ascii PLY instead of binary")
    p.add_argument("--camera", help="config file providing camera parameters")
    p.add_argument("--volume-out", help="also dump the TSDF volume")
    p.set_defaults(func=cmd_fuse)

    p = sub.add_parser("planes", help="extract planes from a depth raster")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--camera", help="config file providing camera parameters")
    p.add_argument("--tau", type=float, default=None,
                   help="LoG response threshold in disparity px (default: one disparity step)")
    p.add_argument("--sigma", type=float, default=2.0, help="LoG scale in px")
    p.add_argument("--min-area", type=int, default=100)
    p.add_argument("--labels-out", help="output label raster")
    p.add_argument("--json-out", help="output JSON plane list")
    p.set_defaults(func=cmd_planes)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except InsufficientDataError as exc:
        print(f"error: insufficient data: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
