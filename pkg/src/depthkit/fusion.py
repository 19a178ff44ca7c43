"""Uncertainty-weighted volumetric merging of registered depth scans.

Each scan contributes a truncated signed distance per voxel: the difference
between the voxel's distance from the camera center and the distance of the
observed surface along the same line of sight (negative on the camera side).
Contributions are accumulated as a weighted sum; with weights 1/Z^4 the
accumulated zero crossing is the inverse-variance (maximum likelihood)
estimate of the surface under the quadratic depth-noise law. The merged
surface is extracted by marching cubes on the normalized field.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from scipy import ndimage
from skimage import measure

from .camera import CameraModel
from .image import DepthMap, Pose, backproject
from .mesh import TriangleMesh

TRUNCATION_VOXELS = 4.0  # default truncation band, in voxel widths


class WeightingMode(enum.Enum):
    """Per-observation weighting of TSDF contributions."""

    UNIFORM = "uniform"
    INVERSE_QUARTIC = "inverse_quartic"


@dataclass
class TsdfVolume:
    """Regular voxel grid accumulating weighted signed distances.

    origin is the world position of the center of voxel (0, 0, 0). F holds
    the weighted numerator and weight_sum the accumulated weights; the
    normalized field F/weight_sum is only formed at extraction time so that
    integration stays order-independent and incremental.
    """

    origin: np.ndarray
    voxel_size: float
    dims: tuple[int, int, int]
    f_min: float
    f_max: float
    F: np.ndarray
    weight_sum: np.ndarray

    @classmethod
    def create(
        cls,
        origin,
        voxel_size: float,
        dims,
        f_min: float | None = None,
        f_max: float | None = None,
    ) -> "TsdfVolume":
        if voxel_size <= 0:
            raise ValueError("voxel_size must be > 0")
        dims = tuple(int(d) for d in dims)
        if any(d < 1 for d in dims):
            raise ValueError("dims must be >= 1 in every direction")
        if f_max is None:
            f_max = TRUNCATION_VOXELS * voxel_size
        if f_min is None:
            f_min = -f_max
        if not (f_min < 0 < f_max):
            raise ValueError("need f_min < 0 < f_max")
        return cls(
            origin=np.asarray(origin, dtype=float).reshape(3),
            voxel_size=float(voxel_size),
            dims=dims,
            f_min=float(f_min),
            f_max=float(f_max),
            F=np.zeros(dims),
            weight_sum=np.zeros(dims),
        )

    def voxel_centers(self) -> np.ndarray:
        """(N, 3) world coordinates of all voxel centers, C-order."""
        nx, ny, nz = self.dims
        ix, iy, iz = np.meshgrid(
            np.arange(nx), np.arange(ny), np.arange(nz), indexing="ij"
        )
        idx = np.column_stack([ix.ravel(), iy.ravel(), iz.ravel()]).astype(float)
        return self.origin + idx * self.voxel_size

    @property
    def observed(self) -> np.ndarray:
        return self.weight_sum > 0

    def normalized(self) -> np.ndarray:
        """F / weight_sum where observed, 0 elsewhere."""
        out = np.zeros(self.dims)
        m = self.observed
        out[m] = self.F[m] / self.weight_sum[m]
        return out


def integrate_scan(
    vol: TsdfVolume,
    depth_map: DepthMap,
    pose: Pose,
    cam: CameraModel,
    mode: WeightingMode = WeightingMode.INVERSE_QUARTIC,
) -> TsdfVolume:
    """Accumulate one scan into the volume (mutates and returns vol).

    For each voxel center P: transform to the camera frame, project, look
    up the scan depth at the nearest pixel, and accumulate the truncated
    signed distance ||R P + t|| - ||P_surface|| with the mode's weight.
    Voxels behind the camera, outside the image, or hitting invalid pixels
    are untouched.
    """
    P = vol.voxel_centers()
    q = pose.transform(P)
    z_cam = q[:, 2]
    in_front = z_cam > 0

    x = np.full(len(q), -1.0)
    y = np.full(len(q), -1.0)
    x[in_front] = cam.f * q[in_front, 0] / z_cam[in_front] + cam.u
    y[in_front] = cam.f * q[in_front, 1] / z_cam[in_front] + cam.v
    xi = np.floor(x + 0.5).astype(np.int64)
    yi = np.floor(y + 0.5).astype(np.int64)
    inside = (
        in_front
        & (xi >= 0)
        & (xi < depth_map.width)
        & (yi >= 0)
        & (yi < depth_map.height)
    )
    sel = np.flatnonzero(inside)
    if sel.size == 0:
        return vol
    xi, yi = xi[sel], yi[sel]
    hit_valid = depth_map.valid[yi, xi]
    sel = sel[hit_valid]
    if sel.size == 0:
        return vol
    xi, yi = xi[hit_valid], yi[hit_valid]

    z_obs = depth_map.z[yi, xi]
    surf = np.column_stack(
        [
            (xi - cam.u) * z_obs / cam.f,
            (yi - cam.v) * z_obs / cam.f,
            z_obs,
        ]
    )
    sdf = np.linalg.norm(q[sel], axis=1) - np.linalg.norm(surf, axis=1)
    sdf = np.clip(sdf, vol.f_min, vol.f_max)

    if mode is WeightingMode.UNIFORM:
        w = np.ones_like(sdf)
    elif mode is WeightingMode.INVERSE_QUARTIC:
        w = 1.0 / z_obs ** 4
    else:
        raise ValueError(f"unknown weighting mode {mode!r}")

    flat_idx = np.unravel_index(sel, vol.dims)
    vol.F[flat_idx] += w * sdf
    vol.weight_sum[flat_idx] += w
    return vol


def extract_mesh(vol: TsdfVolume) -> TriangleMesh:
    """Marching cubes over the normalized field's zero crossing.

    Cubes touching any unobserved voxel are skipped. No crossing yields an
    empty mesh rather than an error.
    """
    observed = vol.observed
    if not observed.any() or min(vol.dims) < 2:
        return TriangleMesh()
    phi = vol.normalized()
    vals = phi[observed]
    if vals.min() > 0 or vals.max() < 0:
        return TriangleMesh()
    # skimage processes a cube when ANY of its corner voxels is mask-true,
    # so erode by the full 27-neighborhood: a voxel stays true only if all
    # its neighbors are observed, which guarantees every processed cube has
    # 8 observed corners (cubes touching unobserved voxels are skipped).
    mask = ndimage.minimum_filter(observed, size=3, mode="constant", cval=False)
    if not mask.any():
        return TriangleMesh()
    try:
        verts, faces, _, _ = measure.marching_cubes(
            phi,
            level=0.0,
            spacing=(vol.voxel_size,) * 3,
            mask=mask,
            allow_degenerate=False,
        )
    except (ValueError, RuntimeError):
        return TriangleMesh()
    return TriangleMesh(
        vertices=verts + vol.origin, triangles=faces
    ).without_degenerate_triangles()


def fit_volume(
    scans: list[tuple[DepthMap, Pose]],
    cam: CameraModel,
    voxel_size: float,
    f_max: float | None = None,
    pad_voxels: int = 2,
) -> TsdfVolume:
    """Create a volume whose grid covers every scan's points in the world
    frame, padded by the truncation band."""
    if not scans:
        raise ValueError("need at least one scan")
    if f_max is None:
        f_max = TRUNCATION_VOXELS * voxel_size
    mins = np.full(3, np.inf)
    maxs = np.full(3, -np.inf)
    for depth_map, pose in scans:
        pts = backproject(depth_map, cam).points
        if len(pts) == 0:
            continue
        world = pose.inverse().transform(pts)
        mins = np.minimum(mins, world.min(axis=0))
        maxs = np.maximum(maxs, world.max(axis=0))
    if not np.all(np.isfinite(mins)):
        raise ValueError("no valid pixels in any scan")
    pad = f_max + pad_voxels * voxel_size
    origin = mins - pad
    dims = np.ceil((maxs + pad - origin) / voxel_size).astype(int) + 1
    return TsdfVolume.create(origin, voxel_size, dims, f_min=-f_max, f_max=f_max)


def fuse(
    scans: list[tuple[DepthMap, Pose]],
    cam: CameraModel,
    voxel_size: float,
    mode: WeightingMode = WeightingMode.INVERSE_QUARTIC,
    volume: TsdfVolume | None = None,
) -> TriangleMesh:
    """Integrate all scans (poses are externally provided) and extract the
    merged surface. A pre-sized volume may be supplied; otherwise one is
    fitted to the scans."""
    if not scans:
        raise ValueError("need at least one scan")
    vol = volume if volume is not None else fit_volume(scans, cam, voxel_size)
    for depth_map, pose in scans:
        integrate_scan(vol, depth_map, pose, cam, mode)
    return extract_mesh(vol)
