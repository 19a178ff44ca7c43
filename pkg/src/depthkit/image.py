"""Depth/disparity raster types and pinhole projection geometry.

Pixel convention: pixel (x, y) samples the ray through (x, y) exactly; x is
the column index and y the row index. Invalid pixels carry the sentinel
value 0 and are excluded from every statistic and conversion.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .camera import CameraModel

INVALID_DEPTH = 0.0


def _frozen_copy(a, dtype):
    out = np.array(a, dtype=dtype, copy=True)
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class DepthMap:
    """2D raster of depths in mm with a validity mask."""

    z: np.ndarray
    valid: np.ndarray

    def __post_init__(self):
        z = np.asarray(self.z, dtype=float)
        valid = np.asarray(self.valid, dtype=bool)
        if z.ndim != 2 or z.shape != valid.shape:
            raise ValueError("z and valid must be 2D arrays of the same shape")
        if not np.all(np.isfinite(z[valid])) or np.any(z[valid] <= 0):
            raise ValueError("valid depths must be finite and > 0")
        z = np.where(valid, z, INVALID_DEPTH)
        object.__setattr__(self, "z", _frozen_copy(z, float))
        object.__setattr__(self, "valid", _frozen_copy(valid, bool))

    @classmethod
    def from_array(cls, z) -> "DepthMap":
        """Build a map from a raw array; pixels <= 0 are invalid."""
        z = np.asarray(z, dtype=float)
        return cls(z=z, valid=np.isfinite(z) & (z > 0))

    @property
    def height(self) -> int:
        return self.z.shape[0]

    @property
    def width(self) -> int:
        return self.z.shape[1]

    def valid_values(self) -> np.ndarray:
        return self.z[self.valid]


@dataclass(frozen=True)
class DisparityMap:
    """2D raster of disparities in pixels with a validity mask."""

    d: np.ndarray
    valid: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.d, dtype=float)
        valid = np.asarray(self.valid, dtype=bool)
        if d.ndim != 2 or d.shape != valid.shape:
            raise ValueError("d and valid must be 2D arrays of the same shape")
        if not np.all(np.isfinite(d[valid])) or np.any(d[valid] <= 0):
            raise ValueError("valid disparities must be finite and > 0")
        d = np.where(valid, d, 0.0)
        object.__setattr__(self, "d", _frozen_copy(d, float))
        object.__setattr__(self, "valid", _frozen_copy(valid, bool))

    @property
    def height(self) -> int:
        return self.d.shape[0]

    @property
    def width(self) -> int:
        return self.d.shape[1]

    def valid_values(self) -> np.ndarray:
        return self.d[self.valid]


@dataclass(frozen=True)
class PointCloud:
    """3D points in mm, optionally tagged with their source pixel (x, y)."""

    points: np.ndarray
    pixels: np.ndarray | None = None

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float).reshape(-1, 3)
        if not np.all(np.isfinite(pts)):
            raise ValueError("points must be finite")
        object.__setattr__(self, "points", _frozen_copy(pts, float))
        if self.pixels is not None:
            px = np.asarray(self.pixels, dtype=float).reshape(-1, 2)
            if px.shape[0] != pts.shape[0]:
                raise ValueError("pixels must pair 1:1 with points")
            object.__setattr__(self, "pixels", _frozen_copy(px, float))

    def __len__(self) -> int:
        return self.points.shape[0]


@dataclass(frozen=True)
class Pose:
    """Rigid world-to-camera transform: x_cam = R @ x_world + t."""

    R: np.ndarray = field(default_factory=lambda: np.eye(3))
    t: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        R = np.asarray(self.R, dtype=float).reshape(3, 3)
        t = np.asarray(self.t, dtype=float).reshape(3)
        if not np.allclose(R.T @ R, np.eye(3), atol=1e-9):
            raise ValueError("R must be orthonormal")
        if abs(np.linalg.det(R) - 1.0) > 1e-9:
            raise ValueError("R must be a proper rotation (det = 1)")
        object.__setattr__(self, "R", _frozen_copy(R, float))
        object.__setattr__(self, "t", _frozen_copy(t, float))

    @classmethod
    def identity(cls) -> "Pose":
        return cls()

    @classmethod
    def from_axis_angle(cls, axis, angle_rad: float, t=(0.0, 0.0, 0.0)) -> "Pose":
        """Rodrigues rotation about a (not necessarily unit) axis."""
        a = np.asarray(axis, dtype=float)
        a = a / np.linalg.norm(a)
        K = np.array([[0, -a[2], a[1]], [a[2], 0, -a[0]], [-a[1], a[0], 0]])
        R = np.eye(3) + np.sin(angle_rad) * K + (1 - np.cos(angle_rad)) * (K @ K)
        return cls(R=R, t=np.asarray(t, dtype=float))

    @classmethod
    def from_matrix(cls, m) -> "Pose":
        """Build from a row-major 3x4 [R|t] matrix."""
        m = np.asarray(m, dtype=float).reshape(3, 4)
        return cls(R=m[:, :3], t=m[:, 3])

    def matrix(self) -> np.ndarray:
        """Row-major 3x4 [R|t]."""
        return np.hstack([self.R, self.t.reshape(3, 1)])

    def transform(self, points) -> np.ndarray:
        """Apply the transform to (3,) or (N, 3) points."""
        p = np.asarray(points, dtype=float)
        return p @ self.R.T + self.t

    def inverse(self) -> "Pose":
        return Pose(R=self.R.T, t=-self.R.T @ self.t)

    def camera_center(self) -> np.ndarray:
        """Camera center in world coordinates."""
        return -self.R.T @ self.t


def pixel_grid(height: int, width: int):
    """(x, y) coordinate rasters for a height x width image."""
    y, x = np.mgrid[0:height, 0:width]
    return x.astype(float), y.astype(float)


def backproject(depth_map: DepthMap, cam: CameraModel) -> PointCloud:
    """Lift every valid pixel to a camera-frame 3D point.

    Pixel (x, y) with depth Z maps to ((x-u)Z/f, (y-v)Z/f, Z).
    """
    x, y = pixel_grid(depth_map.height, depth_map.width)
    m = depth_map.valid
    z = depth_map.z[m]
    px, py = x[m], y[m]
    points = np.column_stack(
        [(px - cam.u) * z / cam.f, (py - cam.v) * z / cam.f, z]
    )
    return PointCloud(points=points, pixels=np.column_stack([px, py]))


def project(point, pose: Pose, cam: CameraModel):
    """Perspective-project world points through K[R|t].

    Returns (x, y, z_cam) where z_cam is the camera-frame depth. Raises
    ValueError if any point has camera-frame depth <= 0.
    """
    p = np.asarray(point, dtype=float)
    q = pose.transform(p)
    z = q[..., 2]
    if np.any(z <= 0):
        raise ValueError("point at or behind the camera plane")
    x = cam.f * q[..., 0] / z + cam.u
    y = cam.f * q[..., 1] / z + cam.v
    if p.ndim == 1:
        return float(x), float(y), float(z)
    return x, y, z


def depth_map_to_disparity_map(depth_map: DepthMap, cam: CameraModel) -> DisparityMap:
    """Per-pixel D = fB/Z; validity mask is preserved."""
    d = np.zeros_like(depth_map.z)
    m = depth_map.valid
    d[m] = cam.fb / depth_map.z[m]
    return DisparityMap(d=d, valid=m)


def disparity_map_to_depth_map(disp_map: DisparityMap, cam: CameraModel) -> DepthMap:
    """Per-pixel Z = fB/D; validity mask is preserved."""
    z = np.zeros_like(disp_map.d)
    m = disp_map.valid
    z[m] = cam.fb / disp_map.d[m]
    return DepthMap(z=z, valid=m)
