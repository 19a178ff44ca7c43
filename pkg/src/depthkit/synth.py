"""Synthetic depth-scene generator: the ground-truth oracle for every test.

Scenes are collections of surfaces in the world frame. Each pixel ray is
cast through the camera model; the nearest intersection with positive
camera-frame depth wins and its surface index becomes the pixel's label.
True depths can then be pushed through the sensor's quantization chain
(and optionally jittered in disparity) to imitate raw sensor output.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .camera import CameraModel
from .image import DepthMap, Pose, pixel_grid
from .noise import round_half_away

NO_LABEL = -1


class PlaneSurface:
    """World plane aX + bY + cZ + 1 = 0, optionally clipped to an
    axis-aligned (X, Y) rectangle. Closed-form ray intersection."""

    def __init__(self, coeffs, bounds=None):
        self.coeffs = np.asarray(coeffs, dtype=float).reshape(3)
        if not np.all(np.isfinite(self.coeffs)) or np.all(self.coeffs == 0):
            raise ValueError("plane coefficients must be finite and not all zero")
        self.bounds = None if bounds is None else tuple(float(b) for b in bounds)

    @classmethod
    def fronto_parallel(cls, z: float, bounds=None) -> "PlaneSurface":
        """Plane Z = z (in the world frame): coefficients (0, 0, -1/z)."""
        return cls((0.0, 0.0, -1.0 / z), bounds=bounds)

    @classmethod
    def from_point_normal(cls, point, normal, bounds=None) -> "PlaneSurface":
        """Plane through `point` with the given normal, scaled to the +1 form.

        Rejects planes through the world origin (offset would be 0)."""
        p = np.asarray(point, dtype=float)
        n = np.asarray(normal, dtype=float)
        off = -float(n @ p)
        if abs(off) < 1e-12:
            raise ValueError("plane passes through the world origin")
        return cls(n / off, bounds=bounds)

    def intersect(self, origin: np.ndarray, dirs: np.ndarray) -> np.ndarray:
        n = self.coeffs
        num = -(n @ origin + 1.0)
        if abs(num) < 1e-12:
            raise ValueError("degenerate scene: plane passes through the camera center")
        den = dirs @ n
        with np.errstate(divide="ignore", invalid="ignore"):
            t = np.where(np.abs(den) > 1e-15, num / den, np.inf)
        t = np.where(t > 0, t, np.inf)
        if self.bounds is not None:
            xmin, xmax, ymin, ymax = self.bounds
            hit = origin + t[:, None] * dirs
            inside = (
                (hit[:, 0] >= xmin)
                & (hit[:, 0] <= xmax)
                & (hit[:, 1] >= ymin)
                & (hit[:, 1] <= ymax)
            )
            t = np.where(inside, t, np.inf)
        return t


class ImplicitSurface:
    """Surface defined by the zero set of a signed function of (N, 3) points.

    Rays are marched over `z_range` to bracket the first sign change, then
    refined by bisection to ~1e-3 mm.
    """

    def __init__(self, fn, z_range=(50.0, 10000.0), n_samples=512, tol=1e-3):
        self.fn = fn
        self.z_range = (float(z_range[0]), float(z_range[1]))
        self.n_samples = int(n_samples)
        self.tol = float(tol)

    def intersect(self, origin: np.ndarray, dirs: np.ndarray) -> np.ndarray:
        n = dirs.shape[0]
        ts = np.linspace(self.z_range[0], self.z_range[1], self.n_samples)
        lo = np.zeros(n)
        hi = np.zeros(n)
        found = np.zeros(n, dtype=bool)
        prev_v = self.fn(origin + ts[0] * dirs)
        prev_t = ts[0]
        for t in ts[1:]:
            v = self.fn(origin + t * dirs)
            crossing = ~found & (np.sign(v) != np.sign(prev_v)) & (prev_v != 0)
            lo[crossing] = prev_t
            hi[crossing] = t
            found |= crossing
            prev_v, prev_t = v, t
        if not np.any(found):
            return np.full(n, np.inf)
        idx = np.flatnonzero(found)
        d_sub = dirs[idx]
        a, b = lo[idx], hi[idx]
        fa = self.fn(origin + a[:, None] * d_sub)
        steps = int(np.ceil(np.log2((self.z_range[1] - self.z_range[0]) / self.n_samples / self.tol))) + 2
        for _ in range(max(steps, 1)):
            mid = 0.5 * (a + b)
            fm = self.fn(origin + mid[:, None] * d_sub)
            left = np.sign(fa) != np.sign(fm)
            b = np.where(left, mid, b)
            a = np.where(left, a, mid)
            fa = np.where(left, fa, fm)
        t = np.full(n, np.inf)
        t[idx] = 0.5 * (a + b)
        return np.where(t > 0, t, np.inf)


def sphere(center, radius: float, **kwargs) -> ImplicitSurface:
    """Sphere as an implicit surface: ||P - center|| - radius."""
    c = np.asarray(center, dtype=float)
    r = float(radius)
    return ImplicitSurface(lambda p: np.linalg.norm(p - c, axis=-1) - r, **kwargs)


def sinusoidal_relief(
    depth: float, amplitude: float, wavelength: float, **kwargs
) -> ImplicitSurface:
    """Fronto-parallel plane at `depth` with a sinusoidal height field:
    Z(X, Y) = depth + amplitude * sin(2 pi X / wavelength) * sin(2 pi Y / wavelength).
    """
    z0, a, w = float(depth), float(amplitude), float(wavelength)

    def fn(p):
        return p[..., 2] - (
            z0
            + a * np.sin(2 * np.pi * p[..., 0] / w) * np.sin(2 * np.pi * p[..., 1] / w)
        )

    return ImplicitSurface(fn, **kwargs)


@dataclass(frozen=True)
class SyntheticScene:
    """Rendered scene: observed depth, per-pixel surface labels (NO_LABEL
    where no surface is hit), and the noise-free true depth."""

    depth: DepthMap
    labels: np.ndarray
    true_depth: DepthMap


def synth_scene(
    surfaces,
    cam: CameraModel,
    width: int,
    height: int,
    pose: Pose | None = None,
    quantize: bool = False,
    disparity_noise_px: float = 0.0,
    seed: int | None = None,
) -> SyntheticScene:
    """Ray-cast surfaces into a depth map with ground-truth labels.

    The observation chain per valid pixel: true depth -> disparity ->
    optional Gaussian disparity jitter -> optional snap to the disparity
    grid -> back to depth -> optional snap to the depth grid. Labels are
    computed from true geometry and are unaffected by the chain.
    """
    if not surfaces:
        raise ValueError("need at least one surface")
    pose = pose or Pose.identity()
    x, y = pixel_grid(height, width)
    dirs_cam = np.stack(
        [(x - cam.u) / cam.f, (y - cam.v) / cam.f, np.ones_like(x)], axis=-1
    ).reshape(-1, 3)
    dirs_world = dirs_cam @ pose.R  # R^T applied row-wise
    origin = pose.camera_center()

    t_best = np.full(dirs_world.shape[0], np.inf)
    labels = np.full(dirs_world.shape[0], NO_LABEL, dtype=np.int32)
    for i, surf in enumerate(surfaces):
        t = surf.intersect(origin, dirs_world)
        closer = t < t_best
        t_best = np.where(closer, t, t_best)
        labels[closer] = i

    hit = np.isfinite(t_best)
    true_z = np.where(hit, t_best, 0.0).reshape(height, width)
    labels = labels.reshape(height, width)
    true_map = DepthMap(z=true_z, valid=hit.reshape(height, width))

    z_obs = true_z.copy()
    valid = hit.reshape(height, width).copy()
    if disparity_noise_px > 0 or quantize:
        d = np.zeros_like(z_obs)
        d[valid] = cam.fb / z_obs[valid]
        if disparity_noise_px > 0:
            rng = np.random.default_rng(seed)
            d[valid] += rng.normal(0.0, disparity_noise_px, np.count_nonzero(valid))
        if quantize:
            d = round_half_away(d / cam.disparity_step) * cam.disparity_step
        valid &= d > 0
        z_obs = np.zeros_like(z_obs)
        z_obs[valid] = cam.fb / d[valid]
        if quantize:
            z_obs = round_half_away(z_obs / cam.depth_step) * cam.depth_step
            valid &= z_obs > 0
    observed = DepthMap(z=np.where(valid, z_obs, 0.0), valid=valid)
    return SyntheticScene(depth=observed, labels=labels, true_depth=true_map)
