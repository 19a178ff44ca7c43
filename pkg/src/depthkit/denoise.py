"""Depth-map smoothing: Gaussian, bilateral, and adaptive bilateral filters.

All three are normalized window averages over valid neighbors. The bilateral
range kernel uses a fixed sigma_d; the adaptive variant recomputes it per
center pixel as sigma_d(p) = k * Z(p)^2, matching the quadratic growth of
depth noise so that far surfaces are smoothed as aggressively (relative to
their noise) as near ones. Invalid pixels are never filled and never
contribute.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .camera import CameraModel
from .image import DepthMap


@dataclass(frozen=True)
class FilterConfig:
    """Filter parameters.

    sigma_s: spatial std in pixels (required).
    radius: kernel half-width in pixels; defaults to ceil(3 * sigma_s).
    sigma_d: fixed range std in mm (bilateral).
    k: adaptive range coefficient in 1/mm (adaptive bilateral).
    Exactly one of sigma_d / k may be set.
    """

    sigma_s: float
    radius: int | None = None
    sigma_d: float | None = None
    k: float | None = None

    def __post_init__(self):
        if not np.isfinite(self.sigma_s) or self.sigma_s <= 0:
            raise ValueError("sigma_s must be finite and > 0")
        if self.radius is None:
            object.__setattr__(self, "radius", math.ceil(3 * self.sigma_s))
        if self.radius < 1:
            raise ValueError("radius must be >= 1")
        if self.sigma_d is not None and self.k is not None:
            raise ValueError("set at most one of sigma_d / k")
        if self.sigma_d is not None and self.sigma_d <= 0:
            raise ValueError("sigma_d must be > 0")
        if self.k is not None and self.k <= 0:
            raise ValueError("k must be > 0 (k = 0 would be the identity filter)")

    @classmethod
    def demo_defaults(cls, cam: CameraModel) -> "FilterConfig":
        """CLI demo defaults: sigma_s = 3 px, k = three quantization steps
        propagated through the noise model."""
        return cls(sigma_s=3.0, k=3.0 * cam.disparity_step / cam.fb)


def _spatial_kernel(sigma_s: float, radius: int) -> np.ndarray:
    off = np.arange(-radius, radius + 1, dtype=float)
    dx, dy = np.meshgrid(off, off)
    return np.exp(-(dx * dx + dy * dy) / (2.0 * sigma_s * sigma_s))


def _window_filter(depth_map: DepthMap, cfg: FilterConfig, range_sigma) -> DepthMap:
    """Shared core: normalized window average with spatial weights and an
    optional per-center-pixel Gaussian range weight.

    range_sigma is None (spatial only) or an (H, W) array of per-center
    range stds taken from the input map.
    """
    r = cfg.radius
    h, w = depth_map.z.shape
    ws = _spatial_kernel(cfg.sigma_s, r)
    zp = np.zeros((h + 2 * r, w + 2 * r))
    vp = np.zeros((h + 2 * r, w + 2 * r), dtype=bool)
    zp[r : r + h, r : r + w] = depth_map.z
    vp[r : r + h, r : r + w] = depth_map.valid

    num = np.zeros((h, w))
    den = np.zeros((h, w))
    if range_sigma is not None:
        inv_two_sig2 = np.zeros((h, w))
        m = depth_map.valid
        inv_two_sig2[m] = 1.0 / (2.0 * range_sigma[m] ** 2)
    for dy in range(-r, r + 1):
        for dx in range(-r, r + 1):
            zq = zp[r + dy : r + dy + h, r + dx : r + dx + w]
            vq = vp[r + dy : r + dy + h, r + dx : r + dx + w]
            wgt = np.where(vq, ws[dy + r, dx + r], 0.0)
            if range_sigma is not None:
                diff = zq - depth_map.z
                wgt = wgt * np.exp(-(diff * diff) * inv_two_sig2)
            num += wgt * zq
            den += wgt
    out = np.zeros((h, w))
    m = depth_map.valid  # center weight is positive, so den > 0 on valid pixels
    out[m] = num[m] / den[m]
    return DepthMap(z=out, valid=m)


def gaussian_filter(depth_map: DepthMap, cfg: FilterConfig) -> DepthMap:
    """Spatial-only Gaussian smoothing over valid neighbors."""
    return _window_filter(depth_map, cfg, None)


def bilateral_filter(depth_map: DepthMap, cfg: FilterConfig) -> DepthMap:
    """Edge-preserving smoothing with a fixed range sigma_d."""
    if cfg.sigma_d is None:
        raise ValueError("bilateral_filter requires sigma_d")
    sig = np.full(depth_map.z.shape, float(cfg.sigma_d))
    return _window_filter(depth_map, cfg, sig)


def adaptive_bilateral_filter(depth_map: DepthMap, cfg: FilterConfig) -> DepthMap:
    """Bilateral smoothing with sigma_d(p) = k * Z(p)^2 from the input map."""
    if cfg.k is None:
        raise ValueError("adaptive_bilateral_filter requires k")
    sig = cfg.k * depth_map.z ** 2
    return _window_filter(depth_map, cfg, sig)


def adaptive_sigma(depth_map: DepthMap, k: float) -> np.ndarray:
    """Per-pixel range sigma k * Z^2 used by the adaptive filter (0 where
    invalid); exposed for inspection and tests."""
    sig = np.zeros_like(depth_map.z)
    m = depth_map.valid
    sig[m] = k * depth_map.z[m] ** 2
    return sig
