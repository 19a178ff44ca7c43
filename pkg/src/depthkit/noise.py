"""Closed-form noise model of structured-light stereo depth estimation.

Disparity is measured on a fixed subpixel grid, so its error has a constant
standard deviation. Converting disparity to depth amplifies that error by
dZ/dD = -Z^2/(fB): depth noise grows quadratically with depth. This module
provides the conversions, the sensitivity/sigma/weight formulas built on
them, and the resolution-analysis procedures that expose the quadratic law
in quantized depth data.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .camera import CameraModel
from .errors import InsufficientDataError

MIN_UNIQUE_DEPTHS = 3
MIN_UNIQUE_DISPARITIES = 10
_GAP_BIN = 1e-4  # px, bin width used when taking the modal disparity gap


@dataclass(frozen=True)
class NoiseParams:
    """Proportionality constant k of the depth-noise law sigma(Z) = k * Z^2.

    Units of k are 1/mm so that sigma comes out in mm.
    """

    k: float

    def __post_init__(self):
        if not np.isfinite(self.k) or self.k < 0:
            raise ValueError(f"k must be finite and >= 0, got {self.k}")

    @classmethod
    def from_camera(cls, cam: CameraModel) -> "NoiseParams":
        """k implied by one disparity quantization step: step/(fB)."""
        return cls(k=cam.disparity_step / cam.fb)


@dataclass(frozen=True)
class ResolutionAnalysis:
    """Unique-depth ladder of a quantized depth sample and its log-log fit.

    delta_z[k] = unique_depths[k+1] - unique_depths[k]; slope/intercept are
    the least-squares line through (log Z, log dZ) using natural logs and
    the left endpoint of each step as Z.
    """

    unique_depths: np.ndarray
    delta_z: np.ndarray
    slope: float
    intercept: float


def _require_positive(z, name: str = "z"):
    z = np.asarray(z, dtype=float)
    if z.size == 0 or not np.all(np.isfinite(z)) or np.any(z <= 0):
        raise ValueError(f"{name} must be finite and > 0")
    return z


def depth_to_disparity(z, cam: CameraModel):
    """Disparity D = fB/Z in pixels. Accepts scalars or arrays."""
    z = _require_positive(z)
    d = cam.fb / z
    return float(d) if d.ndim == 0 else d


def disparity_to_depth(d, cam: CameraModel):
    """Depth Z = fB/D in mm; exact inverse of depth_to_disparity."""
    d = _require_positive(d, "d")
    z = cam.fb / d
    return float(z) if z.ndim == 0 else z


def depth_sensitivity(z, cam: CameraModel):
    """dZ/dD = -Z^2/(fB): depth change per unit disparity error (mm/px)."""
    z = _require_positive(z)
    s = -(z * z) / cam.fb
    return float(s) if s.ndim == 0 else s


def depth_sigma(z, params: NoiseParams):
    """Depth noise standard deviation sigma(Z) = k * Z^2 in mm."""
    z = _require_positive(z)
    s = params.k * z * z
    return float(s) if s.ndim == 0 else s


def fusion_weight(z):
    """Inverse-variance fusion weight 1/Z^4 (mm^-4)."""
    z = _require_positive(z)
    w = 1.0 / (z ** 4)
    return float(w) if w.ndim == 0 else w


def round_half_away(x):
    """Round half away from zero (Matlab-style), elementwise."""
    x = np.asarray(x, dtype=float)
    return np.copysign(np.floor(np.abs(x) + 0.5), x)


def quantize_depth(z, cam: CameraModel):
    """Push true depths through the sensor's quantization chain.

    Depth -> disparity -> snap to the disparity grid -> back to depth ->
    snap to the depth grid. This is the forward model that produces the
    staircase structure of raw sensor output.
    """
    z = _require_positive(z)
    d = cam.fb / z
    dq = round_half_away(d / cam.disparity_step) * cam.disparity_step
    zq = cam.fb / dq
    zq = round_half_away(zq / cam.depth_step) * cam.depth_step
    return float(zq) if zq.ndim == 0 else zq


def _fit_resolution(unique_depths: np.ndarray) -> ResolutionAnalysis:
    delta_z = np.diff(unique_depths)
    keep = delta_z > 0  # guard against float-duplicate survivors
    logz = np.log(unique_depths[:-1][keep])
    logdz = np.log(delta_z[keep])
    if logz.size < 2:
        raise InsufficientDataError("not enough depth steps for a slope fit")
    slope, intercept = np.polyfit(logz, logdz, 1)
    return ResolutionAnalysis(
        unique_depths=unique_depths,
        delta_z=delta_z,
        slope=float(slope),
        intercept=float(intercept),
    )


def analyze_depth_resolution(depths) -> ResolutionAnalysis:
    """Extract the unique-depth ladder of a depth sample and fit its slope.

    Raises InsufficientDataError for fewer than 3 unique values.
    """
    depths = np.asarray(depths, dtype=float).ravel()
    depths = depths[np.isfinite(depths) & (depths > 0)]
    unique = np.unique(depths)
    if unique.size < MIN_UNIQUE_DEPTHS:
        raise InsufficientDataError(
            f"need >= {MIN_UNIQUE_DEPTHS} unique depths, got {unique.size}"
        )
    return _fit_resolution(unique)


def simulate_quantized_depths(
    z_min: float, z_max: float, cam: CameraModel
) -> ResolutionAnalysis:
    """Sweep every integer-mm depth in [z_min, z_max] through the quantizer
    and analyze the resulting unique-depth ladder."""
    if not (0 < z_min < z_max):
        raise ValueError("need 0 < z_min < z_max")
    z0 = np.arange(np.ceil(z_min), np.floor(z_max) + 1.0)
    if z0.size < MIN_UNIQUE_DEPTHS:
        raise InsufficientDataError("depth range too narrow to simulate")
    return analyze_depth_resolution(quantize_depth(z0, cam))


def estimate_subpixel_resolution(depth_map, cam: CameraModel) -> float:
    """Recover the disparity quantization step from a quantized depth map.

    Converts valid depths to disparities, deduplicates, and returns the
    modal gap between consecutive unique disparities (gaps binned to
    1e-4 px; the returned value is the mean of the gaps in the modal bin).
    """
    disparities = cam.fb / depth_map.valid_values()
    unique = np.unique(disparities)
    if unique.size < MIN_UNIQUE_DISPARITIES:
        raise InsufficientDataError(
            f"need >= {MIN_UNIQUE_DISPARITIES} unique disparities, got {unique.size}"
        )
    gaps = np.diff(unique)
    bins = np.round(gaps / _GAP_BIN).astype(np.int64)
    values, counts = np.unique(bins, return_counts=True)
    modal = values[np.argmax(counts)]
    return float(gaps[bins == modal].mean())


def disparity_level_counts(depth_map, cam: CameraModel) -> dict[int, int]:
    """Count unique disparity levels in each unit interval [n, n+1).

    On a map quantized at 1/k px this audit finds k levels per interval
    wherever the map densely covers the interval. Disparities are snapped
    to the 1e-4 px grid first so that float round-off near integer
    boundaries cannot move a level across an interval edge.
    """
    unique = np.unique(cam.fb / depth_map.valid_values())
    unique = np.unique(round_half_away(unique / _GAP_BIN) * _GAP_BIN)
    lo, hi = int(np.floor(unique.min())), int(np.ceil(unique.max()))
    counts = {}
    for n in range(lo, hi):
        counts[n] = int(np.count_nonzero((unique >= n) & (unique < n + 1)))
    return counts
