"""Pinhole camera model of a structured-light stereo depth sensor.

The projector/camera pair is treated as a rectified stereo rig: depth and
disparity are related by Z = fB/D. Quantization steps describe the finite
precision of the on-device disparity search and of the emitted depth values.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class CameraModel:
    """Intrinsics and stereo geometry of the depth sensor.

    f: focal length in pixels
    baseline: projector-to-camera baseline in mm
    u, v: principal point in pixels
    disparity_step: disparity quantization in pixels
    depth_step: output depth quantization in mm
    """

    f: float
    baseline: float
    u: float
    v: float
    disparity_step: float = 0.125
    depth_step: float = 1.0

    def __post_init__(self):
        for name in ("f", "baseline", "disparity_step", "depth_step"):
            val = getattr(self, name)
            if not np.isfinite(val) or val <= 0:
                raise ValueError(f"{name} must be finite and > 0, got {val}")
        if not np.isfinite(self.fb) or self.fb <= 0:
            raise ValueError("f * baseline must be finite and > 0")

    @property
    def fb(self) -> float:
        """Focal length times baseline (mm * pixels)."""
        return self.f * self.baseline

    @property
    def intrinsic_matrix(self) -> np.ndarray:
        """3x3 calibration matrix K."""
        return np.array(
            [[self.f, 0.0, self.u], [0.0, self.f, self.v], [0.0, 0.0, 1.0]]
        )

    @classmethod
    def kinect(cls, width: int = 640, height: int = 480) -> "CameraModel":
        """Kinect-like defaults: f=587 px, B=75 mm, 1/8 px disparity,
        1 mm depth. Principal point defaults to the image center."""
        return cls(
            f=587.0,
            baseline=75.0,
            u=(width - 1) / 2.0,
            v=(height - 1) / 2.0,
        )
