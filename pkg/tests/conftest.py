import numpy as np
import pytest

from depthkit import CameraModel, PlaneSurface, disparity_plane_to_world


@pytest.fixture
def kinect():
    return CameraModel.kinect()


def make_span_plane(cam, width, height, z_near, z_far):
    """World plane whose disparity is affine along the image diagonal,
    spanning exactly [z_near, z_far] over the raster."""
    d_near = cam.fb / z_near
    d_far = cam.fb / z_far
    g = (d_far - d_near) / ((width - 1) + (height - 1))
    affine = (g, g, d_near)
    return PlaneSurface(disparity_plane_to_world(affine, cam)), affine


@pytest.fixture
def span_plane(kinect):
    surface, _ = make_span_plane(kinect, 640, 480, 500.0, 3000.0)
    return surface


def rotation_angle_deg(Ra, Rb):
    cos = (np.trace(Ra @ Rb.T) - 1.0) / 2.0
    return np.rad2deg(np.arccos(np.clip(cos, -1.0, 1.0)))
