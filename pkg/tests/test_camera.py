import numpy as np
import pytest

from depthkit import CameraModel


def test_kinect_defaults():
    cam = CameraModel.kinect()
    assert cam.f == 587.0
    assert cam.baseline == 75.0
    assert cam.fb == 44025.0
    assert cam.disparity_step == 0.125
    assert cam.depth_step == 1.0
    assert (cam.u, cam.v) == (319.5, 239.5)


def test_intrinsic_matrix():
    cam = CameraModel(f=500.0, baseline=60.0, u=320.0, v=240.0)
    K = cam.intrinsic_matrix
    assert K[0, 0] == K[1, 1] == 500.0
    assert (K[0, 2], K[1, 2]) == (320.0, 240.0)
    assert K[2, 2] == 1.0


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(f=0.0, baseline=75.0, u=0, v=0),
        dict(f=-1.0, baseline=75.0, u=0, v=0),
        dict(f=587.0, baseline=0.0, u=0, v=0),
        dict(f=587.0, baseline=75.0, u=0, v=0, disparity_step=0.0),
        dict(f=587.0, baseline=75.0, u=0, v=0, depth_step=-1.0),
        dict(f=np.inf, baseline=75.0, u=0, v=0),
    ],
)
def test_invalid_parameters_rejected(kwargs):
    with pytest.raises(ValueError):
        CameraModel(**kwargs)
