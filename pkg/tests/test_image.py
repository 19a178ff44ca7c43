import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from depthkit import (
    CameraModel,
    DepthMap,
    DisparityMap,
    PointCloud,
    Pose,
    backproject,
    depth_map_to_disparity_map,
    disparity_map_to_depth_map,
    project,
)

KINECT = CameraModel.kinect()


class TestRasterTypes:
    def test_depth_map_masks_sentinel(self):
        z = np.array([[1000.0, 0.0], [250.0, 0.0]])
        m = DepthMap.from_array(z)
        assert m.valid.tolist() == [[True, False], [True, False]]
        assert m.z[0, 1] == 0.0
        np.testing.assert_array_equal(m.valid_values(), [1000.0, 250.0])

    def test_negative_valid_depth_rejected(self):
        with pytest.raises(ValueError):
            DepthMap(z=np.array([[-5.0]]), valid=np.array([[True]]))

    def test_shape_mismatch_rejected(self):
        with pytest.raises(ValueError):
            DepthMap(z=np.zeros((2, 2)), valid=np.zeros((3, 2), dtype=bool))

    def test_maps_are_immutable(self):
        m = DepthMap.from_array(np.full((2, 2), 10.0))
        with pytest.raises(ValueError):
            m.z[0, 0] = 5.0

    def test_disparity_map_validation(self):
        with pytest.raises(ValueError):
            DisparityMap(d=np.array([[0.0]]), valid=np.array([[True]]))

    def test_point_cloud_pairs_pixels(self):
        with pytest.raises(ValueError):
            PointCloud(points=np.zeros((3, 3)), pixels=np.zeros((2, 2)))


class TestPose:
    def test_identity(self):
        p = Pose.identity()
        np.testing.assert_array_equal(p.R, np.eye(3))
        np.testing.assert_array_equal(p.t, np.zeros(3))

    def test_rejects_non_orthonormal(self):
        with pytest.raises(ValueError):
            Pose(R=np.eye(3) * 1.01, t=np.zeros(3))

    def test_rejects_reflection(self):
        with pytest.raises(ValueError):
            Pose(R=np.diag([1.0, 1.0, -1.0]), t=np.zeros(3))

    def test_axis_angle_properties(self):
        p = Pose.from_axis_angle([1.0, 2.0, 0.5], 0.7)
        np.testing.assert_allclose(p.R.T @ p.R, np.eye(3), atol=1e-12)
        assert np.linalg.det(p.R) == pytest.approx(1.0)

    def test_inverse_composes_to_identity(self):
        p = Pose.from_axis_angle([0.0, 1.0, 0.0], 0.4, t=(10.0, -5.0, 30.0))
        pts = np.random.default_rng(0).normal(size=(20, 3)) * 100
        back = p.inverse().transform(p.transform(pts))
        np.testing.assert_allclose(back, pts, atol=1e-9)

    def test_matrix_round_trip(self):
        p = Pose.from_axis_angle([0.3, 0.2, 1.0], 1.1, t=(1.0, 2.0, 3.0))
        q = Pose.from_matrix(p.matrix())
        np.testing.assert_allclose(q.R, p.R)
        np.testing.assert_allclose(q.t, p.t)


class TestBackprojectProject:
    def test_principal_point_ray(self):
        z = np.zeros((3, 3))
        z[1, 1] = 1000.0
        cam = CameraModel(f=587.0, baseline=75.0, u=1.0, v=1.0)
        cloud = backproject(DepthMap.from_array(z), cam)
        assert len(cloud) == 1
        np.testing.assert_allclose(cloud.points[0], [0.0, 0.0, 1000.0])

    def test_forty_five_degree_ray(self):
        # pixel (u + f, v) at depth 500 -> X = 500
        cam = CameraModel(f=10.0, baseline=75.0, u=2.0, v=3.0)
        z = np.zeros((8, 16))
        z[3, 12] = 500.0  # x - u = 10 = f
        cloud = backproject(DepthMap.from_array(z), cam)
        np.testing.assert_allclose(cloud.points[0], [500.0, 0.0, 500.0])

    def test_point_count_matches_valid(self):
        rng = np.random.default_rng(1)
        z = rng.uniform(500, 2000, size=(40, 50))
        z[rng.random(size=z.shape) < 0.3] = 0.0
        m = DepthMap.from_array(z)
        cloud = backproject(m, KINECT)
        assert len(cloud) == int(m.valid.sum())

    def test_project_optical_axis(self):
        x, y, z = project((0.0, 0.0, 1000.0), Pose.identity(), KINECT)
        assert (x, y) == (KINECT.u, KINECT.v)
        assert z == 1000.0

    def test_project_behind_camera(self):
        flipped = Pose.from_axis_angle([0.0, 1.0, 0.0], np.pi)
        with pytest.raises(ValueError):
            project((0.0, 0.0, 1000.0), flipped, KINECT)

    def test_identity_round_trip(self):
        rng = np.random.default_rng(2)
        z = rng.uniform(400, 3000, size=(30, 40))
        cloud = backproject(DepthMap.from_array(z), KINECT)
        x, y, zc = project(cloud.points, Pose.identity(), KINECT)
        np.testing.assert_allclose(x, cloud.pixels[:, 0], atol=1e-6)
        np.testing.assert_allclose(y, cloud.pixels[:, 1], atol=1e-6)
        np.testing.assert_allclose(zc, cloud.points[:, 2], atol=1e-6)

    @given(
        st.floats(min_value=-1.0, max_value=1.0),
        st.floats(min_value=-0.5, max_value=0.5),
        st.floats(min_value=-200.0, max_value=200.0),
    )
    @settings(max_examples=25, deadline=None)
    def test_rigid_pose_round_trip(self, ax, angle, tx):
        # camera-frame points lifted, moved to world by pose inverse, then
        # projected through the same pose land on the source pixels
        pose = Pose.from_axis_angle([ax, 1.0 - abs(ax), 0.2], angle, t=(tx, 5.0, -40.0))
        rng = np.random.default_rng(3)
        z = rng.uniform(800, 1500, size=(12, 16))
        cloud = backproject(DepthMap.from_array(z), KINECT)
        world = pose.inverse().transform(cloud.points)
        x, y, _ = project(world, pose, KINECT)
        np.testing.assert_allclose(x, cloud.pixels[:, 0], atol=1e-6)
        np.testing.assert_allclose(y, cloud.pixels[:, 1], atol=1e-6)


class TestMapConversions:
    def test_constant_depth_unit_disparity(self):
        m = DepthMap.from_array(np.full((4, 4), KINECT.fb))
        d = depth_map_to_disparity_map(m, KINECT)
        np.testing.assert_allclose(d.d, 1.0)

    def test_round_trip_preserves_depths_and_mask(self):
        rng = np.random.default_rng(4)
        z = rng.uniform(300, 4000, size=(25, 30))
        z[rng.random(size=z.shape) < 0.2] = 0.0
        m = DepthMap.from_array(z)
        back = disparity_map_to_depth_map(depth_map_to_disparity_map(m, KINECT), KINECT)
        np.testing.assert_array_equal(back.valid, m.valid)
        np.testing.assert_allclose(
            back.z[back.valid], m.z[m.valid], rtol=1e-9
        )

    def test_quantized_plane_disparity_stays_affine(self, span_plane, kinect):
        # disparity of a quantized plane map deviates from the exact affine
        # model by at most half a disparity step plus the depth-rounding
        # contribution at that pixel
        from depthkit import depth_sensitivity, synth_scene

        scene = synth_scene([span_plane], kinect, 160, 120, quantize=True)
        disp = depth_map_to_disparity_map(scene.depth, kinect)
        true_disp = depth_map_to_disparity_map(scene.true_depth, kinect)
        err = np.abs(disp.d - true_disp.d)[disp.valid]
        z = scene.depth.valid_values()
        rounding = 0.5 * kinect.depth_step / np.abs(depth_sensitivity(z, kinect))
        assert (err <= kinect.disparity_step / 2 + rounding + 1e-12).all()
