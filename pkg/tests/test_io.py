import numpy as np
import pytest

from depthkit import DepthMap, Pose, TriangleMesh, TsdfVolume
from depthkit import io


@pytest.fixture
def quantized_map():
    rng = np.random.default_rng(40)
    z = rng.integers(400, 4000, size=(24, 32)).astype(float)
    z[rng.random(size=z.shape) < 0.2] = 0.0
    return DepthMap.from_array(z)


class TestDepthRaster:
    def test_round_trip_exact(self, quantized_map, tmp_path):
        path = tmp_path / "depth.dkr"
        io.save_depth_raster(quantized_map, path, depth_step=1.0)
        back = io.load_depth_raster(path)
        np.testing.assert_array_equal(back.z, quantized_map.z)
        np.testing.assert_array_equal(back.valid, quantized_map.valid)

    def test_sub_mm_step_round_trip(self, tmp_path):
        z = np.array([[100.25, 0.0], [6553.5, 0.25]])
        m = DepthMap.from_array(z)
        path = tmp_path / "fine.dkr"
        io.save_depth_raster(m, path, depth_step=0.25)
        back = io.load_depth_raster(path)
        np.testing.assert_array_equal(back.z, m.z)
        np.testing.assert_array_equal(back.valid, m.valid)

    def test_header_readable(self, quantized_map, tmp_path):
        path = tmp_path / "depth.dkr"
        io.save_depth_raster(quantized_map, path, depth_step=0.5)
        hdr = io.read_raster_header(path)
        assert hdr.magic == io.DEPTH_MAGIC
        assert (hdr.width, hdr.height) == (32, 24)
        assert hdr.depth_step == 0.5

    def test_out_of_range_rejected(self, tmp_path):
        m = DepthMap.from_array(np.full((2, 2), 70000.0))
        with pytest.raises(ValueError):
            io.save_depth_raster(m, tmp_path / "big.dkr", depth_step=1.0)

    def test_depth_rounding_to_invalid_rejected(self, tmp_path):
        m = DepthMap.from_array(np.full((2, 2), 0.2))
        with pytest.raises(ValueError):
            io.save_depth_raster(m, tmp_path / "tiny.dkr", depth_step=1.0)

    def test_wrong_magic_rejected(self, tmp_path):
        path = tmp_path / "bad.dkr"
        path.write_bytes(b"NOPE" + bytes(20))
        with pytest.raises(ValueError):
            io.load_depth_raster(path)

    def test_truncated_payload_rejected(self, quantized_map, tmp_path):
        path = tmp_path / "cut.dkr"
        io.save_depth_raster(quantized_map, path)
        data = path.read_bytes()
        path.write_bytes(data[:-10])
        with pytest.raises(ValueError):
            io.load_depth_raster(path)


class TestLabelRaster:
    def test_round_trip_with_no_label_code(self, tmp_path):
        labels = np.array([[0, 1, 2], [-1, 3, -1]], dtype=np.int32)
        path = tmp_path / "labels.dkr"
        io.save_label_raster(labels, path)
        back = io.load_label_raster(path)
        np.testing.assert_array_equal(back, labels)

    def test_depth_raster_not_accepted(self, quantized_map, tmp_path):
        path = tmp_path / "depth.dkr"
        io.save_depth_raster(quantized_map, path)
        with pytest.raises(ValueError):
            io.load_label_raster(path)


class TestPoseSidecar:
    def test_round_trip(self, tmp_path):
        pose = Pose.from_axis_angle([0.1, 0.9, 0.2], 0.8, t=(10.0, -3.0, 250.0))
        path = tmp_path / "pose.txt"
        io.save_pose(pose, path)
        back = io.load_pose(path)
        np.testing.assert_allclose(back.R, pose.R, atol=1e-15)
        np.testing.assert_allclose(back.t, pose.t, atol=1e-15)

    def test_wrong_count_rejected(self, tmp_path):
        path = tmp_path / "pose.txt"
        path.write_text("1 0 0 0 1 0 0 0 1\n")
        with pytest.raises(ValueError):
            io.load_pose(path)


class TestPly:
    @pytest.fixture
    def mesh(self):
        verts = np.array(
            [[0.0, 0.0, 1000.0], [10.0, 0.0, 1000.5], [0.0, 10.0, 999.5], [10.0, 10.0, 1001.0]]
        )
        tris = np.array([[0, 1, 2], [1, 3, 2]])
        return TriangleMesh(vertices=verts, triangles=tris)

    @pytest.mark.parametrize("binary", [True, False])
    def test_round_trip(self, mesh, tmp_path, binary):
        path = tmp_path / "mesh.ply"
        io.save_ply(mesh, path, binary=binary)
        back = io.load_ply(path)
        np.testing.assert_allclose(back.vertices, mesh.vertices, atol=1e-4)
        np.testing.assert_array_equal(back.triangles, mesh.triangles)

    def test_header_format_lines(self, mesh, tmp_path):
        path = tmp_path / "mesh.ply"
        io.save_ply(mesh, path, binary=False)
        text = path.read_text()
        assert text.startswith("ply\nformat ascii 1.0\n")
        assert "element vertex 4" in text
        assert "element face 2" in text
        io.save_ply(mesh, path, binary=True)
        head = path.read_bytes()[:60]
        assert b"format binary_little_endian 1.0" in head

    def test_empty_mesh_round_trip(self, tmp_path):
        path = tmp_path / "empty.ply"
        io.save_ply(TriangleMesh(), path)
        back = io.load_ply(path)
        assert back.is_empty


class TestVolumeDump:
    def test_round_trip_exact(self, tmp_path):
        vol = TsdfVolume.create((1.0, -2.0, 950.0), 4.0, (5, 6, 7))
        rng = np.random.default_rng(41)
        vol.F[:] = rng.normal(size=vol.dims)
        vol.weight_sum[:] = rng.random(size=vol.dims)
        path = tmp_path / "vol.dkv"
        io.save_volume(vol, path)
        back = io.load_volume(path)
        np.testing.assert_array_equal(back.F, vol.F)
        np.testing.assert_array_equal(back.weight_sum, vol.weight_sum)
        np.testing.assert_array_equal(back.origin, vol.origin)
        assert back.dims == vol.dims
        assert back.voxel_size == vol.voxel_size
        assert (back.f_min, back.f_max) == (vol.f_min, vol.f_max)

    def test_wrong_magic(self, tmp_path):
        path = tmp_path / "bad.dkv"
        path.write_bytes(b"XXXX" + bytes(64))
        with pytest.raises(ValueError):
            io.load_volume(path)
