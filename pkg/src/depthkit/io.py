"""Binary and text file formats.

Depth raster (.dkr): little-endian header ``magic 4s | version u16 |
width u32 | height u32 | depth_step f64`` followed by width*height u16
depth samples in row-major order. Depths are stored as round(z/depth_step);
0 marks an invalid pixel. Magic is ``DKDR``.

Label raster (.dkr): same layout with magic ``DKLB`` and depth_step fixed
to 1; payload stores plane/surface indices, 65535 marks "no label".

Volume dump (.dkv): ``magic 'DKVL' | version u16 | origin 3*f64 |
voxel_size f64 | dims 3*u32 | f_min f64 | f_max f64`` followed by the F and
weight_sum arrays as little-endian f64 in C order. Debugging format; exact
round trip.

Pose sidecar: text file with 12 whitespace-separated numbers, the row-major
3x4 world-to-camera matrix [R|t].

Meshes are written as PLY, ascii or binary little-endian, positions in mm.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .fusion import TsdfVolume
from .image import DepthMap, Pose
from .mesh import TriangleMesh

DEPTH_MAGIC = b"DKDR"
LABEL_MAGIC = b"DKLB"
VOLUME_MAGIC = b"DKVL"
FORMAT_VERSION = 1
NO_LABEL_CODE = 0xFFFF

_RASTER_HEADER = struct.Struct("<4sHIId")


@dataclass(frozen=True)
class RasterHeader:
    magic: bytes
    version: int
    width: int
    height: int
    depth_step: float


def read_raster_header(path) -> RasterHeader:
    with open(path, "rb") as fh:
        header = fh.read(_RASTER_HEADER.size)
    if len(header) < _RASTER_HEADER.size:
        raise ValueError(f"{path}: truncated raster header")
    return RasterHeader(*_RASTER_HEADER.unpack(header))


def save_depth_raster(depth_map: DepthMap, path, depth_step: float = 1.0) -> None:
    """Write a depth map as a 16-bit raster; invalid pixels become 0.

    Raises ValueError when a depth does not fit the 16-bit grid (out of
    range, or a valid depth that would round to the invalid code 0).
    """
    if depth_step <= 0:
        raise ValueError("depth_step must be > 0")
    codes = np.zeros(depth_map.z.shape, dtype=np.uint16)
    m = depth_map.valid
    q = np.floor(depth_map.z[m] / depth_step + 0.5)
    if np.any(q < 1):
        raise ValueError("valid depth rounds to 0 at this depth_step")
    if np.any(q > 0xFFFE):
        raise ValueError("depth exceeds 16-bit range at this depth_step")
    codes[m] = q.astype(np.uint16)
    with open(path, "wb") as fh:
        fh.write(
            _RASTER_HEADER.pack(
                DEPTH_MAGIC, FORMAT_VERSION, depth_map.width, depth_map.height, depth_step
            )
        )
        fh.write(codes.astype("<u2").tobytes())


def load_depth_raster(path) -> DepthMap:
    with open(path, "rb") as fh:
        header = fh.read(_RASTER_HEADER.size)
        if len(header) < _RASTER_HEADER.size:
            raise ValueError(f"{path}: truncated raster header")
        magic, version, width, height, depth_step = _RASTER_HEADER.unpack(header)
        if magic != DEPTH_MAGIC:
            raise ValueError(f"{path}: not a depth raster (magic {magic!r})")
        if version != FORMAT_VERSION:
            raise ValueError(f"{path}: unsupported raster version {version}")
        payload = fh.read(2 * width * height)
    if len(payload) != 2 * width * height:
        raise ValueError(f"{path}: truncated raster payload")
    codes = np.frombuffer(payload, dtype="<u2").reshape(height, width)
    return DepthMap(z=codes.astype(float) * depth_step, valid=codes > 0)


def save_label_raster(labels: np.ndarray, path) -> None:
    """Write an integer label raster; negative labels become the no-label code."""
    labels = np.asarray(labels)
    if labels.ndim != 2:
        raise ValueError("labels must be a 2D array")
    if labels.max(initial=0) >= NO_LABEL_CODE:
        raise ValueError("label index exceeds 16-bit range")
    codes = np.where(labels < 0, NO_LABEL_CODE, labels).astype(np.uint16)
    h, w = labels.shape
    with open(path, "wb") as fh:
        fh.write(_RASTER_HEADER.pack(LABEL_MAGIC, FORMAT_VERSION, w, h, 1.0))
        fh.write(codes.astype("<u2").tobytes())


def load_label_raster(path) -> np.ndarray:
    """Read a label raster back as int32 with -1 where no label."""
    with open(path, "rb") as fh:
        header = fh.read(_RASTER_HEADER.size)
        if len(header) < _RASTER_HEADER.size:
            raise ValueError(f"{path}: truncated raster header")
        magic, version, width, height, _ = _RASTER_HEADER.unpack(header)
        if magic != LABEL_MAGIC:
            raise ValueError(f"{path}: not a label raster (magic {magic!r})")
        if version != FORMAT_VERSION:
            raise ValueError(f"{path}: unsupported raster version {version}")
        payload = fh.read(2 * width * height)
    if len(payload) != 2 * width * height:
        raise ValueError(f"{path}: truncated raster payload")
    codes = np.frombuffer(payload, dtype="<u2").reshape(height, width)
    out = codes.astype(np.int32)
    out[codes == NO_LABEL_CODE] = -1
    return out


def save_pose(pose: Pose, path) -> None:
    """Write the row-major 3x4 [R|t] matrix as text."""
    np.savetxt(path, pose.matrix(), fmt="%.17g")


def load_pose(path) -> Pose:
    values = np.loadtxt(path, dtype=float)
    if values.size != 12:
        raise ValueError(f"{path}: pose sidecar must hold 12 numbers (3x4 [R|t])")
    return Pose.from_matrix(values.reshape(3, 4))


def save_ply(mesh: TriangleMesh, path, binary: bool = True) -> None:
    """Write a mesh as PLY (binary little-endian by default, else ascii)."""
    n_v, n_f = len(mesh.vertices), len(mesh.triangles)
    fmt = "binary_little_endian" if binary else "ascii"
    header = (
        "ply\n"
        f"format {fmt} 1.0\n"
        f"element vertex {n_v}\n"
        "property float x\n"
        "property float y\n"
        "property float z\n"
        f"element face {n_f}\n"
        "property list uchar int vertex_indices\n"
        "end_header\n"
    )
    with open(path, "wb") as fh:
        fh.write(header.encode("ascii"))
        if binary:
            fh.write(mesh.vertices.astype("<f4").tobytes())
            if n_f:
                faces = np.empty(n_f, dtype=[("n", "u1"), ("idx", "<i4", (3,))])
                faces["n"] = 3
                faces["idx"] = mesh.triangles.astype("<i4")
                fh.write(faces.tobytes())
        else:
            lines = []
            for v in mesh.vertices:
                lines.append(f"{v[0]:.9g} {v[1]:.9g} {v[2]:.9g}\n")
            for t in mesh.triangles:
                lines.append(f"3 {t[0]} {t[1]} {t[2]}\n")
            fh.write("".join(lines).encode("ascii"))


def load_ply(path) -> TriangleMesh:
    """Read the PLY subset written by save_ply."""
    with open(path, "rb") as fh:
        data = fh.read()
    end = data.find(b"end_header\n")
    if not data.startswith(b"ply") or end < 0:
        raise ValueError(f"{path}: not a PLY file")
    header = data[:end].decode("ascii").splitlines()
    body = data[end + len(b"end_header\n") :]
    fmt = None
    n_v = n_f = 0
    for line in header:
        parts = line.split()
        if parts[:1] == ["format"]:
            fmt = parts[1]
        elif parts[:2] == ["element", "vertex"]:
            n_v = int(parts[2])
        elif parts[:2] == ["element", "face"]:
            n_f = int(parts[2])
    if fmt == "binary_little_endian":
        verts = np.frombuffer(body, dtype="<f4", count=3 * n_v).reshape(n_v, 3)
        faces_raw = np.frombuffer(
            body[12 * n_v :], dtype=[("n", "u1"), ("idx", "<i4", (3,))], count=n_f
        )
        faces = faces_raw["idx"].astype(np.int64).reshape(n_f, 3)
    elif fmt == "ascii":
        lines = body.decode("ascii").splitlines()
        verts = np.array(
            [[float(v) for v in ln.split()] for ln in lines[:n_v]], dtype=float
        ).reshape(n_v, 3)
        faces = np.array(
            [[int(v) for v in ln.split()[1:4]] for ln in lines[n_v : n_v + n_f]],
            dtype=np.int64,
        ).reshape(n_f, 3)
    else:
        raise ValueError(f"{path}: unsupported PLY format {fmt!r}")
    return TriangleMesh(vertices=verts.astype(float), triangles=faces)


def save_volume(vol: TsdfVolume, path) -> None:
    """Dump a TSDF volume (debugging format, exact round trip)."""
    with open(path, "wb") as fh:
        fh.write(VOLUME_MAGIC)
        fh.write(struct.pack("<H", FORMAT_VERSION))
        fh.write(struct.pack("<3d", *vol.origin))
        fh.write(struct.pack("<d", vol.voxel_size))
        fh.write(struct.pack("<3I", *vol.dims))
        fh.write(struct.pack("<2d", vol.f_min, vol.f_max))
        fh.write(vol.F.astype("<f8").tobytes())
        fh.write(vol.weight_sum.astype("<f8").tobytes())


def load_volume(path) -> TsdfVolume:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != VOLUME_MAGIC:
            raise ValueError(f"{path}: not a volume dump (magic {magic!r})")
        (version,) = struct.unpack("<H", fh.read(2))
        if version != FORMAT_VERSION:
            raise ValueError(f"{path}: unsupported volume version {version}")
        origin = np.array(struct.unpack("<3d", fh.read(24)))
        (voxel_size,) = struct.unpack("<d", fh.read(8))
        dims = struct.unpack("<3I", fh.read(12))
        f_min, f_max = struct.unpack("<2d", fh.read(16))
        count = dims[0] * dims[1] * dims[2]
        F = np.frombuffer(fh.read(8 * count), dtype="<f8").reshape(dims).copy()
        W = np.frombuffer(fh.read(8 * count), dtype="<f8").reshape(dims).copy()
    return TsdfVolume(
        origin=origin,
        voxel_size=voxel_size,
        dims=dims,
        f_min=f_min,
        f_max=f_max,
        F=F,
        weight_sum=W,
    )
