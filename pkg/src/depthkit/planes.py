"""Plane extraction in disparity space and plane-based rotation estimation.

A 3D plane aX + bY + cZ + 1 = 0 induces an affine disparity image
D(x, y) = alpha*x + beta*y + gamma, so planarity can be tested with a single
depth-independent threshold in disparity units: the noise floor of disparity
is constant while depth noise grows as Z^2. Candidate regions come from
thresholding a Laplacian-of-Gaussian response (zero on affine signals),
plane models are fitted robustly per region, and a k-means-style loop merges
near-identical planes and reassigns pixels until stable.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .camera import CameraModel
from .errors import FitError
from .image import DepthMap, DisparityMap, backproject, pixel_grid

NO_LABEL = -1
DEFAULT_SIGMA = 2.0
DEFAULT_MIN_AREA = 100
MERGE_ANGLE_DEG = 2.0
_FOUR_CONNECTED = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]])


@dataclass(frozen=True)
class PlaneModel:
    """A plane in both of its representations.

    affine: (alpha, beta, gamma) with D(x, y) = alpha*x + beta*y + gamma.
    world: (a, b, c) with aX + bY + cZ + 1 = 0.
    support: number of pixels the model was fitted from.
    """

    affine: tuple[float, float, float]
    world: tuple[float, float, float]
    support: int

    @classmethod
    def from_affine(cls, affine, cam: CameraModel, support: int = 0) -> "PlaneModel":
        return cls(
            affine=tuple(float(v) for v in affine),
            world=disparity_plane_to_world(affine, cam),
            support=int(support),
        )

    def normal(self) -> np.ndarray:
        """Unit normal of the world plane (orientation fixed by the +1 form)."""
        n = np.asarray(self.world, dtype=float)
        return n / np.linalg.norm(n)

    def disparity_at(self, x, y):
        a, b, g = self.affine
        return a * np.asarray(x, dtype=float) + b * np.asarray(y, dtype=float) + g

    def is_consistent(self, cam: CameraModel, rtol: float = 1e-9) -> bool:
        """Check that affine and world describe the same plane through the
        camera's geometry."""
        back = world_to_disparity_plane(self.world, cam)
        scale = max(np.abs(self.affine).max(), 1e-30)
        return bool(np.max(np.abs(np.subtract(self.affine, back))) <= rtol * scale)


@dataclass(frozen=True)
class PlaneSegmentation:
    """Per-pixel plane labels (NO_LABEL where unassigned) plus the models."""

    labels: np.ndarray
    planes: list[PlaneModel]


def disparity_plane_to_world(affine, cam: CameraModel) -> tuple[float, float, float]:
    """Invert the affine<->world coefficient correspondence.

    From aX+bY+cZ+1=0 and D = fB/Z one gets D(x,y) = -aB x - bB y
    - B(cf - au - bv); solving back: a = -alpha/B, b = -beta/B,
    c = (-gamma/B + a u + b v)/f.
    """
    alpha, beta, gamma = (float(v) for v in affine)
    a = -alpha / cam.baseline
    b = -beta / cam.baseline
    c = (-gamma / cam.baseline + a * cam.u + b * cam.v) / cam.f
    if not all(np.isfinite(v) for v in (a, b, c)):
        raise ValueError("affine coefficients do not describe a finite world plane")
    return (a, b, c)


def world_to_disparity_plane(world, cam: CameraModel) -> tuple[float, float, float]:
    """Affine disparity coefficients of the world plane aX + bY + cZ + 1 = 0."""
    a, b, c = (float(v) for v in world)
    alpha = -a * cam.baseline
    beta = -b * cam.baseline
    gamma = -cam.baseline * (c * cam.f - a * cam.u - b * cam.v)
    return (alpha, beta, gamma)


def log_kernel(sigma: float, radius: int | None = None) -> np.ndarray:
    """Discrete Laplacian-of-Gaussian kernel, corrected to exact zero sum and
    normalized so the positive and negative lobes each sum to ~1."""
    if sigma <= 0:
        raise ValueError("sigma must be > 0")
    if radius is None:
        radius = int(np.ceil(3 * sigma))
    off = np.arange(-radius, radius + 1, dtype=float)
    dx, dy = np.meshgrid(off, off)
    r2 = dx * dx + dy * dy
    k = (r2 - 2 * sigma ** 2) / sigma ** 4 * np.exp(-r2 / (2 * sigma ** 2))
    k -= k.mean()
    k /= np.abs(k).sum() / 2.0
    return k


def log_response(disp_map: DisparityMap, sigma: float) -> tuple[np.ndarray, np.ndarray]:
    """LoG response of the disparity raster and its validity mask.

    A response is valid only where the full kernel support lies inside the
    image and contains no invalid pixel.
    """
    kernel = log_kernel(sigma)
    resp = ndimage.convolve(disp_map.d, kernel, mode="constant", cval=0.0)
    valid = ndimage.binary_erosion(
        disp_map.valid, structure=np.ones(kernel.shape, dtype=bool), border_value=0
    )
    return resp, valid


def segment_planar(
    disp_map: DisparityMap,
    sigma: float,
    tau: float,
    min_area: int = DEFAULT_MIN_AREA,
) -> list[np.ndarray]:
    """Candidate planar regions: |LoG response| <= tau, 4-connected
    components, smallest components discarded. Returns boolean masks sorted
    by size, largest first."""
    if tau <= 0:
        raise ValueError("tau must be > 0")
    resp, rvalid = log_response(disp_map, sigma)
    planar = rvalid & (np.abs(resp) <= tau)
    labeled, n = ndimage.label(planar, structure=_FOUR_CONNECTED)
    regions = []
    for i in range(1, n + 1):
        mask = labeled == i
        if np.count_nonzero(mask) >= min_area:
            regions.append(mask)
    regions.sort(key=lambda m: -np.count_nonzero(m))
    return regions


def fit_plane_disparity(x, y, d, max_iter: int = 20, tol: float = 1e-9):
    """Robust affine regression of disparity on pixel position.

    Ordinary least squares followed by iteratively reweighted least squares
    with Huber weights (cutoff 1.345 * MAD of the residuals), iterated until
    the coefficients move by less than tol or max_iter is reached.
    """
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    d = np.asarray(d, dtype=float).ravel()
    if x.size < 3:
        raise FitError("need at least 3 pixels to fit a plane")
    A = np.column_stack([x, y, np.ones_like(x)])
    coef, _, rank, _ = np.linalg.lstsq(A, d, rcond=None)
    if rank < 3:
        raise FitError("degenerate support: pixels are collinear")
    for _ in range(max_iter):
        r = d - A @ coef
        mad = np.median(np.abs(r - np.median(r)))
        cutoff = 1.345 * mad
        if cutoff < 1e-12:
            break  # residuals already degenerate: plain LSQ is the answer
        absr = np.abs(r)
        w = np.where(absr <= cutoff, 1.0, cutoff / np.maximum(absr, 1e-300))
        sw = np.sqrt(w)
        new, _, rank, _ = np.linalg.lstsq(A * sw[:, None], d * sw, rcond=None)
        if rank < 3:
            raise FitError("degenerate support after reweighting")
        done = np.max(np.abs(new - coef)) < tol
        coef = new
        if done:
            break
    return (float(coef[0]), float(coef[1]), float(coef[2]))


def _fit_from_mask(disp_map, x, y, mask):
    return fit_plane_disparity(x[mask], y[mask], disp_map.d[mask])


def _merge_groups(models, members, thr, merge_angle_deg, x, y, disp_map):
    """Union-find pass merging planes with near-identical geometry."""
    k = len(models)
    parent = list(range(k))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    cos_limit = np.cos(np.deg2rad(merge_angle_deg))
    normals = [np.asarray(m, dtype=float) for m, _ in models]
    normals = [n / np.linalg.norm(n) for n in normals]
    for i in range(k):
        for j in range(i + 1, k):
            if normals[i] @ normals[j] < cos_limit:
                continue
            ok = True
            for a, b in ((i, j), (j, i)):
                ma = members[a]
                cx, cy = x[ma].mean(), y[ma].mean()
                cd = disp_map.d[ma].mean()
                alpha, beta, gamma = models[b][1]
                if abs(cd - (alpha * cx + beta * cy + gamma)) > thr:
                    ok = False
                    break
            if ok:
                parent[find(j)] = find(i)

    groups = {}
    for i in range(k):
        groups.setdefault(find(i), []).append(i)
    merged_members = []
    for root in sorted(groups, key=lambda r: min(groups[r])):
        m = np.zeros_like(members[0])
        for i in groups[root]:
            m |= members[i]
        merged_members.append(m)
    return merged_members, len(groups) < k


def refine_segmentation(
    disp_map: DisparityMap,
    initial_regions: list[np.ndarray],
    cam: CameraModel,
    residual_threshold: float | None = None,
    merge_angle_deg: float = MERGE_ANGLE_DEG,
    max_iter: int = 50,
) -> PlaneSegmentation:
    """K-means-style refinement of candidate planar regions.

    Per iteration: fit each plane from its pixels, merge planes whose
    parameters nearly coincide, then reassign every valid pixel to the plane
    with the smallest absolute disparity residual if that residual is within
    the fixed threshold (ties broken by the 8-neighborhood majority label,
    then by lowest plane index). The number of planes is whatever survives;
    it is never specified a priori.
    """
    if not initial_regions:
        raise ValueError("need at least one candidate region")
    thr = (
        residual_threshold
        if residual_threshold is not None
        else 3.0 * cam.disparity_step
    )
    x, y = pixel_grid(disp_map.height, disp_map.width)
    valid = disp_map.valid
    members = [np.asarray(m, dtype=bool) & valid for m in initial_regions]
    labels = np.full(disp_map.d.shape, NO_LABEL, dtype=np.int32)
    for i, m in enumerate(members):
        labels[m] = i

    for _ in range(max_iter):
        models = []
        kept_members = []
        for m in members:
            if np.count_nonzero(m) < 3:
                continue
            try:
                affine = _fit_from_mask(disp_map, x, y, m)
            except FitError:
                continue
            models.append((disparity_plane_to_world(affine, cam), affine))
            kept_members.append(m)
        if not models:
            return PlaneSegmentation(labels=np.full_like(labels, NO_LABEL), planes=[])

        merged_members, changed = _merge_groups(
            models, kept_members, thr, merge_angle_deg, x, y, disp_map
        )
        if changed:
            members = merged_members
            continue  # refit merged groups before reassigning

        residuals = np.stack(
            [np.abs(disp_map.d - (a * x + b * y + g)) for _, (a, b, g) in models]
        )
        rmin = residuals.min(axis=0)
        assign = residuals.argmin(axis=0).astype(np.int32)
        new_labels = np.where(valid & (rmin <= thr), assign, NO_LABEL).astype(np.int32)
        _break_ties(residuals, rmin, new_labels, labels)

        if np.array_equal(new_labels, labels) and len(models) == len(members):
            labels = new_labels
            break
        labels = new_labels
        members = [labels == i for i in range(len(models))]

    planes = []
    final_labels = np.full_like(labels, NO_LABEL)
    for i in range(int(labels.max()) + 1 if labels.max() >= 0 else 0):
        m = labels == i
        if np.count_nonzero(m) < 3:
            continue
        try:
            affine = _fit_from_mask(disp_map, x, y, m)
        except FitError:
            continue
        final_labels[m] = len(planes)
        planes.append(PlaneModel.from_affine(affine, cam, support=np.count_nonzero(m)))
    return PlaneSegmentation(labels=final_labels, planes=planes)


def _break_ties(residuals, rmin, new_labels, prev_labels):
    """Resolve pixels where several planes achieve the minimum residual:
    majority label of the 8-neighborhood (previous assignment) among the
    tied planes, falling back to the lowest plane index (argmin default)."""
    if residuals.shape[0] < 2:
        return
    tied_count = (residuals == rmin).sum(axis=0)
    ties = (new_labels != NO_LABEL) & (tied_count > 1)
    if not ties.any():
        return
    h, w = rmin.shape
    for py, px in zip(*np.nonzero(ties)):
        candidates = np.flatnonzero(residuals[:, py, px] == rmin[py, px])
        counts = {int(c): 0 for c in candidates}
        for ny in range(max(0, py - 1), min(h, py + 2)):
            for nx in range(max(0, px - 1), min(w, px + 2)):
                lab = int(prev_labels[ny, nx])
                if (ny != py or nx != px) and lab in counts:
                    counts[lab] += 1
        best = max(counts.items(), key=lambda kv: (kv[1], -kv[0]))[0]
        new_labels[py, px] = best


def extract_planes(
    disp_map: DisparityMap,
    cam: CameraModel,
    sigma: float = DEFAULT_SIGMA,
    tau: float | None = None,
    min_area: int = DEFAULT_MIN_AREA,
    residual_threshold: float | None = None,
) -> PlaneSegmentation:
    """Full pipeline: LoG segmentation then refinement. tau defaults to one
    disparity quantization step; the residual threshold to three."""
    if tau is None:
        tau = cam.disparity_step
    regions = segment_planar(disp_map, sigma, tau, min_area)
    if not regions:
        return PlaneSegmentation(
            labels=np.full(disp_map.d.shape, NO_LABEL, dtype=np.int32), planes=[]
        )
    return refine_segmentation(
        disp_map, regions, cam, residual_threshold=residual_threshold
    )


def rotation_from_matched_planes(pairs) -> np.ndarray:
    """Best rotation aligning matched plane normals across two frames.

    Solves the orthogonal Procrustes problem on the unit normals via SVD of
    their correlation matrix, det-corrected to a proper rotation. Matching
    is external input. Raises ValueError with fewer than 2 pairs or when all
    normals on either side are parallel.
    """
    if len(pairs) < 2:
        raise ValueError("need at least 2 matched plane pairs")
    n1 = []
    n2 = []
    for a, b in pairs:
        va = np.asarray(getattr(a, "world", a), dtype=float).reshape(3)
        vb = np.asarray(getattr(b, "world", b), dtype=float).reshape(3)
        n1.append(va / np.linalg.norm(va))
        n2.append(vb / np.linalg.norm(vb))
    n1 = np.asarray(n1)
    n2 = np.asarray(n2)
    for side in (n1, n2):
        sv = np.linalg.svd(side, compute_uv=False)
        if sv[1] < 1e-9 * sv[0]:
            raise ValueError("underdetermined: plane normals are parallel")
    corr = n1.T @ n2  # maximizes tr(R @ corr) over rotations R
    U, _, Vt = np.linalg.svd(corr)
    V = Vt.T
    R = V @ np.diag([1.0, 1.0, np.linalg.det(V @ U.T)]) @ U.T
    return R


def plane_point_distances(world, points) -> np.ndarray:
    """Perpendicular 3D distance of points to the plane aX + bY + cZ + 1 = 0."""
    n = np.asarray(world, dtype=float).reshape(3)
    pts = np.asarray(points, dtype=float).reshape(-1, 3)
    return np.abs(pts @ n + 1.0) / np.linalg.norm(n)


def fixed_threshold_classification(
    depth_map: DepthMap, cam: CameraModel, world_planes, threshold_mm: float
) -> np.ndarray:
    """Baseline point-to-plane membership test with a fixed metric threshold.

    Returns a (K, H, W) boolean stack: pixel passes plane k's test when its
    back-projected 3D point lies within threshold_mm of that plane. This is
    the depth-space test that cannot serve all depths at once: a single
    threshold either rejects far-plane points (too strict for their noise)
    or conflates nearby parallel planes (too loose for near ones).
    """
    cloud = backproject(depth_map, cam)
    px = cloud.pixels.astype(int)
    out = np.zeros((len(world_planes),) + depth_map.z.shape, dtype=bool)
    for k, world in enumerate(world_planes):
        passes = plane_point_distances(world, cloud.points) <= threshold_mm
        out[k][px[:, 1], px[:, 0]] = passes
    return out
