"""depthkit: quadratic noise model of structured-light stereo depth cameras
and the applications built on it — adaptive bilateral denoising, uncertainty-
weighted TSDF scan merging, and disparity-space plane extraction — plus a
synthetic sensor simulator that provides ground truth for all of them."""

from .camera import CameraModel
from .denoise import (
    FilterConfig,
    adaptive_bilateral_filter,
    adaptive_sigma,
    bilateral_filter,
    gaussian_filter,
)
from .errors import ConfigError, FitError, InsufficientDataError
from .fusion import (
    TsdfVolume,
    WeightingMode,
    extract_mesh,
    fit_volume,
    fuse,
    integrate_scan,
)
from .image import (
    DepthMap,
    DisparityMap,
    PointCloud,
    Pose,
    backproject,
    depth_map_to_disparity_map,
    disparity_map_to_depth_map,
    project,
)
from .mesh import TriangleMesh
from .noise import (
    NoiseParams,
    ResolutionAnalysis,
    analyze_depth_resolution,
    depth_sensitivity,
    depth_sigma,
    depth_to_disparity,
    disparity_level_counts,
    disparity_to_depth,
    estimate_subpixel_resolution,
    fusion_weight,
    quantize_depth,
    simulate_quantized_depths,
)
from .planes import (
    PlaneModel,
    PlaneSegmentation,
    disparity_plane_to_world,
    extract_planes,
    fit_plane_disparity,
    fixed_threshold_classification,
    log_response,
    refine_segmentation,
    rotation_from_matched_planes,
    segment_planar,
    world_to_disparity_plane,
)
from .synth import (
    ImplicitSurface,
    PlaneSurface,
    SyntheticScene,
    sinusoidal_relief,
    sphere,
    synth_scene,
)

__version__ = "0.1.0"

__all__ = [
    "CameraModel",
    "ConfigError",
    "DepthMap",
    "DisparityMap",
    "FilterConfig",
    "FitError",
    "ImplicitSurface",
    "InsufficientDataError",
    "NoiseParams",
    "PlaneModel",
    "PlaneSegmentation",
    "PlaneSurface",
    "PointCloud",
    "Pose",
    "ResolutionAnalysis",
    "SyntheticScene",
    "TriangleMesh",
    "TsdfVolume",
    "WeightingMode",
    "adaptive_bilateral_filter",
    "adaptive_sigma",
    "analyze_depth_resolution",
    "backproject",
    "bilateral_filter",
    "depth_map_to_disparity_map",
    "depth_sensitivity",
    "depth_sigma",
    "depth_to_disparity",
    "disparity_level_counts",
    "disparity_map_to_depth_map",
    "disparity_plane_to_world",
    "disparity_to_depth",
    "estimate_subpixel_resolution",
    "extract_mesh",
    "extract_planes",
    "fit_plane_disparity",
    "fit_volume",
    "fixed_threshold_classification",
    "fuse",
    "fusion_weight",
    "gaussian_filter",
    "integrate_scan",
    "log_response",
    "project",
    "quantize_depth",
    "refine_segmentation",
    "rotation_from_matched_planes",
    "segment_planar",
    "simulate_quantized_depths",
    "sinusoidal_relief",
    "sphere",
    "synth_scene",
    "world_to_disparity_plane",
]
