"""Desk-scale geometric pipeline for camera/LiDAR BEV perception.

The package provides exact, testable implementations of the geometry
and supervision math behind a distillation setup for bird's-eye-view
perception: LiDAR depth rendering and fusion with predicted depth, the
lift-splat view transform, temporal BEV warping, trajectory-anchored
feature distillation, Gaussian-weighted occupancy reconstruction, and a
synthetic-scene simulator whose sensors are analytically exact.
"""

__version__ = "0.1.0"

from .depth import (
    DepthBinSpec,
    DepthDistribution,
    DepthMap,
    DepthStrategy,
    depth_to_onehot,
    fuse_depth,
    render_lidar_depth,
)
from .errors import (
    BehindCamera,
    BevkitError,
    ChecksumMismatch,
    CorruptHeader,
    InvalidSpec,
    IoFailure,
    MissingObservation,
    MissingState,
    NonFiniteInput,
    NonPositiveDepth,
    OutOfRange,
    ShapeMismatch,
    SpecMismatch,
    UnknownTimestamp,
    UnsupportedVersion,
)
from .geometry import (
    CameraModel,
    RigidTransform,
    backproject,
    backproject_pixels,
    camera_extrinsic,
    camera_pose_in_ego,
    compose,
    invert,
    project,
    project_points,
    transform_point,
)
from .loss import LossReport, total_loss
from .objects import ObjectState
from .occupancy import (
    GaussianWeightGrid,
    OccupancyGrid,
    VoxelSpec,
    build_occupancy,
    default_sigma,
    gaussian_weights,
    occ_recon_loss,
    occupancy_sums,
)
from .pipeline import PipelineConfig, PipelineResult, run_pipeline
from .raycast import Box, cast_rays
from .scene_io import Manifest, load_grid, load_scene, save_grid, save_scene, scenes_equal
from .synth_scene import (
    Scene,
    SceneFrame,
    SceneSpec,
    build_rig,
    cast_lidar,
    degrade_depth,
    feature_code,
    generate_scene,
    render_true_depth,
    render_truth_features,
    scene_track,
)
from .temporal import (
    EgoTrack,
    MisalignmentReport,
    ego_motion,
    fuse_temporal,
    misalignment,
    warp_bev,
)
from .trajectory_distill import (
    Trajectory,
    build_trajectory,
    normalize_feature,
    sample_bev,
    traj_distill_loss,
)
from .view_transform import (
    BEVGrid,
    BEVSpec,
    FeatureMap,
    bilinear_sample,
    frustum_points,
    lift_splat,
    lift_splat_oracle,
    scatter_accumulate,
)

__all__ = [name for name in dir() if not name.startswith("_")]
