"""End-to-end frame processing: depth, lift-splat, temporal fusion.

The expert and the apprentice run the same pipeline; they differ only
in where their depth distribution comes from.  The expert renders exact
LiDAR returns (current sweep plus the previous sweep carried forward by
ego motion) and fuses them with the predicted distribution; the
apprentice uses the degraded predicted distribution alone.  Per frame,
per-camera BEV grids are summed; past frames are warped into the
current ego frame and averaged.  Occupancy is built from the current
frame only.

Everything is deterministic: the predicted depth stream is seeded from
(scene seed, frame, camera), identically for both roles.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .depth import DepthBinSpec, DepthStrategy, fuse_depth, render_lidar_depth
from .geometry import RigidTransform
from .occupancy import OccupancyGrid, VoxelSpec, build_occupancy
from .synth_scene import (
    Scene,
    degrade_depth,
    render_true_depth,
    render_truth_features,
    scene_track,
)
from .rng import derive_seed
from .temporal import ego_motion, fuse_temporal, warp_bev
from .view_transform import BEVGrid, BEVSpec, lift_splat

ROLES = ("expert", "apprentice")


@dataclass(frozen=True)
class PipelineConfig:
    """What to run: role, depth handling, grid geometry, temporal window."""

    role: str = "expert"
    strategy: DepthStrategy = DepthStrategy.FUSION
    weighted_w: float = 0.5
    bins: DepthBinSpec = DepthBinSpec()
    bev: BEVSpec = BEVSpec(-8.0, 40.0, -24.0, 24.0, 96, 96)
    voxels: VoxelSpec = VoxelSpec(-8.0, 40.0, -24.0, 24.0, -0.5, 3.5, 96, 96, 8)
    channels: int = 8
    window: int | None = None

    def __post_init__(self) -> None:
        if self.role not in ROLES:
            raise ValueError(f"role must be one of {ROLES}, got {self.role!r}")
        if self.channels < 1:
            raise ValueError("channels must be positive")
        if self.window is not None and self.window < 1:
            raise ValueError("window must be positive when given")


@dataclass(frozen=True, eq=False)
class PipelineResult:
    """Temporally fused BEV features plus current-frame occupancy."""

    bev: BEVGrid
    occupancy: OccupancyGrid


def frame_depth_distribution(scene: Scene, cfg: PipelineConfig, frame: int, cam_index: int):
    """The depth distribution one role uses for one camera at one frame.

    The predicted distribution degrades the exact per-pixel depth with
    the scene's noise model; the expert overlays LiDAR according to the
    configured strategy.
    """
    spec = scene.spec
    cam = scene.rig[cam_index]
    predicted = degrade_depth(
        render_true_depth(scene, frame, cam_index),
        spec.depth_blur_bins,
        spec.depth_dropout,
        cfg.bins,
        seed=derive_seed(scene.seed, frame, cam_index),
    )
    if cfg.role == "apprentice":
        return predicted
    track = scene_track(scene)
    clouds = [(scene.frames[frame].lidar, RigidTransform.identity())]
    if frame > 0:
        motion = ego_motion(track, scene.frames[frame - 1].timestamp, scene.frames[frame].timestamp)
        clouds.append((scene.frames[frame - 1].lidar, motion))
    lidar_map = render_lidar_depth(cam, clouds)
    return fuse_depth(lidar_map, predicted, cfg.strategy, cfg.weighted_w, cfg.bins)


def frame_bev(scene: Scene, cfg: PipelineConfig, frame: int) -> BEVGrid:
    """Sum of per-camera lift-splat grids for one frame, in its own ego frame."""
    t = scene.frames[frame].timestamp
    accum = np.zeros((cfg.bev.nx, cfg.bev.ny, cfg.channels))
    for i in range(len(scene.rig)):
        feat = render_truth_features(scene, frame, i, cfg.channels)
        dist = frame_depth_distribution(scene, cfg, frame, i)
        grid = lift_splat(feat, dist, scene.rig[i], cfg.bev, cfg.bins, frame_timestamp=t)
        accum += grid.values.astype(np.float64)
    return BEVGrid(cfg.bev, accum.astype(np.float32), t)


def run_pipeline(scene: Scene, cfg: PipelineConfig) -> PipelineResult:
    """Process the trailing window of frames into fused BEV plus occupancy.

    ``cfg.window`` counts fused frames including the current one and
    defaults to the whole scene.  Past grids are built in their own ego
    frames, warped into the current frame by true ego motion, and
    averaged channel-wise.
    """
    n = scene.n_frames
    window = n if cfg.window is None else min(cfg.window, n)
    current = n - 1
    track = scene_track(scene)
    t_0 = scene.frames[current].timestamp

    grids = []
    for frame in range(current - window + 1, current + 1):
        grid = frame_bev(scene, cfg, frame)
        if frame != current:
            motion = ego_motion(track, scene.frames[frame].timestamp, t_0)
            grid = warp_bev(grid, motion, out_timestamp=t_0)
        grids.append(grid)
    fused = fuse_temporal(grids, mode="mean")

    occ = build_occupancy(
        [(frame_depth_distribution(scene, cfg, current, i), scene.rig[i])
         for i in range(len(scene.rig))],
        cfg.voxels,
        cfg.bins,
    )
    return PipelineResult(bev=fused, occupancy=occ)
