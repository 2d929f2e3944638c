"""Synthetic scenes: boxes on a ground plane, a moving ego, exact sensors.

A scene is a short clip of frames at a fixed time step.  Objects are
yaw-oriented boxes resting on the global z = 0 plane, each moving with
a constant global velocity; the ego drives a straight line or an arc of
constant yaw rate.  Sensors are exact: LiDAR rays and per-pixel camera
rays intersect the analytic geometry with no discretization error, so
closed-form expectations hold to float precision.

All randomness flows through :class:`bevkit.rng.SplitMix64` streams
derived from the scene seed, and every float is computed the same way
on every run: the same (spec, seed) pair regenerates a scene bit for
bit.

Frame data is stored in each frame's own ego coordinates; global-frame
quantities (object velocity, box yaw) are marked as such.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .depth import DepthBinSpec, DepthDistribution, DepthMap, bin_index
from .errors import InvalidSpec, NonFiniteInput
from .geometry import CameraModel, RigidTransform, camera_pose_in_ego
from .objects import ObjectState
from .raycast import Box, cast_rays
from .rng import SplitMix64, derive_seed
from .temporal import EgoTrack
from .view_transform import FeatureMap

# Stream labels for derive_seed, so independent draws never collide.
_STREAM_OBJECTS = 1
_STREAM_FEATURES = 2
_STREAM_DEPTH = 3
_STREAM_LIDAR_NOISE = 4


@dataclass(frozen=True)
class SceneSpec:
    """Everything that parameterizes scene generation.

    Distances in meters, angles in radians, speeds in m/s.  The camera
    rig mounts one pinhole camera per entry of ``cam_yaws`` at height
    ``cam_height`` over the ego origin; LiDAR rays fan out from height
    ``lidar_height`` over an azimuth/elevation grid.  ``depth_blur_bins``
    and ``depth_dropout`` describe how degraded the predicted depth is.
    """

    n_frames: int = 8
    frame_dt: float = 0.5
    n_objects: int = 3
    object_speed_range: tuple[float, float] = (0.5, 4.0)
    object_velocities: tuple[tuple[float, float, float], ...] | None = None
    ego_speed: float = 2.0
    ego_yaw_rate: float = 0.0
    spawn_x: tuple[float, float] = (8.0, 28.0)
    spawn_y: tuple[float, float] = (-10.0, 10.0)
    size_ranges: tuple[tuple[float, float], ...] = ((3.5, 5.0), (1.7, 2.2), (1.4, 2.0))
    lidar_azimuth_steps: int = 240
    lidar_elevation_steps: int = 12
    lidar_elevation_range: tuple[float, float] = (-0.42, 0.04)
    lidar_height: float = 1.8
    max_range: float = 120.0
    cam_yaws: tuple[float, ...] = (-0.4, 0.4)
    cam_height: float = 1.6
    image_width: int = 96
    image_height: int = 64
    focal: float = 60.0
    depth_blur_bins: int = 2
    depth_dropout: float = 0.05

    def __post_init__(self) -> None:
        # Range checks below use one-sided comparisons that nan slips
        # through, so finiteness is gated first.
        numeric = {
            "frame_dt": (self.frame_dt,),
            "object_speed_range": self.object_speed_range,
            "ego_speed": (self.ego_speed,),
            "ego_yaw_rate": (self.ego_yaw_rate,),
            "spawn_x": self.spawn_x,
            "spawn_y": self.spawn_y,
            "size_ranges": tuple(v for pair in self.size_ranges for v in pair),
            "lidar_elevation_range": self.lidar_elevation_range,
            "lidar_height": (self.lidar_height,),
            "max_range": (self.max_range,),
            "cam_yaws": self.cam_yaws,
            "cam_height": (self.cam_height,),
            "focal": (self.focal,),
            "depth_dropout": (self.depth_dropout,),
        }
        if self.object_velocities is not None:
            numeric["object_velocities"] = tuple(
                v for vel in self.object_velocities for v in vel
            )
        for name, values in numeric.items():
            if not all(math.isfinite(v) for v in values):
                raise NonFiniteInput(f"{name} must be finite, got {getattr(self, name)}")
        counts = {
            "n_frames": self.n_frames,
            "n_objects": self.n_objects,
            "lidar_azimuth_steps": self.lidar_azimuth_steps,
            "lidar_elevation_steps": self.lidar_elevation_steps,
            "image_width": self.image_width,
            "image_height": self.image_height,
            "cameras": len(self.cam_yaws),
        }
        for name, value in counts.items():
            if value < 1:
                raise InvalidSpec(f"{name} must be at least 1, got {value}")
        if self.frame_dt <= 0.0:
            raise InvalidSpec(f"frame_dt must be positive, got {self.frame_dt}")
        lo, hi = self.object_speed_range
        if not (0.0 <= lo <= hi):
            raise InvalidSpec(f"bad speed range {self.object_speed_range}")
        if self.object_velocities is not None and len(self.object_velocities) != self.n_objects:
            raise InvalidSpec("object_velocities must list one velocity per object")
        if len(self.size_ranges) != 3 or any(not (0.0 < a <= b) for a, b in self.size_ranges):
            raise InvalidSpec(f"bad size ranges {self.size_ranges}")
        if not (0.0 <= self.depth_dropout <= 1.0):
            raise InvalidSpec(f"dropout must lie in [0, 1], got {self.depth_dropout}")
        if self.depth_blur_bins < 0:
            raise InvalidSpec(f"blur width must be non-negative, got {self.depth_blur_bins}")
        if self.focal <= 0.0 or self.max_range <= 0.0:
            raise InvalidSpec("focal length and max range must be positive")
        if self.lidar_height <= 0.0 or self.cam_height <= 0.0:
            raise InvalidSpec("sensors must be mounted above the ground plane")


@dataclass(frozen=True, eq=False)
class SceneFrame:
    """One time step: ego pose, object states (ego frame), LiDAR points."""

    timestamp: float
    ego_pose: RigidTransform
    objects: tuple[ObjectState, ...]
    lidar: np.ndarray

    def __post_init__(self) -> None:
        pts = np.asarray(self.lidar, dtype=np.float32).reshape(-1, 3)
        pts.setflags(write=False)
        object.__setattr__(self, "lidar", pts)
        object.__setattr__(self, "objects", tuple(self.objects))


@dataclass(frozen=True, eq=False)
class Scene:
    """A generated clip: frames, the camera rig, and its provenance."""

    frames: tuple[SceneFrame, ...]
    rig: tuple[CameraModel, ...]
    seed: int
    spec: SceneSpec | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "frames", tuple(self.frames))
        object.__setattr__(self, "rig", tuple(self.rig))
        ts = [f.timestamp for f in self.frames]
        if any(b <= a for a, b in zip(ts, ts[1:])):
            raise ValueError("frame timestamps must be strictly increasing")

    @property
    def n_frames(self) -> int:
        return len(self.frames)


def build_rig(spec: SceneSpec) -> tuple[CameraModel, ...]:
    """One camera per configured yaw, mounted above the ego origin."""
    cx = (spec.image_width - 1) / 2.0
    cy = (spec.image_height - 1) / 2.0
    rig = []
    for yaw in spec.cam_yaws:
        pose = camera_pose_in_ego((0.0, 0.0, spec.cam_height), yaw)
        rig.append(
            CameraModel(
                fx=spec.focal,
                fy=spec.focal,
                cx=cx,
                cy=cy,
                width=spec.image_width,
                height=spec.image_height,
                extrinsic=pose.invert(),
            )
        )
    return tuple(rig)


def ego_pose_at(spec: SceneSpec, t: float) -> RigidTransform:
    """Global-from-ego pose at time t along the configured path."""
    v, w = spec.ego_speed, spec.ego_yaw_rate
    if w == 0.0:
        return RigidTransform.translate(v * t, 0.0, 0.0)
    # Constant-rate arc starting at the origin heading along +x.
    r = v / w
    x = r * math.sin(w * t)
    y = r * (1.0 - math.cos(w * t))
    return RigidTransform.translate(x, y, 0.0).compose(RigidTransform.rotate_z(w * t))


def generate_scene(spec: SceneSpec, seed: int) -> Scene:
    """Generate a scene deterministically from (spec, seed).

    Object spawn positions, speeds, headings and sizes are drawn object
    by object from one SplitMix64 stream; explicit ``object_velocities``
    override the drawn velocity but leave the draw order (and therefore
    every other object's values) unchanged.  Boxes rest on the ground
    (center height = box height / 2) and follow constant global
    velocity; yaw faces the motion direction.
    """
    rng = SplitMix64(derive_seed(seed, _STREAM_OBJECTS))
    starts = np.empty((spec.n_objects, 3))
    velocities = np.empty((spec.n_objects, 3))
    yaws = np.empty(spec.n_objects)
    sizes = []
    for j in range(spec.n_objects):
        x0 = rng.uniform(*spec.spawn_x)
        y0 = rng.uniform(*spec.spawn_y)
        speed = rng.uniform(*spec.object_speed_range)
        heading = rng.uniform(0.0, 2.0 * math.pi)
        l = rng.uniform(*spec.size_ranges[0])
        w = rng.uniform(*spec.size_ranges[1])
        h = rng.uniform(*spec.size_ranges[2])
        vel = np.array([speed * math.cos(heading), speed * math.sin(heading), 0.0])
        if spec.object_velocities is not None:
            vel = np.asarray(spec.object_velocities[j], dtype=np.float64)
            if np.hypot(vel[0], vel[1]) > 0.0:
                heading = math.atan2(vel[1], vel[0])
        starts[j] = (x0, y0, h / 2.0)
        velocities[j] = vel
        yaws[j] = heading
        sizes.append((l, w, h))

    frames = []
    for i in range(spec.n_frames):
        t = i * spec.frame_dt
        pose = ego_pose_at(spec, t)
        world_from_ego = pose
        ego_from_world = pose.invert()
        states = []
        for j in range(spec.n_objects):
            center_global = starts[j] + velocities[j] * t
            states.append(
                ObjectState(
                    object_id=j,
                    timestamp=t,
                    center=ego_from_world.apply(center_global),
                    size=sizes[j],
                    velocity=velocities[j],
                    yaw=float(yaws[j]),
                )
            )
        frames.append(
            SceneFrame(
                timestamp=t,
                ego_pose=world_from_ego,
                objects=tuple(states),
                lidar=np.zeros((0, 3), dtype=np.float32),
            )
        )

    scene = Scene(frames=tuple(frames), rig=build_rig(spec), seed=seed, spec=spec)
    frames = tuple(
        replace(frame, lidar=cast_lidar(scene, i)) for i, frame in enumerate(scene.frames)
    )
    return Scene(frames=frames, rig=scene.rig, seed=seed, spec=spec)


def scene_track(scene: Scene) -> EgoTrack:
    """The scene's ego poses as an :class:`EgoTrack`."""
    return EgoTrack(
        timestamps=tuple(f.timestamp for f in scene.frames),
        poses=tuple(f.ego_pose for f in scene.frames),
    )


def boxes_at(scene: Scene, frame_index: int) -> list[Box]:
    """Global-frame boxes for one frame, ready for ray casting."""
    frame = scene.frames[frame_index]
    return [
        Box(
            center=frame.ego_pose.apply(s.center),
            size=s.size,
            yaw=s.yaw,
            object_id=s.object_id,
        )
        for s in frame.objects
    ]


def _lidar_dirs(spec: SceneSpec) -> np.ndarray:
    """Unit ray directions (ego frame) over the azimuth/elevation grid."""
    az = np.arange(spec.lidar_azimuth_steps) * (2.0 * math.pi / spec.lidar_azimuth_steps)
    lo, hi = spec.lidar_elevation_range
    el = np.linspace(lo, hi, spec.lidar_elevation_steps)
    azg, elg = np.meshgrid(az, el, indexing="ij")
    return np.stack(
        [np.cos(elg) * np.cos(azg), np.cos(elg) * np.sin(azg), np.sin(elg)], axis=-1
    ).reshape(-1, 3)


def cast_lidar(scene: Scene, frame_index: int, noise_sigma: float = 0.0) -> np.ndarray:
    """Exact LiDAR sweep for one frame, as (N, 3) float32 ego-frame points.

    Rays start at (0, 0, lidar_height) in the ego frame and hit the
    first box or ground-plane surface within max range; misses are
    dropped.  Optional Gaussian range noise (standard deviation
    ``noise_sigma`` meters) is drawn from a per-frame stream.
    """
    spec = scene.spec
    if spec is None:
        raise InvalidSpec("scene carries no spec; cannot cast rays")
    frame = scene.frames[frame_index]
    dirs_ego = _lidar_dirs(spec)
    origin_ego = np.array([0.0, 0.0, spec.lidar_height])
    r = frame.ego_pose.rotation
    t, _ids = cast_rays(
        frame.ego_pose.apply(origin_ego),
        dirs_ego @ r.T,
        boxes_at(scene, frame_index),
        max_range=spec.max_range,
    )
    hit = np.isfinite(t)
    t = t[hit]
    if noise_sigma > 0.0:
        rng = SplitMix64(derive_seed(scene.seed, _STREAM_LIDAR_NOISE, frame_index))
        noise = np.array([_gauss(rng) for _ in range(t.shape[0])])
        t = np.maximum(t + noise_sigma * noise, 0.0)
    points = origin_ego + t[:, None] * dirs_ego[hit]
    return points.astype(np.float32)


def _gauss(rng: SplitMix64) -> float:
    """One standard normal draw (Box-Muller, two uniforms per call)."""
    u1 = max(rng.uniform(), 1e-300)
    u2 = rng.uniform()
    return math.sqrt(-2.0 * math.log(u1)) * math.cos(2.0 * math.pi * u2)


def _pixel_ray_hits(
    scene: Scene, frame_index: int, cam_index: int
) -> tuple[np.ndarray, np.ndarray]:
    """Cast one ray per pixel center; returns (depth, surface id) grids.

    Ray directions have camera-frame z equal to 1, so the intersection
    parameter equals the camera-frame forward depth of the hit.
    """
    spec = scene.spec
    if spec is None:
        raise InvalidSpec("scene carries no spec; cannot cast rays")
    cam = scene.rig[cam_index]
    frame = scene.frames[frame_index]
    us = np.arange(cam.width, dtype=np.float64)
    vs = np.arange(cam.height, dtype=np.float64)
    dirs_cam = np.empty((cam.height, cam.width, 3))
    dirs_cam[..., 0] = ((us - cam.cx) / cam.fx)[None, :]
    dirs_cam[..., 1] = ((vs - cam.cy) / cam.fy)[:, None]
    dirs_cam[..., 2] = 1.0

    ego_from_cam = cam.ego_from_camera()
    dirs_ego = dirs_cam.reshape(-1, 3) @ ego_from_cam.rotation.T
    origin_ego = ego_from_cam.translation
    r = frame.ego_pose.rotation
    t, ids = cast_rays(
        frame.ego_pose.apply(origin_ego),
        dirs_ego @ r.T,
        boxes_at(scene, frame_index),
        max_range=spec.max_range,
    )
    return t.reshape(cam.height, cam.width), ids.reshape(cam.height, cam.width)


def render_true_depth(scene: Scene, frame_index: int, cam_index: int) -> DepthMap:
    """Exact per-pixel forward depth from ray casting; misses get 0."""
    t, _ids = _pixel_ray_hits(scene, frame_index, cam_index)
    return DepthMap(np.where(np.isfinite(t), t, 0.0))


def feature_code(surface_id: int, channels: int) -> np.ndarray:
    """Unit-norm feature vector derived by hashing a surface id.

    Components are uniform draws in [-1, 1) from a SplitMix64 stream
    seeded by the id, then scaled to unit L2 norm; the same id always
    maps to the same vector.  Negative ids (ground, background) hash
    like any other.
    """
    rng = SplitMix64(derive_seed(_STREAM_FEATURES, surface_id))
    v = np.array([rng.uniform(-1.0, 1.0) for _ in range(channels)])
    n = np.linalg.norm(v)
    if n < 1e-12:
        v[0] = 1.0
        n = 1.0
    return v / n


def render_truth_features(
    scene: Scene, frame_index: int, cam_index: int, channels: int = 8
) -> FeatureMap:
    """Per-pixel feature vectors identifying the surface each ray hits.

    Every pixel receives the :func:`feature_code` of its surface id;
    rays that hit nothing receive the background code.  This stands in
    for a learned image backbone whose output is exactly scene-aligned.
    """
    _t, ids = _pixel_ray_hits(scene, frame_index, cam_index)
    out = np.empty((ids.shape[0], ids.shape[1], channels))
    for sid in np.unique(ids):
        out[ids == sid] = feature_code(int(sid), channels)
    return FeatureMap(out)


def degrade_depth(
    true: DepthMap,
    blur_bins: int,
    dropout: float,
    bins: DepthBinSpec = DepthBinSpec(),
    seed: int = 0,
) -> DepthDistribution:
    """Turn exact depth into a plausible, imperfect predicted distribution.

    Pixels with a depth inside the bin range get a one-hot distribution
    convolved with a triangular kernel of half-width ``blur_bins``
    (width 0 keeps the one-hot), renormalized where the kernel is
    truncated at the bin edges.  Pixels with no depth, or depth outside
    the range, get a uniform distribution.  Finally a ``dropout``
    fraction of pixels, chosen by one uniform draw per pixel in
    row-major order from the stream seeded by ``seed``, is replaced
    with the uniform distribution.
    """
    if blur_bins < 0:
        raise ValueError(f"blur width must be non-negative, got {blur_bins}")
    if not (0.0 <= dropout <= 1.0):
        raise ValueError(f"dropout must lie in [0, 1], got {dropout}")
    h, w = true.values.shape
    n = bins.n_bins
    idx, in_range = bin_index(true.values, bins)
    valid = true.coverage_mask() & in_range

    out = np.zeros((h, w, n))
    rows, cols = np.nonzero(valid)
    centers = idx[rows, cols]
    scale = float((blur_bins + 1) ** 2)
    for offset in range(-blur_bins, blur_bins + 1):
        weight = (blur_bins + 1 - abs(offset)) / scale
        target = centers + offset
        ok = (target >= 0) & (target < n)
        out[rows[ok], cols[ok], target[ok]] += weight
    sums = out[rows, cols].sum(axis=1)
    out[rows, cols] /= sums[:, None]

    out[~valid] = 1.0 / n

    if dropout > 0.0:
        rng = SplitMix64(derive_seed(seed, _STREAM_DEPTH))
        draws = rng.uniform_array(h * w).reshape(h, w)
        out[draws < dropout] = 1.0 / n
    return DepthDistribution(out)
