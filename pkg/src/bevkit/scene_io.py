"""Scene and grid serialization: JSON manifest plus raw binary blobs.

A scene saves to a directory::

    <dir>/manifest.json     human-readable structured text
    <dir>/blobs/*.bin       bulk arrays, one blob per frame's LiDAR sweep

The manifest records the format version, the generating spec and seed,
the camera rig, and per frame the timestamp, ego pose (16 row-major
float64 values), object states, the blob path and its SHA-256 checksum.
Poses and object states live in the manifest as JSON numbers, which
round-trip float64 exactly; point clouds are stored as float32.

Array blob layout (all integers little-endian)::

    offset 0   8 bytes   magic  b"BKARRAY\\x00"
    offset 8   uint16    format version (currently 1)
    offset 10  uint8     dtype code: 1 float32, 2 float64, 3 int32, 4 int64
    offset 11  uint8     ndim
    offset 12  uint32[]  one dimension per ndim
    then       payload   raw little-endian C-order array data

Grid files carry one typed grid each, self-describing::

    offset 0   8 bytes   magic  b"BKGRID\\x00\\x00"
    offset 8   uint16    format version (currently 1)
    offset 10  uint8     kind: 1 BEVGrid, 2 OccupancyGrid,
                         3 DepthDistribution, 4 DepthMap
    offset 11  uint8     dtype code (as above)
    offset 12  uint8     ndim
    offset 13  uint32[]  dims
    then       uint8     meta count
    then       float64[] kind-specific metadata:
                         BEVGrid       x_min, x_max, y_min, y_max, timestamp
                         OccupancyGrid x_min, x_max, y_min, y_max, z_min, z_max
                         others        none
    then       payload   raw little-endian C-order array data

Loading verifies magic, version, header consistency and checksums;
failures raise CorruptHeader, UnsupportedVersion, ChecksumMismatch or
IoFailure.  Saving and loading round-trip every array bit for bit.
"""

from __future__ import annotations

import hashlib
import json
import struct
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .depth import DepthDistribution, DepthMap
from .errors import ChecksumMismatch, CorruptHeader, IoFailure, UnsupportedVersion
from .geometry import CameraModel, RigidTransform
from .objects import ObjectState
from .occupancy import OccupancyGrid, VoxelSpec
from .synth_scene import Scene, SceneFrame, SceneSpec
from .view_transform import BEVGrid, BEVSpec

FORMAT_VERSION = 1
_ARRAY_MAGIC = b"BKARRAY\x00"
_GRID_MAGIC = b"BKGRID\x00\x00"

_DTYPE_CODES = {1: "<f4", 2: "<f8", 3: "<i4", 4: "<i8"}
_DTYPE_FOR = {np.dtype(np.float32): 1, np.dtype(np.float64): 2,
              np.dtype(np.int32): 3, np.dtype(np.int64): 4}

_KIND_BEV = 1
_KIND_OCC = 2
_KIND_DDIST = 3
_KIND_DMAP = 4


def _encode_array(arr: np.ndarray) -> bytes:
    code = _DTYPE_FOR.get(arr.dtype)
    if code is None:
        raise ValueError(f"unsupported dtype {arr.dtype}")
    header = _ARRAY_MAGIC + struct.pack("<HBB", FORMAT_VERSION, code, arr.ndim)
    header += struct.pack(f"<{arr.ndim}I", *arr.shape)
    return header + np.ascontiguousarray(arr).astype(_DTYPE_CODES[code]).tobytes()


def _decode_array(data: bytes, source: str) -> np.ndarray:
    if len(data) < 12 or data[:8] != _ARRAY_MAGIC:
        raise CorruptHeader(f"{source}: bad array magic")
    version, code, ndim = struct.unpack_from("<HBB", data, 8)
    if version > FORMAT_VERSION:
        raise UnsupportedVersion(f"{source}: version {version} > {FORMAT_VERSION}")
    if code not in _DTYPE_CODES:
        raise CorruptHeader(f"{source}: unknown dtype code {code}")
    offset = 12
    if len(data) < offset + 4 * ndim:
        raise CorruptHeader(f"{source}: truncated dimension list")
    dims = struct.unpack_from(f"<{ndim}I", data, offset)
    offset += 4 * ndim
    dtype = np.dtype(_DTYPE_CODES[code])
    expected = int(np.prod(dims)) * dtype.itemsize
    if len(data) != offset + expected:
        raise CorruptHeader(f"{source}: payload is {len(data) - offset} bytes, header says {expected}")
    return np.frombuffer(data[offset:], dtype=dtype).reshape(dims)


def _write_bytes(path: Path, data: bytes) -> None:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(data)
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def _read_bytes(path: Path) -> bytes:
    try:
        return path.read_bytes()
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc


@dataclass(frozen=True)
class Manifest:
    """The parsed manifest of a saved scene plus where it lives."""

    path: Path
    data: dict

    @property
    def seed(self) -> int:
        return self.data["seed"]

    @property
    def n_frames(self) -> int:
        return len(self.data["frames"])


def _pose_to_list(t: RigidTransform) -> list[float]:
    return [float(x) for x in t.matrix.reshape(16)]


def _pose_from_list(values, source: str) -> RigidTransform:
    arr = np.asarray(values, dtype=np.float64)
    if arr.shape != (16,):
        raise CorruptHeader(f"{source}: pose must hold 16 values")
    return RigidTransform(arr.reshape(4, 4))


def _spec_to_dict(spec: SceneSpec | None) -> dict | None:
    return None if spec is None else asdict(spec)


def _spec_from_dict(d: dict | None) -> SceneSpec | None:
    if d is None:
        return None
    velocities = d["object_velocities"]
    return SceneSpec(
        n_frames=d["n_frames"],
        frame_dt=d["frame_dt"],
        n_objects=d["n_objects"],
        object_speed_range=tuple(d["object_speed_range"]),
        object_velocities=None if velocities is None else tuple(tuple(v) for v in velocities),
        ego_speed=d["ego_speed"],
        ego_yaw_rate=d["ego_yaw_rate"],
        spawn_x=tuple(d["spawn_x"]),
        spawn_y=tuple(d["spawn_y"]),
        size_ranges=tuple(tuple(r) for r in d["size_ranges"]),
        lidar_azimuth_steps=d["lidar_azimuth_steps"],
        lidar_elevation_steps=d["lidar_elevation_steps"],
        lidar_elevation_range=tuple(d["lidar_elevation_range"]),
        lidar_height=d["lidar_height"],
        max_range=d["max_range"],
        cam_yaws=tuple(d["cam_yaws"]),
        cam_height=d["cam_height"],
        image_width=d["image_width"],
        image_height=d["image_height"],
        focal=d["focal"],
        depth_blur_bins=d["depth_blur_bins"],
        depth_dropout=d["depth_dropout"],
    )


def save_scene(scene: Scene, path) -> Manifest:
    """Write a scene to ``path`` (a directory) and return its manifest."""
    root = Path(path)
    frames = []
    blobs: dict[str, bytes] = {}
    for i, frame in enumerate(scene.frames):
        rel = f"blobs/frame_{i:04d}_lidar.bin"
        blob = _encode_array(frame.lidar)
        blobs[rel] = blob
        frames.append(
            {
                "timestamp": float(frame.timestamp),
                "ego_pose": _pose_to_list(frame.ego_pose),
                "objects": [
                    {
                        "object_id": s.object_id,
                        "timestamp": float(s.timestamp),
                        "center": [float(x) for x in s.center],
                        "size": [float(x) for x in s.size],
                        "velocity": [float(x) for x in s.velocity],
                        "yaw": float(s.yaw),
                    }
                    for s in frame.objects
                ],
                "lidar_blob": rel,
                "lidar_sha256": hashlib.sha256(blob).hexdigest(),
            }
        )
    data = {
        "format_version": FORMAT_VERSION,
        "seed": scene.seed,
        "spec": _spec_to_dict(scene.spec),
        "rig": [
            {
                "fx": cam.fx,
                "fy": cam.fy,
                "cx": cam.cx,
                "cy": cam.cy,
                "width": cam.width,
                "height": cam.height,
                "extrinsic": _pose_to_list(cam.extrinsic),
            }
            for cam in scene.rig
        ],
        "frames": frames,
    }
    for rel, blob in blobs.items():
        _write_bytes(root / rel, blob)
    _write_bytes(root / "manifest.json", (json.dumps(data, indent=2, sort_keys=True) + "\n").encode())
    return Manifest(path=root, data=data)


def load_scene(path) -> Scene:
    """Read a scene directory back; the inverse of :func:`save_scene`."""
    root = Path(path)
    raw = _read_bytes(root / "manifest.json")
    try:
        data = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise CorruptHeader(f"{root}: manifest is not valid JSON: {exc}") from exc
    version = data.get("format_version")
    if not isinstance(version, int):
        raise CorruptHeader(f"{root}: manifest lacks an integer format_version")
    if version > FORMAT_VERSION:
        raise UnsupportedVersion(f"{root}: version {version} > {FORMAT_VERSION}")

    rig = tuple(
        CameraModel(
            fx=c["fx"],
            fy=c["fy"],
            cx=c["cx"],
            cy=c["cy"],
            width=c["width"],
            height=c["height"],
            extrinsic=_pose_from_list(c["extrinsic"], f"{root} rig"),
        )
        for c in data["rig"]
    )
    frames = []
    for rec in data["frames"]:
        blob_path = root / rec["lidar_blob"]
        blob = _read_bytes(blob_path)
        digest = hashlib.sha256(blob).hexdigest()
        if digest != rec["lidar_sha256"]:
            raise ChecksumMismatch(f"{blob_path}: checksum {digest} != recorded {rec['lidar_sha256']}")
        lidar = _decode_array(blob, str(blob_path))
        frames.append(
            SceneFrame(
                timestamp=rec["timestamp"],
                ego_pose=_pose_from_list(rec["ego_pose"], f"{root} frame"),
                objects=tuple(
                    ObjectState(
                        object_id=o["object_id"],
                        timestamp=o["timestamp"],
                        center=np.asarray(o["center"], dtype=np.float64),
                        size=tuple(o["size"]),
                        velocity=np.asarray(o["velocity"], dtype=np.float64),
                        yaw=o["yaw"],
                    )
                    for o in rec["objects"]
                ),
                lidar=lidar,
            )
        )
    return Scene(frames=tuple(frames), rig=rig, seed=data["seed"], spec=_spec_from_dict(data["spec"]))


def _grid_payload(kind: int, values: np.ndarray, meta: list[float]) -> bytes:
    code = _DTYPE_FOR[values.dtype]
    out = _GRID_MAGIC + struct.pack("<HBBB", FORMAT_VERSION, kind, code, values.ndim)
    out += struct.pack(f"<{values.ndim}I", *values.shape)
    out += struct.pack("<B", len(meta))
    out += struct.pack(f"<{len(meta)}d", *meta)
    return out + np.ascontiguousarray(values).astype(_DTYPE_CODES[code]).tobytes()


def save_grid(grid, path) -> None:
    """Write one typed grid (BEV, occupancy, depth distribution or map)."""
    if isinstance(grid, BEVGrid):
        meta = [grid.spec.x_min, grid.spec.x_max, grid.spec.y_min, grid.spec.y_max,
                grid.frame_timestamp]
        payload = _grid_payload(_KIND_BEV, grid.values, meta)
    elif isinstance(grid, OccupancyGrid):
        s = grid.spec
        payload = _grid_payload(
            _KIND_OCC, grid.values, [s.x_min, s.x_max, s.y_min, s.y_max, s.z_min, s.z_max]
        )
    elif isinstance(grid, DepthDistribution):
        payload = _grid_payload(_KIND_DDIST, grid.values, [])
    elif isinstance(grid, DepthMap):
        payload = _grid_payload(_KIND_DMAP, grid.values, [])
    else:
        raise TypeError(f"cannot serialize {type(grid).__name__}")
    _write_bytes(Path(path), payload)


def load_grid(path):
    """Read a grid file back as its original type."""
    p = Path(path)
    data = _read_bytes(p)
    if len(data) < 13 or data[:8] != _GRID_MAGIC:
        raise CorruptHeader(f"{p}: bad grid magic")
    version, kind, code, ndim = struct.unpack_from("<HBBB", data, 8)
    if version > FORMAT_VERSION:
        raise UnsupportedVersion(f"{p}: version {version} > {FORMAT_VERSION}")
    if code not in _DTYPE_CODES:
        raise CorruptHeader(f"{p}: unknown dtype code {code}")
    offset = 13
    if len(data) < offset + 4 * ndim + 1:
        raise CorruptHeader(f"{p}: truncated header")
    dims = struct.unpack_from(f"<{ndim}I", data, offset)
    offset += 4 * ndim
    (n_meta,) = struct.unpack_from("<B", data, offset)
    offset += 1
    if len(data) < offset + 8 * n_meta:
        raise CorruptHeader(f"{p}: truncated metadata")
    meta = struct.unpack_from(f"<{n_meta}d", data, offset)
    offset += 8 * n_meta
    dtype = np.dtype(_DTYPE_CODES[code])
    expected = int(np.prod(dims)) * dtype.itemsize
    if len(data) != offset + expected:
        raise CorruptHeader(f"{p}: payload is {len(data) - offset} bytes, header says {expected}")
    values = np.frombuffer(data[offset:], dtype=dtype).reshape(dims)

    if kind == _KIND_BEV:
        if ndim != 3 or n_meta != 5:
            raise CorruptHeader(f"{p}: malformed BEV grid header")
        spec = BEVSpec(meta[0], meta[1], meta[2], meta[3], dims[0], dims[1])
        return BEVGrid(spec, values, frame_timestamp=meta[4])
    if kind == _KIND_OCC:
        if ndim != 3 or n_meta != 6:
            raise CorruptHeader(f"{p}: malformed occupancy grid header")
        spec = VoxelSpec(meta[0], meta[1], meta[2], meta[3], meta[4], meta[5],
                         dims[0], dims[1], dims[2])
        return OccupancyGrid(spec, values)
    if kind == _KIND_DDIST:
        if ndim != 3:
            raise CorruptHeader(f"{p}: malformed depth distribution header")
        return DepthDistribution(values)
    if kind == _KIND_DMAP:
        if ndim != 2:
            raise CorruptHeader(f"{p}: malformed depth map header")
        return DepthMap(values)
    raise CorruptHeader(f"{p}: unknown grid kind {kind}")


def scenes_equal(a: Scene, b: Scene) -> bool:
    """Bitwise equality of two scenes (arrays compared exactly)."""
    if a.seed != b.seed or a.spec != b.spec or len(a.frames) != len(b.frames):
        return False
    if len(a.rig) != len(b.rig):
        return False
    for ca, cb in zip(a.rig, b.rig):
        if (ca.fx, ca.fy, ca.cx, ca.cy, ca.width, ca.height) != (
            cb.fx, cb.fy, cb.cx, cb.cy, cb.width, cb.height
        ):
            return False
        if not np.array_equal(ca.extrinsic.matrix, cb.extrinsic.matrix):
            return False
    for fa, fb in zip(a.frames, b.frames):
        if fa.timestamp != fb.timestamp:
            return False
        if not np.array_equal(fa.ego_pose.matrix, fb.ego_pose.matrix):
            return False
        if fa.lidar.dtype != fb.lidar.dtype or not np.array_equal(fa.lidar, fb.lidar):
            return False
        if len(fa.objects) != len(fb.objects):
            return False
        for oa, ob in zip(fa.objects, fb.objects):
            if (oa.object_id, oa.timestamp, oa.size, oa.yaw) != (
                ob.object_id, ob.timestamp, ob.size, ob.yaw
            ):
                return False
            if not (np.array_equal(oa.center, ob.center) and np.array_equal(oa.velocity, ob.velocity)):
                return False
    return True
