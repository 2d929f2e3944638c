"""Rigid-body transforms and pinhole camera geometry.

Coordinate conventions, fixed for the whole package:

  Ego frame (right-handed):    x forward, y left, z up.  Meters.
  Camera frame (right-handed): x right in the image, y down, z forward
                               along the optical axis.
  Image frame:                 u right (column), v down (row).  Pixels.

Orientation is always matrix-valued; no Euler angles are stored.  A
:class:`RigidTransform` wraps a 4x4 homogeneous matrix in float64 whose
bottom row is exactly [0, 0, 0, 1].

Depth values throughout are camera-frame forward depth (the z coordinate
in the camera frame), not Euclidean ray length.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import BehindCamera, NonPositiveDepth

# Module-level tolerance defaults.  Callers that need different bounds can
# override these in one place.
ROTATION_TOL = 1e-9
BEHIND_CAMERA_EPS = 1e-6


@dataclass(frozen=True, eq=False)
class RigidTransform:
    """A proper rigid motion (rotation plus translation) of 3D space.

    The wrapped matrix is validated on construction: the rotation block
    must be orthonormal with determinant +1 within ``ROTATION_TOL`` and
    the bottom row must be exactly [0, 0, 0, 1].  The matrix is frozen
    (read-only) after validation so instances can be shared freely.
    """

    matrix: np.ndarray

    def __post_init__(self) -> None:
        m = np.array(self.matrix, dtype=np.float64, copy=True)
        if m.shape != (4, 4):
            raise ValueError(f"expected a 4x4 matrix, got shape {m.shape}")
        if not np.all(np.isfinite(m)):
            raise ValueError("transform entries must be finite")
        if not np.array_equal(m[3], np.array([0.0, 0.0, 0.0, 1.0])):
            raise ValueError("bottom row must be exactly [0, 0, 0, 1]")
        r = m[:3, :3]
        if np.max(np.abs(r @ r.T - np.eye(3))) > ROTATION_TOL:
            raise ValueError("rotation block is not orthonormal")
        if abs(float(np.linalg.det(r)) - 1.0) > ROTATION_TOL:
            raise ValueError("rotation block must have determinant +1")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def rotation(self) -> np.ndarray:
        """The 3x3 rotation block."""
        return self.matrix[:3, :3]

    @property
    def translation(self) -> np.ndarray:
        """The translation column as a length-3 vector."""
        return self.matrix[:3, 3]

    @classmethod
    def identity(cls) -> "RigidTransform":
        return cls(np.eye(4))

    @classmethod
    def from_rotation_translation(cls, rotation, translation) -> "RigidTransform":
        m = np.eye(4)
        m[:3, :3] = np.asarray(rotation, dtype=np.float64)
        m[:3, 3] = np.asarray(translation, dtype=np.float64)
        return cls(m)

    @classmethod
    def translate(cls, x: float, y: float, z: float) -> "RigidTransform":
        m = np.eye(4)
        m[:3, 3] = (x, y, z)
        return cls(m)

    @classmethod
    def rotate_x(cls, angle: float) -> "RigidTransform":
        c, s = math.cos(angle), math.sin(angle)
        return cls.from_rotation_translation(
            [[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]], [0.0, 0.0, 0.0]
        )

    @classmethod
    def rotate_y(cls, angle: float) -> "RigidTransform":
        c, s = math.cos(angle), math.sin(angle)
        return cls.from_rotation_translation(
            [[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]], [0.0, 0.0, 0.0]
        )

    @classmethod
    def rotate_z(cls, angle: float) -> "RigidTransform":
        c, s = math.cos(angle), math.sin(angle)
        return cls.from_rotation_translation(
            [[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]], [0.0, 0.0, 0.0]
        )

    def compose(self, other: "RigidTransform") -> "RigidTransform":
        """Return the transform applying ``other`` first, then ``self``."""
        return RigidTransform(self.matrix @ other.matrix)

    def invert(self) -> "RigidTransform":
        # Closed form keeps the bottom row exact and the rotation block
        # exactly orthonormal (a transpose, not a numeric inverse).
        r_t = self.rotation.T
        return RigidTransform.from_rotation_translation(r_t, -r_t @ self.translation)

    def apply(self, points) -> np.ndarray:
        """Transform one point of shape (3,) or a batch of shape (N, 3)."""
        pts = np.asarray(points, dtype=np.float64)
        if pts.shape == (3,):
            return self.rotation @ pts + self.translation
        if pts.ndim >= 2 and pts.shape[-1] == 3:
            return pts @ self.rotation.T + self.translation
        raise ValueError(f"expected shape (3,) or (..., 3), got {pts.shape}")

    def __repr__(self) -> str:
        t = self.translation
        return f"RigidTransform(t=[{t[0]:.3f}, {t[1]:.3f}, {t[2]:.3f}])"


def compose(a: RigidTransform, b: RigidTransform) -> RigidTransform:
    """Composition a after b: (compose(a, b)).apply(p) == a.apply(b.apply(p))."""
    return a.compose(b)


def invert(t: RigidTransform) -> RigidTransform:
    """The inverse motion, so compose(t, invert(t)) is the identity."""
    return t.invert()


def transform_point(t: RigidTransform, p) -> np.ndarray:
    """Apply ``t`` to a single point, returning a length-3 float64 vector."""
    return t.apply(np.asarray(p, dtype=np.float64).reshape(3))


@dataclass(frozen=True, eq=False)
class CameraModel:
    """Pinhole intrinsics plus the ego-to-camera extrinsic transform.

    ``extrinsic`` maps ego-frame points into the camera frame.  The
    principal point must lie inside the image and both focal lengths
    must be positive.
    """

    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int
    extrinsic: RigidTransform

    def __post_init__(self) -> None:
        if not (self.fx > 0.0 and self.fy > 0.0):
            raise ValueError("focal lengths must be positive")
        if not (0.0 <= self.cx < self.width and 0.0 <= self.cy < self.height):
            raise ValueError("principal point must lie inside the image")
        if self.width < 1 or self.height < 1:
            raise ValueError("image dimensions must be positive")

    def ego_from_camera(self) -> RigidTransform:
        """The camera-to-ego transform (inverse of ``extrinsic``)."""
        return self.extrinsic.invert()


def project(cam: CameraModel, p) -> tuple[float, float, float]:
    """Project an ego-frame point to pixel coordinates and forward depth.

    Returns ``(u, v, d)`` where ``d`` is the camera-frame z coordinate.
    Raises :class:`BehindCamera` when the point sits at or behind the
    principal plane (z <= ``BEHIND_CAMERA_EPS``).  The pixel coordinates
    are not clipped to the image bounds; callers decide visibility.
    """
    p_cam = cam.extrinsic.apply(np.asarray(p, dtype=np.float64).reshape(3))
    z = float(p_cam[2])
    if z <= BEHIND_CAMERA_EPS:
        raise BehindCamera(f"point depth {z:.3e} is at or behind the camera")
    u = cam.fx * float(p_cam[0]) / z + cam.cx
    v = cam.fy * float(p_cam[1]) / z + cam.cy
    return u, v, z


def backproject(cam: CameraModel, u: float, v: float, d: float) -> np.ndarray:
    """Invert :func:`project`: pixel (u, v) at forward depth d, in ego frame.

    Raises :class:`NonPositiveDepth` for d <= 0.
    """
    if d <= 0.0:
        raise NonPositiveDepth(f"depth must be positive, got {d}")
    x = (u - cam.cx) / cam.fx * d
    y = (v - cam.cy) / cam.fy * d
    return cam.ego_from_camera().apply(np.array([x, y, d]))


def project_points(cam: CameraModel, points) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorized projection of an (N, 3) batch of ego-frame points.

    Returns ``(uv, depth, in_front)``.  Rows where ``in_front`` is False
    (z <= ``BEHIND_CAMERA_EPS``) carry meaningless pixel coordinates and
    must be masked by the caller; no exception is raised.
    """
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    p_cam = cam.extrinsic.apply(pts)
    z = p_cam[:, 2]
    in_front = z > BEHIND_CAMERA_EPS
    z_safe = np.where(in_front, z, 1.0)
    uv = np.empty((pts.shape[0], 2))
    uv[:, 0] = cam.fx * p_cam[:, 0] / z_safe + cam.cx
    uv[:, 1] = cam.fy * p_cam[:, 1] / z_safe + cam.cy
    return uv, z, in_front


def backproject_pixels(cam: CameraModel, u, v, d) -> np.ndarray:
    """Vectorized :func:`backproject` over equal-length arrays of pixels.

    Raises :class:`NonPositiveDepth` if any depth is not positive.
    """
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    d = np.asarray(d, dtype=np.float64)
    if np.any(d <= 0.0):
        raise NonPositiveDepth("all depths must be positive")
    p_cam = np.stack([(u - cam.cx) / cam.fx * d, (v - cam.cy) / cam.fy * d, d], axis=-1)
    return cam.ego_from_camera().apply(p_cam.reshape(-1, 3)).reshape(p_cam.shape)


def camera_pose_in_ego(position, yaw: float) -> RigidTransform:
    """Camera-to-ego transform for a camera mounted at ``position``.

    The optical axis points along the ego-frame direction with heading
    ``yaw`` (0 means straight ahead along ego +x), with zero pitch and
    roll.  Camera x (image right) then points to the ego right and
    camera y (image down) points to the ego ground.
    """
    c, s = math.cos(yaw), math.sin(yaw)
    # Columns are the camera axes expressed in the ego frame.
    forward = np.array([c, s, 0.0])          # camera z
    right = np.array([s, -c, 0.0])           # camera x
    down = np.array([0.0, 0.0, -1.0])        # camera y
    r = np.stack([right, down, forward], axis=1)
    return RigidTransform.from_rotation_translation(r, np.asarray(position, dtype=np.float64))


def camera_extrinsic(position, yaw: float) -> RigidTransform:
    """Ego-to-camera transform for the mounting described above."""
    return camera_pose_in_ego(position, yaw).invert()
