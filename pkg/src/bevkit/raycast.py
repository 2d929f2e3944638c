"""Exact ray casting against yaw-oriented boxes and the ground plane.

Rays are given by an origin and a direction vector (not necessarily
unit length); hits are reported as the parameter t of the first
intersection, so the hit point is origin + t * direction.  With unit
directions t is the Euclidean distance.

Boxes are axis-aligned in their own body frame and rotated about z
only; the slab method runs in the body frame.  The ground plane is
z = 0 in whatever frame the rays are expressed in.

Surface identifiers: boxes report their object id (>= 0), the ground
plane reports GROUND_ID, rays that hit nothing report MISS_ID with
t = +inf.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

GROUND_ID = -1
MISS_ID = -2

# Intersections closer than this are treated as the ray grazing its own
# origin and ignored.
T_EPS = 1e-9


@dataclass(frozen=True, eq=False)
class Box:
    """A yaw-oriented box: center, (length, width, height), heading."""

    center: np.ndarray
    size: tuple[float, float, float]
    yaw: float
    object_id: int

    def __post_init__(self) -> None:
        c = np.asarray(self.center, dtype=np.float64).reshape(3)
        c.setflags(write=False)
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "size", tuple(float(s) for s in self.size))
        if not all(s > 0.0 for s in self.size):
            raise ValueError(f"box dimensions must be positive, got {self.size}")


def _ray_box_t(origins: np.ndarray, dirs: np.ndarray, box: Box) -> np.ndarray:
    """Entry parameter per ray for one box; +inf where there is no hit."""
    c, s = math.cos(box.yaw), math.sin(box.yaw)
    # Rotate world x-y into the box body frame (inverse yaw).
    ox = origins[:, 0] - box.center[0]
    oy = origins[:, 1] - box.center[1]
    oz = origins[:, 2] - box.center[2]
    o = np.stack([c * ox + s * oy, -s * ox + c * oy, oz], axis=1)
    d = np.stack(
        [c * dirs[:, 0] + s * dirs[:, 1], -s * dirs[:, 0] + c * dirs[:, 1], dirs[:, 2]],
        axis=1,
    )
    half = np.array(box.size) / 2.0

    t_near = np.full(origins.shape[0], -np.inf)
    t_far = np.full(origins.shape[0], np.inf)
    miss = np.zeros(origins.shape[0], dtype=bool)
    for axis in range(3):
        parallel = d[:, axis] == 0.0
        # Parallel rays miss unless the origin lies inside the slab.
        miss |= parallel & (np.abs(o[:, axis]) > half[axis])
        with np.errstate(divide="ignore", invalid="ignore"):
            t1 = (-half[axis] - o[:, axis]) / d[:, axis]
            t2 = (half[axis] - o[:, axis]) / d[:, axis]
        lo = np.minimum(t1, t2)
        hi = np.maximum(t1, t2)
        t_near = np.where(parallel, t_near, np.maximum(t_near, lo))
        t_far = np.where(parallel, t_far, np.minimum(t_far, hi))

    hit = ~miss & (t_far >= t_near) & (t_far > T_EPS)
    # First intersection in front of the origin; if the origin is inside
    # the box, that is the exit face.
    t = np.where(t_near > T_EPS, t_near, t_far)
    return np.where(hit, t, np.inf)


def _ray_ground_t(origins: np.ndarray, dirs: np.ndarray) -> np.ndarray:
    """Intersection parameter with the z = 0 plane; +inf where none."""
    dz = dirs[:, 2]
    with np.errstate(divide="ignore", invalid="ignore"):
        t = -origins[:, 2] / dz
    ok = (dz != 0.0) & (t > T_EPS)
    return np.where(ok, t, np.inf)


def cast_rays(
    origins,
    dirs,
    boxes: list[Box],
    max_range: float = math.inf,
    ground: bool = True,
) -> tuple[np.ndarray, np.ndarray]:
    """First hit of each ray against the boxes and optional ground plane.

    ``origins`` is one point (broadcast over rays) or an (N, 3) array
    matched to (N, 3) ``dirs``.  Returns (t, ids): parameter of the
    nearest hit (+inf for misses, including hits beyond ``max_range``)
    and the surface id per ray.
    """
    dirs = np.asarray(dirs, dtype=np.float64).reshape(-1, 3)
    origins = np.asarray(origins, dtype=np.float64)
    if origins.shape == (3,):
        origins = np.broadcast_to(origins, dirs.shape)
    origins = origins.reshape(-1, 3)
    if origins.shape != dirs.shape:
        raise ValueError(f"origins {origins.shape} do not match dirs {dirs.shape}")

    best_t = np.full(dirs.shape[0], np.inf)
    best_id = np.full(dirs.shape[0], MISS_ID, dtype=np.int64)
    if ground:
        t = _ray_ground_t(origins, dirs)
        closer = t < best_t
        best_t = np.where(closer, t, best_t)
        best_id = np.where(closer, GROUND_ID, best_id)
    for box in boxes:
        t = _ray_box_t(origins, dirs, box)
        closer = t < best_t
        best_t = np.where(closer, t, best_t)
        best_id = np.where(closer, box.object_id, best_id)

    beyond = best_t > max_range
    best_t = np.where(beyond, np.inf, best_t)
    best_id = np.where(beyond, MISS_ID, best_id)
    return best_t, best_id
