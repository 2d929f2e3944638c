"""Trajectory-based feature distillation between two BEV grids.

Ground-truth object positions from the current and past frames are
carried into the current ego frame (past positions via ego motion),
forming per-object trajectories.  Both the expert and the apprentice
BEV grids are sampled bilinearly at every trajectory point, each sample
is normalized to unit length, and the loss is the mean squared L2
distance between the paired unit vectors.  Sampling the same positions
in both grids keeps the comparison anchored to where objects actually
are, including where motion smears temporally fused features.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import MissingState, SpecMismatch
from .objects import ObjectState
from .temporal import TIMESTAMP_TOL, EgoTrack, ego_motion
from .view_transform import BEVGrid, bilinear_sample

DEGENERATE_NORM = 1e-12
DEFAULT_TRAJECTORY_LENGTH = 5


@dataclass(frozen=True, eq=False)
class Trajectory:
    """One object's positions in the current ego frame, oldest first.

    ``points[k]`` is the position observed at ``timestamps[k]`` after
    warping into the current frame; the last entry is the current-frame
    position itself.  At most one point per source timestamp.
    """

    object_id: int
    points: np.ndarray
    timestamps: tuple[float, ...]

    def __post_init__(self) -> None:
        pts = np.asarray(self.points, dtype=np.float64).reshape(-1, 3)
        ts = tuple(float(t) for t in self.timestamps)
        if pts.shape[0] != len(ts):
            raise ValueError("one timestamp per point required")
        if len(set(ts)) != len(ts):
            raise ValueError("duplicate source timestamps")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "timestamps", ts)

    def __len__(self) -> int:
        return self.points.shape[0]


def build_trajectory(
    states: list[ObjectState],
    track: EgoTrack,
    t_0: float,
    n_points: int = DEFAULT_TRAJECTORY_LENGTH,
) -> Trajectory:
    """Collect an object's last ``n_points`` positions in the current frame.

    The trajectory covers the track frames ending at ``t_0``, oldest
    first; the current-frame position is always the final point, so
    ``n_points`` counts it (length 1 keeps only the current position).
    Each past position is mapped by its ego motion into the frame of
    ``t_0``.  Raises :class:`MissingState` when the object lacks a state
    at any required frame.
    """
    if n_points < 1:
        raise ValueError("a trajectory needs at least one point")
    idx0 = track.index_of(t_0)
    if idx0 + 1 < n_points:
        raise MissingState(
            f"track provides {idx0 + 1} frames up to t={t_0}, need {n_points}"
        )
    ids = {s.object_id for s in states}
    if len(ids) != 1:
        raise ValueError(f"states must describe exactly one object, got ids {sorted(ids)}")

    by_time = {}
    for s in states:
        by_time[s.timestamp] = s

    def state_at(t: float) -> ObjectState:
        for ts, s in by_time.items():
            if abs(ts - t) <= TIMESTAMP_TOL:
                return s
        raise MissingState(f"object {ids.copy().pop()} has no state at t={t}")

    points = np.empty((n_points, 3))
    stamps = []
    for k in range(n_points):
        t_k = track.timestamps[idx0 - (n_points - 1) + k]
        s = state_at(t_k)
        points[k] = ego_motion(track, t_k, t_0).apply(s.center)
        stamps.append(t_k)
    return Trajectory(object_id=ids.pop(), points=points, timestamps=tuple(stamps))


def sample_bev(grid: BEVGrid, point) -> tuple[np.ndarray, bool]:
    """Bilinearly sample a BEV grid at one 3D point (z ignored).

    Returns ``(vector, inside)``; ``inside`` is False when the point
    falls outside the grid extent, in which case the vector is zero.
    """
    p = np.asarray(point, dtype=np.float64).reshape(3)
    samples, inside = bilinear_sample(grid.spec, grid.values, p[0:1], p[1:2])
    return samples[0], bool(inside[0])


def normalize_feature(f) -> tuple[np.ndarray, bool]:
    """Scale a vector to unit L2 norm.

    A vector with norm below ``DEGENERATE_NORM`` maps to the zero vector
    and is flagged degenerate (second element False).
    """
    v = np.asarray(f, dtype=np.float64)
    n = float(np.linalg.norm(v))
    if n <= DEGENERATE_NORM:
        return np.zeros_like(v), False
    return v / n, True


def traj_distill_loss(
    apprentice: BEVGrid,
    expert: BEVGrid,
    trajectories: list[Trajectory],
    squared: bool = True,
) -> float:
    """Mean distance between normalized expert and apprentice samples.

    Both grids are sampled at every trajectory point.  A point counts as
    valid when it lies inside the grid extent and the expert sample is
    non-degenerate; the loss averages over valid points only.  With
    ``squared`` (the default) each term is the squared L2 distance
    between the unit vectors, otherwise the plain L2 distance.

    Invariant under rescaling of either grid by a positive constant.
    Returns 0.0 (with a warning) when no valid point exists.
    """
    if apprentice.spec != expert.spec:
        raise SpecMismatch("apprentice and expert grids use different BEV specs")
    if apprentice.channels != expert.channels:
        raise SpecMismatch("apprentice and expert grids have different channel counts")

    total = 0.0
    n_valid = 0
    for traj in trajectories:
        e_samples, inside = bilinear_sample(
            expert.spec, expert.values, traj.points[:, 0], traj.points[:, 1]
        )
        a_samples, _ = bilinear_sample(
            apprentice.spec, apprentice.values, traj.points[:, 0], traj.points[:, 1]
        )
        for k in range(len(traj)):
            if not inside[k]:
                continue
            e_hat, ok = normalize_feature(e_samples[k])
            if not ok:
                continue
            a_hat, _ = normalize_feature(a_samples[k])
            diff = a_hat - e_hat
            d2 = float(diff @ diff)
            total += d2 if squared else np.sqrt(d2)
            n_valid += 1
    if n_valid == 0:
        warnings.warn("no valid trajectory samples; loss is 0", stacklevel=2)
        return 0.0
    return total / n_valid
