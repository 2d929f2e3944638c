"""Ego-motion bookkeeping, BEV warping, temporal fusion and the
motion-misalignment error model.

An :class:`EgoTrack` stores the ego pose (global-from-ego) at strictly
increasing timestamps.  :func:`ego_motion` returns the transform that
carries points expressed in the ego frame of a past timestamp into the
ego frame of the current one; applying it to a static-world point held
in both frames is the identity mapping.

The misalignment model quantifies what ego-only warping cannot fix: a
moving object's past position, carried forward by ego motion alone,
misses its true current position by the distance the object itself
traveled.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import MissingObservation, SpecMismatch, UnknownTimestamp
from .geometry import RigidTransform, compose, invert
from .objects import ObjectState
from .view_transform import BEVGrid, bilinear_sample

TIMESTAMP_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class EgoTrack:
    """Ego poses over time; ``poses[i]`` maps ego frame i into the global frame."""

    timestamps: tuple[float, ...]
    poses: tuple[RigidTransform, ...]

    def __post_init__(self) -> None:
        ts = tuple(float(t) for t in self.timestamps)
        if len(ts) != len(self.poses):
            raise ValueError("timestamps and poses must have equal length")
        if len(ts) == 0:
            raise ValueError("track must contain at least one frame")
        if any(b <= a for a, b in zip(ts, ts[1:])):
            raise ValueError("timestamps must be strictly increasing")
        object.__setattr__(self, "timestamps", ts)
        object.__setattr__(self, "poses", tuple(self.poses))

    def __len__(self) -> int:
        return len(self.timestamps)

    def index_of(self, t: float) -> int:
        """Index of the frame at timestamp ``t`` (within ``TIMESTAMP_TOL``)."""
        for i, ts in enumerate(self.timestamps):
            if abs(ts - t) <= TIMESTAMP_TOL:
                return i
        raise UnknownTimestamp(f"timestamp {t} not in track")

    def pose_at(self, t: float) -> RigidTransform:
        return self.poses[self.index_of(t)]


def ego_motion(track: EgoTrack, t_i: float, t_0: float) -> RigidTransform:
    """Transform carrying ego-frame points at ``t_i`` into the ego frame at ``t_0``."""
    return compose(invert(track.pose_at(t_0)), track.pose_at(t_i))


def warp_bev(
    past: BEVGrid,
    motion: RigidTransform,
    out_timestamp: float | None = None,
) -> BEVGrid:
    """Resample a past BEV grid into the current ego frame.

    ``motion`` maps past-frame coordinates into current-frame ones.  Each
    output cell center is mapped back into the past frame (cell centers
    are treated as points on the z = 0 plane) and the past grid is
    sampled there bilinearly with zero padding.  Identity motion copies
    the grid exactly; a translation by a whole number of cells shifts it
    exactly.
    """
    spec = past.spec
    cx, cy = spec.cell_centers()
    centers = np.stack([cx.ravel(), cy.ravel(), np.zeros(cx.size)], axis=1)
    back = invert(motion).apply(centers)
    samples, _ = bilinear_sample(spec, past.values, back[:, 0], back[:, 1])
    values = samples.reshape(spec.nx, spec.ny, past.channels).astype(np.float32)
    ts = past.frame_timestamp if out_timestamp is None else out_timestamp
    return BEVGrid(spec, values, ts)


def fuse_temporal(grids: list[BEVGrid], mode: str = "mean") -> BEVGrid:
    """Fuse time-aligned BEV grids, ordered oldest to newest.

    ``mean`` averages channel-wise; ``concat`` stacks channels in the
    given order.  All grids must share one spec, and for ``mean`` one
    channel count.  The result carries the newest grid's timestamp.
    """
    if not grids:
        raise ValueError("need at least one grid")
    spec = grids[0].spec
    if any(g.spec != spec for g in grids):
        raise SpecMismatch("all grids must share one BEV spec")
    ts = grids[-1].frame_timestamp
    if mode == "mean":
        if any(g.channels != grids[0].channels for g in grids):
            raise SpecMismatch("mean fusion requires equal channel counts")
        stacked = np.stack([g.values.astype(np.float64) for g in grids])
        return BEVGrid(spec, stacked.mean(axis=0).astype(np.float32), ts)
    if mode == "concat":
        return BEVGrid(spec, np.concatenate([g.values for g in grids], axis=2), ts)
    raise ValueError(f"unknown fusion mode {mode!r}")


@dataclass(frozen=True, eq=False)
class MisalignmentReport:
    """Ego-only warping error for one object over a temporal window.

    ``errors[i - 1]`` is the 3-vector gap, in the current ego frame,
    between the object's true current position and its position from
    frame i carried forward by ego motion alone (i = 1 is the nearest
    past frame).  ``e_fusion`` is the mean of the per-frame errors, the
    error of an unweighted temporal fusion of the window.
    """

    object_id: int
    errors: np.ndarray
    e_fusion: np.ndarray
    temporal_length: int

    def __post_init__(self) -> None:
        e = np.asarray(self.errors, dtype=np.float64).reshape(-1, 3)
        f = np.asarray(self.e_fusion, dtype=np.float64).reshape(3)
        e.setflags(write=False)
        f.setflags(write=False)
        object.__setattr__(self, "errors", e)
        object.__setattr__(self, "e_fusion", f)
        if e.shape[0] != self.temporal_length:
            raise ValueError("errors must hold one row per window frame")


def misalignment(
    track: EgoTrack,
    object_states: list[ObjectState],
    window: int,
) -> MisalignmentReport:
    """Measure ego-only warping error for one object over ``window`` frames.

    The current frame is the last frame of the track and the window is
    the ``window`` frames immediately preceding it.  The object must be
    observed at the current frame and at every window frame; otherwise
    :class:`MissingObservation` is raised.  A static object yields
    exactly zero errors; an object moving at constant speed yields
    errors growing linearly with the frame gap.
    """
    if window < 1:
        raise ValueError("window must be at least 1")
    if window >= len(track):
        raise UnknownTimestamp(f"track has {len(track)} frames, window {window} needs more")
    states = sorted(object_states, key=lambda s: s.timestamp)
    ids = {s.object_id for s in states}
    if len(ids) != 1:
        raise ValueError(f"states must describe exactly one object, got ids {sorted(ids)}")

    def state_at(t: float) -> ObjectState:
        for s in states:
            if abs(s.timestamp - t) <= TIMESTAMP_TOL:
                return s
        raise MissingObservation(f"object {ids.copy().pop()} unobserved at t={t}")

    t_0 = track.timestamps[-1]
    current = state_at(t_0)
    errors = np.empty((window, 3))
    for i in range(1, window + 1):
        t_i = track.timestamps[-1 - i]
        past = state_at(t_i)
        warped = ego_motion(track, t_i, t_0).apply(past.center)
        errors[i - 1] = current.center - warped
    return MisalignmentReport(
        object_id=current.object_id,
        errors=errors,
        e_fusion=errors.mean(axis=0),
        temporal_length=window,
    )
