"""Ground-truth object state shared by the temporal and supervision modules."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True, eq=False)
class ObjectState:
    """One object's ground-truth state at a single frame.

    ``center`` is the box center in the ego frame of ``timestamp``.
    ``size`` is (length, width, height) in meters, all positive.
    ``velocity`` is the global-frame velocity in m/s.  ``yaw`` is the box
    heading in the global frame (boxes rotate about z only).
    """

    object_id: int
    timestamp: float
    center: np.ndarray
    size: tuple[float, float, float]
    velocity: np.ndarray
    yaw: float = 0.0

    def __post_init__(self) -> None:
        center = np.asarray(self.center, dtype=np.float64).reshape(3)
        velocity = np.asarray(self.velocity, dtype=np.float64).reshape(3)
        center.setflags(write=False)
        velocity.setflags(write=False)
        object.__setattr__(self, "center", center)
        object.__setattr__(self, "velocity", velocity)
        object.__setattr__(self, "size", tuple(float(s) for s in self.size))
        if not all(s > 0.0 for s in self.size):
            raise ValueError(f"box dimensions must be positive, got {self.size}")
