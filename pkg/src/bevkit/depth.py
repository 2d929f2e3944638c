"""LiDAR depth rendering and categorical depth distributions.

A :class:`DepthMap` stores per-pixel forward depth with 0.0 as the "no
measurement" sentinel.  A :class:`DepthDistribution` stores a categorical
distribution over uniform depth bins per pixel; a pixel is either valid
(sums to 1 within ``SUM_TOL``) or all-zero (no prediction).

Pixel convention: a projected point at continuous coordinates (u, v)
lands in the pixel with integer indices (floor(u + 0.5), floor(v + 0.5)),
i.e. nearest-integer with ties rounding up.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import OutOfRange, ShapeMismatch
from .geometry import CameraModel, RigidTransform, project_points

SUM_TOL = 1e-6
NO_MEASUREMENT = 0.0


@dataclass(frozen=True, eq=False)
class DepthMap:
    """Per-pixel forward depth in meters; 0.0 marks pixels with no value."""

    values: np.ndarray

    def __post_init__(self) -> None:
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 2:
            raise ValueError(f"expected a 2D array, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("depth values must be finite")
        if np.any(v < 0.0):
            raise ValueError("depth values must be non-negative")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]

    def coverage_mask(self) -> np.ndarray:
        """Boolean mask of pixels that carry a measurement."""
        return self.values > NO_MEASUREMENT


@dataclass(frozen=True)
class DepthBinSpec:
    """Uniform linear binning of the depth axis over [d_min, d_max)."""

    d_min: float = 1.0
    d_max: float = 60.0
    n_bins: int = 59

    def __post_init__(self) -> None:
        if not (0.0 < self.d_min < self.d_max):
            raise ValueError(f"need 0 < d_min < d_max, got [{self.d_min}, {self.d_max}]")
        if self.n_bins < 2:
            raise ValueError(f"need at least 2 bins, got {self.n_bins}")

    @property
    def bin_width(self) -> float:
        return (self.d_max - self.d_min) / self.n_bins

    def centers(self) -> np.ndarray:
        """Bin-center depths, shape (n_bins,)."""
        return self.d_min + (np.arange(self.n_bins, dtype=np.float64) + 0.5) * self.bin_width


@dataclass(frozen=True, eq=False)
class DepthDistribution:
    """Per-pixel categorical distribution over depth bins, shape (H, W, n_bins).

    Every pixel either sums to 1 within ``SUM_TOL`` or is all-zero.
    """

    values: np.ndarray

    def __post_init__(self) -> None:
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 3:
            raise ValueError(f"expected a 3D array, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("probabilities must be finite")
        if np.any(v < 0.0):
            raise ValueError("probabilities must be non-negative")
        sums = v.sum(axis=2)
        bad = ~((np.abs(sums - 1.0) <= SUM_TOL) | (sums == 0.0))
        if np.any(bad):
            raise ValueError(f"{int(bad.sum())} pixels neither normalized nor all-zero")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def n_bins(self) -> int:
        return self.values.shape[2]

    def valid_mask(self) -> np.ndarray:
        """Boolean mask of pixels that carry a normalized distribution."""
        return np.abs(self.values.sum(axis=2) - 1.0) <= SUM_TOL


class DepthStrategy(str, Enum):
    """How LiDAR and predicted depth combine into the distribution in use."""

    PREDICTED = "predicted"
    LIDAR = "lidar"
    FUSION = "fusion"
    WEIGHTED = "weighted"


def pixel_indices(u: np.ndarray, v: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Continuous pixel coordinates to integer indices (nearest, ties up)."""
    return (
        np.floor(np.asarray(u) + 0.5).astype(np.int64),
        np.floor(np.asarray(v) + 0.5).astype(np.int64),
    )


def render_lidar_depth(
    cam: CameraModel,
    clouds: list[tuple[np.ndarray, RigidTransform]],
) -> DepthMap:
    """Z-buffer point clouds into a sparse per-pixel depth map.

    ``clouds`` pairs each (N, 3) point cloud with the rigid motion that
    carries it into the current ego frame (identity for the current
    sweep).  Points behind the camera or outside the image are dropped;
    where several points land in one pixel the smallest depth wins, so
    the result does not depend on point order.
    """
    zbuf = np.full((cam.height, cam.width), np.inf)
    for points, motion in clouds:
        pts = np.asarray(points, dtype=np.float64).reshape(-1, 3)
        if pts.shape[0] == 0:
            continue
        uv, depth, in_front = project_points(cam, motion.apply(pts))
        px, py = pixel_indices(uv[:, 0], uv[:, 1])
        keep = in_front & (px >= 0) & (px < cam.width) & (py >= 0) & (py < cam.height)
        np.minimum.at(zbuf, (py[keep], px[keep]), depth[keep])
    values = np.where(np.isfinite(zbuf), zbuf, NO_MEASUREMENT)
    return DepthMap(values)


def bin_index(depths, spec: DepthBinSpec) -> tuple[np.ndarray, np.ndarray]:
    """Bin indices for an array of depths plus the in-range mask.

    Depths outside [d_min, d_max) are flagged out of range and their
    index entries are meaningless.  Values a rounding error below d_max
    clamp into the last bin.
    """
    d = np.asarray(depths, dtype=np.float64)
    in_range = (d >= spec.d_min) & (d < spec.d_max)
    idx = np.floor((d - spec.d_min) / spec.bin_width).astype(np.int64)
    idx = np.clip(idx, 0, spec.n_bins - 1)
    return idx, in_range


def depth_to_onehot(d: float, spec: DepthBinSpec) -> np.ndarray:
    """One-hot bin vector for a single depth; raises OutOfRange outside bins."""
    idx, ok = bin_index(np.array([d]), spec)
    if not ok[0]:
        raise OutOfRange(f"depth {d} outside [{spec.d_min}, {spec.d_max})")
    onehot = np.zeros(spec.n_bins)
    onehot[idx[0]] = 1.0
    return onehot


def fuse_depth(
    lidar: DepthMap,
    predicted: DepthDistribution,
    strategy: DepthStrategy = DepthStrategy.FUSION,
    w: float = 0.5,
    spec: DepthBinSpec = DepthBinSpec(),
) -> DepthDistribution:
    """Combine a sparse LiDAR depth map with a dense predicted distribution.

    A pixel counts as LiDAR-covered when it has a measurement inside
    [d_min, d_max); out-of-range returns are treated as uncovered.  The
    strategies behave as follows on covered / uncovered pixels:

      PREDICTED  predicted / predicted (LiDAR ignored)
      LIDAR      one-hot   / all-zero
      FUSION     one-hot   / predicted
      WEIGHTED   w * one-hot + (1 - w) * predicted, renormalized / predicted

    The WEIGHTED renormalization is a no-op when the predicted pixel is
    itself normalized; it guards the all-zero predicted case.
    """
    if (lidar.height, lidar.width) != (predicted.height, predicted.width):
        raise ShapeMismatch(
            f"lidar {lidar.values.shape} vs predicted {predicted.values.shape[:2]}"
        )
    if predicted.n_bins != spec.n_bins:
        raise ShapeMismatch(f"predicted has {predicted.n_bins} bins, spec has {spec.n_bins}")
    if not (0.0 <= w <= 1.0):
        raise OutOfRange(f"weight must lie in [0, 1], got {w}")
    strategy = DepthStrategy(strategy)

    if strategy is DepthStrategy.PREDICTED:
        return DepthDistribution(predicted.values.copy())

    idx, in_range = bin_index(lidar.values, spec)
    covered = lidar.coverage_mask() & in_range
    rows, cols = np.nonzero(covered)

    onehot = np.zeros((lidar.height, lidar.width, spec.n_bins))
    onehot[rows, cols, idx[rows, cols]] = 1.0

    if strategy is DepthStrategy.LIDAR:
        return DepthDistribution(onehot)

    out = predicted.values.copy()
    if strategy is DepthStrategy.FUSION:
        out[covered] = onehot[covered]
        return DepthDistribution(out)

    mixed = w * onehot[covered] + (1.0 - w) * out[covered]
    sums = mixed.sum(axis=1, keepdims=True)
    nonzero = sums[:, 0] > 0.0
    mixed[nonzero] /= sums[nonzero]
    out[covered] = mixed
    return DepthDistribution(out)
