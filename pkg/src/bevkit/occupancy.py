"""Soft occupancy reconstruction and Gaussian-weighted occupancy loss.

Occupancy grids are built by back-projecting every (camera, pixel, depth
bin) probability into the voxel containing its frustum point and
clamping the per-voxel sums to [0, 1].  Supervision concentrates where
objects are: each object contributes an isotropic Gaussian centered on
its box center, the per-voxel maximum over objects forms the weight
grid, and the loss is the mean absolute difference of the weighted
occupancies.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .depth import DepthBinSpec, DepthDistribution
from .errors import ShapeMismatch, SpecMismatch
from .geometry import CameraModel
from .objects import ObjectState
from .view_transform import frustum_points, scatter_accumulate


@dataclass(frozen=True)
class VoxelSpec:
    """Extent and resolution of a 3D voxel grid in the ego frame."""

    x_min: float
    x_max: float
    y_min: float
    y_max: float
    z_min: float
    z_max: float
    nx: int
    ny: int
    nz: int

    def __post_init__(self) -> None:
        if not (self.x_min < self.x_max and self.y_min < self.y_max and self.z_min < self.z_max):
            raise ValueError("extents must satisfy min < max")
        if self.nx < 1 or self.ny < 1 or self.nz < 1:
            raise ValueError("voxel counts must be positive")

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / self.nx

    @property
    def dy(self) -> float:
        return (self.y_max - self.y_min) / self.ny

    @property
    def dz(self) -> float:
        return (self.z_max - self.z_min) / self.nz

    def centers(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Voxel-center coordinate arrays, each shape (nx, ny, nz)."""
        xs = self.x_min + (np.arange(self.nx, dtype=np.float64) + 0.5) * self.dx
        ys = self.y_min + (np.arange(self.ny, dtype=np.float64) + 0.5) * self.dy
        zs = self.z_min + (np.arange(self.nz, dtype=np.float64) + 0.5) * self.dz
        return np.meshgrid(xs, ys, zs, indexing="ij")


@dataclass(frozen=True, eq=False)
class OccupancyGrid:
    """Soft occupancy per voxel, values in [0, 1], shape (nx, ny, nz)."""

    spec: VoxelSpec
    values: np.ndarray

    def __post_init__(self) -> None:
        v = np.asarray(self.values, dtype=np.float64)
        if v.shape != (self.spec.nx, self.spec.ny, self.spec.nz):
            raise ValueError(f"values shape {v.shape} does not match spec")
        if not np.all(np.isfinite(v)):
            raise ValueError("occupancy must be finite")
        if np.any(v < 0.0) or np.any(v > 1.0):
            raise ValueError("occupancy must lie in [0, 1]")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)


@dataclass(frozen=True, eq=False)
class GaussianWeightGrid:
    """Per-voxel supervision weights in [0, 1], shape (nx, ny, nz).

    Mathematically every weight is positive and reaches 1 only at an
    object center; stored values may underflow to exactly 0 far from all
    objects, and the empty-object grid is all-zero by construction.
    """

    spec: VoxelSpec
    values: np.ndarray

    def __post_init__(self) -> None:
        v = np.asarray(self.values, dtype=np.float64)
        if v.shape != (self.spec.nx, self.spec.ny, self.spec.nz):
            raise ValueError(f"values shape {v.shape} does not match spec")
        if not np.all(np.isfinite(v)):
            raise ValueError("weights must be finite")
        if np.any(v < 0.0) or np.any(v > 1.0):
            raise ValueError("weights must lie in [0, 1]")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)


def occupancy_sums(
    depths: list[tuple[DepthDistribution, CameraModel]],
    spec: VoxelSpec,
    bins: DepthBinSpec = DepthBinSpec(),
) -> np.ndarray:
    """Unclamped per-voxel probability sums, shape (nx, ny, nz).

    Every (pixel, bin) frustum point deposits its probability into the
    voxel containing it; points outside the grid are dropped.  The sums
    are linear in the input probabilities and may exceed 1 where rays
    from several pixels or cameras cross.
    """
    n_cells = spec.nx * spec.ny * spec.nz
    accum = np.zeros(n_cells)
    for depth, cam in depths:
        if (depth.height, depth.width) != (cam.height, cam.width):
            raise ShapeMismatch("distribution does not match the camera image size")
        if depth.n_bins != bins.n_bins:
            raise ShapeMismatch(f"distribution has {depth.n_bins} bins, spec has {bins.n_bins}")
        pts = frustum_points(cam, bins)
        ix = np.floor((pts[..., 0] - spec.x_min) / spec.dx).astype(np.int64)
        iy = np.floor((pts[..., 1] - spec.y_min) / spec.dy).astype(np.int64)
        iz = np.floor((pts[..., 2] - spec.z_min) / spec.dz).astype(np.int64)
        valid = (
            (ix >= 0) & (ix < spec.nx)
            & (iy >= 0) & (iy < spec.ny)
            & (iz >= 0) & (iz < spec.nz)
            & (depth.values > 0.0)
        )
        flat = ((ix * spec.ny + iy) * spec.nz + iz)[valid]
        accum += scatter_accumulate(flat, depth.values[valid], n_cells)
    return accum.reshape(spec.nx, spec.ny, spec.nz)


def build_occupancy(
    depths: list[tuple[DepthDistribution, CameraModel]],
    spec: VoxelSpec,
    bins: DepthBinSpec = DepthBinSpec(),
) -> OccupancyGrid:
    """Soft occupancy: :func:`occupancy_sums` clamped into [0, 1]."""
    return OccupancyGrid(spec, np.clip(occupancy_sums(depths, spec, bins), 0.0, 1.0))


def default_sigma(size: tuple[float, float, float]) -> float:
    """Gaussian radius for a box: diagonal length over 6.

    Places roughly three standard deviations inside the half-diagonal,
    so the weight field decays to near zero at the box shell.
    """
    l, w, h = size
    return math.sqrt(l * l + w * w + h * h) / 6.0


def gaussian_weights(
    objects: list[ObjectState],
    spec: VoxelSpec,
    sigma_rule: Callable[[tuple[float, float, float]], float] = default_sigma,
) -> GaussianWeightGrid:
    """Isotropic Gaussian weight field peaking at each object center.

    Each object contributes exp(-|x - center|^2 / (2 sigma^2)) evaluated
    at voxel centers, with sigma given by ``sigma_rule`` of its box
    size; voxels take the maximum over objects.  An empty object list
    yields an all-zero grid and a warning.
    """
    cx, cy, cz = spec.centers()
    out = np.zeros((spec.nx, spec.ny, spec.nz))
    if not objects:
        warnings.warn("no objects; Gaussian weight grid is all zero", stacklevel=2)
        return GaussianWeightGrid(spec, out)
    for obj in objects:
        sigma = float(sigma_rule(obj.size))
        if sigma <= 0.0:
            raise ValueError(f"sigma must be positive, got {sigma}")
        d2 = (
            (cx - obj.center[0]) ** 2
            + (cy - obj.center[1]) ** 2
            + (cz - obj.center[2]) ** 2
        )
        np.maximum(out, np.exp(-d2 / (2.0 * sigma * sigma)), out=out)
    return GaussianWeightGrid(spec, out)


def occ_recon_loss(
    expert: OccupancyGrid,
    apprentice: OccupancyGrid,
    weights: GaussianWeightGrid,
) -> float:
    """Mean absolute difference of Gaussian-weighted occupancies.

    Computed as mean(|w * expert - w * apprentice|) over all voxels;
    exactly symmetric in its two grids and zero iff they agree wherever
    the weights are nonzero.
    """
    if expert.spec != apprentice.spec or expert.spec != weights.spec:
        raise SpecMismatch("occupancy grids and weights must share one voxel spec")
    w = weights.values
    return float(np.mean(np.abs(w * expert.values - w * apprentice.values)))
