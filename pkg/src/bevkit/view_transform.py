"""Lift-splat view transform: image features plus depth into a BEV grid.

Each pixel is lifted to one 3D point per depth bin (at the bin-center
depth along the pixel's ray) and its feature vector, weighted by that
bin's probability, is scatter-added into the BEV cell containing the
point.  The z coordinate is collapsed by summation.  Accumulation runs
in double precision; grids store single precision.

BEV indexing: cell (ix, iy) covers [x_min + ix*dx, x_min + (ix+1)*dx) by
[y_min + iy*dy, y_min + (iy+1)*dy); its center is at
(x_min + (ix+0.5)*dx, y_min + (iy+0.5)*dy).  Grid values have shape
(nx, ny, channels).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .depth import DepthBinSpec, DepthDistribution
from .errors import ShapeMismatch
from .geometry import CameraModel, backproject


@dataclass(frozen=True)
class BEVSpec:
    """Extent and resolution of a bird's-eye-view grid in the ego x-y plane."""

    x_min: float
    x_max: float
    y_min: float
    y_max: float
    nx: int
    ny: int

    def __post_init__(self) -> None:
        if not (self.x_min < self.x_max and self.y_min < self.y_max):
            raise ValueError("extents must satisfy min < max")
        if self.nx < 1 or self.ny < 1:
            raise ValueError("cell counts must be positive")

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / self.nx

    @property
    def dy(self) -> float:
        return (self.y_max - self.y_min) / self.ny

    def cell_centers(self) -> tuple[np.ndarray, np.ndarray]:
        """Meshgrid arrays of cell-center x and y, each shape (nx, ny)."""
        xs = self.x_min + (np.arange(self.nx, dtype=np.float64) + 0.5) * self.dx
        ys = self.y_min + (np.arange(self.ny, dtype=np.float64) + 0.5) * self.dy
        return np.meshgrid(xs, ys, indexing="ij")


@dataclass(frozen=True, eq=False)
class FeatureMap:
    """Dense per-pixel feature vectors, shape (H, W, C)."""

    values: np.ndarray

    def __post_init__(self) -> None:
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 3:
            raise ValueError(f"expected (H, W, C), got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("features must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def channels(self) -> int:
        return self.values.shape[2]


@dataclass(frozen=True, eq=False)
class BEVGrid:
    """A bird's-eye-view feature grid, shape (nx, ny, C), float32 values."""

    spec: BEVSpec
    values: np.ndarray
    frame_timestamp: float = 0.0

    def __post_init__(self) -> None:
        v = np.asarray(self.values, dtype=np.float32)
        if v.ndim != 3 or v.shape[:2] != (self.spec.nx, self.spec.ny):
            raise ValueError(
                f"values shape {v.shape} does not match spec ({self.spec.nx}, {self.spec.ny}, C)"
            )
        if not np.all(np.isfinite(v)):
            raise ValueError("grid values must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def channels(self) -> int:
        return self.values.shape[2]


def frustum_points(cam: CameraModel, bins: DepthBinSpec) -> np.ndarray:
    """Ego-frame 3D points for every (pixel, depth bin), shape (H, W, D, 3).

    Pixel (u, v) contributes points along the ray through integer pixel
    coordinates (u, v) at each bin-center depth.
    """
    us = np.arange(cam.width, dtype=np.float64)
    vs = np.arange(cam.height, dtype=np.float64)
    centers = bins.centers()
    # Camera-frame rays through each pixel, scaled by bin-center depth.
    xdir = (us - cam.cx) / cam.fx
    ydir = (vs - cam.cy) / cam.fy
    pts = np.empty((cam.height, cam.width, bins.n_bins, 3))
    pts[..., 0] = xdir[None, :, None] * centers[None, None, :]
    pts[..., 1] = ydir[:, None, None] * centers[None, None, :]
    pts[..., 2] = centers[None, None, :]
    ego_from_cam = cam.ego_from_camera()
    return ego_from_cam.apply(pts.reshape(-1, 3)).reshape(pts.shape)


def scatter_accumulate(cell_index: np.ndarray, weights: np.ndarray, n_cells: int) -> np.ndarray:
    """Sum ``weights`` into ``n_cells`` buckets in double precision.

    Accumulation is a plain commutative sum, so any reordering of the
    (index, weight) pairs changes the result only by float rounding.
    """
    return np.bincount(cell_index, weights=weights, minlength=n_cells)


def lift_splat(
    feat: FeatureMap,
    depth: DepthDistribution,
    cam: CameraModel,
    spec: BEVSpec,
    bins: DepthBinSpec = DepthBinSpec(),
    z_min: float | None = None,
    z_max: float | None = None,
    frame_timestamp: float = 0.0,
) -> BEVGrid:
    """Splat per-pixel features into a BEV grid weighted by depth probability.

    Frustum points outside the grid extent (or outside the optional
    [z_min, z_max] crop) are dropped.  Every surviving (pixel, bin) point
    adds probability * feature to its cell; the vertical axis collapses
    by summation.
    """
    if (feat.height, feat.width) != (depth.height, depth.width):
        raise ShapeMismatch(f"features {feat.values.shape[:2]} vs depth {depth.values.shape[:2]}")
    if (feat.height, feat.width) != (cam.height, cam.width):
        raise ShapeMismatch("feature map does not match the camera image size")
    if depth.n_bins != bins.n_bins:
        raise ShapeMismatch(f"distribution has {depth.n_bins} bins, spec has {bins.n_bins}")

    pts = frustum_points(cam, bins)
    ix = np.floor((pts[..., 0] - spec.x_min) / spec.dx).astype(np.int64)
    iy = np.floor((pts[..., 1] - spec.y_min) / spec.dy).astype(np.int64)
    valid = (ix >= 0) & (ix < spec.nx) & (iy >= 0) & (iy < spec.ny) & (depth.values > 0.0)
    if z_min is not None:
        valid &= pts[..., 2] >= z_min
    if z_max is not None:
        valid &= pts[..., 2] <= z_max

    flat_cell = (ix * spec.ny + iy)[valid]
    prob = depth.values[valid]
    # (H, W, D) validity collapses to per-contribution rows; recover the
    # pixel of each contribution to look up its feature vector.
    pix_row, pix_col, _ = np.nonzero(valid)

    n_cells = spec.nx * spec.ny
    accum = np.empty((n_cells, feat.channels))
    for c in range(feat.channels):
        accum[:, c] = scatter_accumulate(flat_cell, prob * feat.values[pix_row, pix_col, c], n_cells)
    return BEVGrid(spec, accum.reshape(spec.nx, spec.ny, feat.channels).astype(np.float32),
                   frame_timestamp)


def lift_splat_oracle(
    feat: FeatureMap,
    depth: DepthDistribution,
    cam: CameraModel,
    spec: BEVSpec,
    bins: DepthBinSpec = DepthBinSpec(),
    z_min: float | None = None,
    z_max: float | None = None,
    frame_timestamp: float = 0.0,
) -> BEVGrid:
    """Reference lift-splat: an explicit loop over pixels and bins.

    Semantically identical to :func:`lift_splat` with no batching or
    vectorization tricks, kept as an independently-auditable baseline.
    Deterministic: the same inputs produce bit-identical output.
    """
    if (feat.height, feat.width) != (depth.height, depth.width):
        raise ShapeMismatch(f"features {feat.values.shape[:2]} vs depth {depth.values.shape[:2]}")
    if (feat.height, feat.width) != (cam.height, cam.width):
        raise ShapeMismatch("feature map does not match the camera image size")
    if depth.n_bins != bins.n_bins:
        raise ShapeMismatch(f"distribution has {depth.n_bins} bins, spec has {bins.n_bins}")

    centers = bins.centers()
    accum = np.zeros((spec.nx, spec.ny, feat.channels))
    for v in range(cam.height):
        for u in range(cam.width):
            for k in range(bins.n_bins):
                p = depth.values[v, u, k]
                if p <= 0.0:
                    continue
                point = backproject(cam, float(u), float(v), float(centers[k]))
                if z_min is not None and point[2] < z_min:
                    continue
                if z_max is not None and point[2] > z_max:
                    continue
                ix = int(np.floor((point[0] - spec.x_min) / spec.dx))
                iy = int(np.floor((point[1] - spec.y_min) / spec.dy))
                if 0 <= ix < spec.nx and 0 <= iy < spec.ny:
                    accum[ix, iy, :] += p * feat.values[v, u, :]
    return BEVGrid(spec, accum.astype(np.float32), frame_timestamp)


def bilinear_sample(
    spec: BEVSpec,
    values: np.ndarray,
    xs: np.ndarray,
    ys: np.ndarray,
) -> tuple[np.ndarray, np.ndarray]:
    """Bilinearly sample a (nx, ny, C) grid at continuous ego coordinates.

    Sampling is anchored at cell centers: a query exactly on a cell
    center returns that cell's vector exactly.  Cells outside the grid
    contribute zero (zero padding).  Returns ``(samples, inside)`` where
    ``samples`` is (N, C) float64 and ``inside`` flags queries within the
    grid extent.
    """
    xs = np.asarray(xs, dtype=np.float64).ravel()
    ys = np.asarray(ys, dtype=np.float64).ravel()
    vals = np.asarray(values, dtype=np.float64)
    nx, ny, nc = vals.shape

    gx = (xs - spec.x_min) / spec.dx - 0.5
    gy = (ys - spec.y_min) / spec.dy - 0.5
    x0 = np.floor(gx).astype(np.int64)
    y0 = np.floor(gy).astype(np.int64)
    fx = gx - x0
    fy = gy - y0

    out = np.zeros((xs.shape[0], nc))
    for ox, oy, w in (
        (0, 0, (1.0 - fx) * (1.0 - fy)),
        (1, 0, fx * (1.0 - fy)),
        (0, 1, (1.0 - fx) * fy),
        (1, 1, fx * fy),
    ):
        cx = x0 + ox
        cy = y0 + oy
        ok = (cx >= 0) & (cx < nx) & (cy >= 0) & (cy < ny)
        if np.any(ok):
            out[ok] += w[ok, None] * vals[cx[ok], cy[ok], :]

    inside = (xs >= spec.x_min) & (xs < spec.x_max) & (ys >= spec.y_min) & (ys < spec.y_max)
    return out, inside
