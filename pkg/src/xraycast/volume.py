"""Voxel volumes plus trilinear gather and its exact transpose (scatter).

The grid origin is the center of voxel [0, 0, 0]; points outside the grid
read as zero (air), and scatter drops the out-of-grid part of the weight
mass, which keeps gather/scatter exact adjoints of each other.
Accumulation is always float64 regardless of storage precision.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidArgumentError


@dataclass
class VoxelVolume:
    """3D scalar grid with physical spacing.

    ``values`` has shape (nx, ny, nz); element [ix, iy, iz] sits at
    origin_mm + (ix, iy, iz) * spacing_mm. ``kind`` is "density" or "mask".
    """

    values: np.ndarray
    spacing_mm: tuple[float, float, float]
    origin_mm: tuple[float, float, float] = (0.0, 0.0, 0.0)
    kind: str = "density"

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 3:
            raise InvalidArgumentError("values must be 3-dimensional")
        if not np.all(np.isfinite(self.values)):
            raise InvalidArgumentError("volume contains non-finite values")
        self.spacing_mm = tuple(float(s) for s in self.spacing_mm)
        self.origin_mm = tuple(float(o) for o in self.origin_mm)
        if any(s <= 0 for s in self.spacing_mm):
            raise InvalidArgumentError("spacing must be strictly positive")
        if self.kind not in ("density", "mask"):
            raise InvalidArgumentError(f"unknown volume kind {self.kind!r}")
        if self.kind == "mask":
            if self.values.min() < 0.0 or self.values.max() > 1.0:
                raise InvalidArgumentError("mask values must lie in [0, 1]")

    @property
    def dims(self) -> tuple[int, int, int]:
        return self.values.shape

    def center_mm(self) -> np.ndarray:
        o = np.asarray(self.origin_mm)
        sp = np.asarray(self.spacing_mm)
        n = np.asarray(self.dims)
        return o + (n - 1) / 2.0 * sp

    def bounds_mm(self) -> tuple[np.ndarray, np.ndarray]:
        """Physical bounding box: voxel centers expanded by half a voxel."""
        o = np.asarray(self.origin_mm)
        sp = np.asarray(self.spacing_mm)
        n = np.asarray(self.dims)
        return o - 0.5 * sp, o + (n - 0.5) * sp

    def zeros_like(self) -> "VoxelVolume":
        return VoxelVolume(np.zeros(self.dims), self.spacing_mm,
                           self.origin_mm, kind="density")


def _corner_setup(volume: VoxelVolume, points_mm: np.ndarray):
    """Shared gather/scatter index and weight computation.

    Yields (flat_index, weight, in_bounds) for each of the 8 corners.
    """
    pts = np.atleast_2d(np.asarray(points_mm, dtype=np.float64))
    g = (pts - np.asarray(volume.origin_mm)) / np.asarray(volume.spacing_mm)
    i0 = np.floor(g).astype(np.int64)
    f = g - i0
    nx, ny, nz = volume.dims
    dims = np.array([nx, ny, nz])
    out = []
    for dx in (0, 1):
        wx = f[:, 0] if dx else 1.0 - f[:, 0]
        for dy in (0, 1):
            wy = f[:, 1] if dy else 1.0 - f[:, 1]
            for dz in (0, 1):
                wz = f[:, 2] if dz else 1.0 - f[:, 2]
                idx = i0 + np.array([dx, dy, dz])
                ok = np.all((idx >= 0) & (idx < dims), axis=1)
                flat = (idx[:, 0] * ny + idx[:, 1]) * nz + idx[:, 2]
                out.append((np.where(ok, flat, 0), wx * wy * wz, ok))
    return pts.shape[0], out


def gather_many(volume: VoxelVolume, points_mm: np.ndarray) -> np.ndarray:
    """Trilinear interpolation at many points; outside the grid reads 0."""
    n, corners = _corner_setup(volume, points_mm)
    flat_vals = volume.values.reshape(-1)
    acc = np.zeros(n)
    for flat, w, ok in corners:
        acc += np.where(ok, flat_vals[flat], 0.0) * w
    return acc


def gather(volume: VoxelVolume, point_mm) -> float:
    """Trilinear interpolation of the 8 neighbors of one point."""
    p = np.asarray(point_mm, dtype=float)
    if not np.all(np.isfinite(p)):
        raise InvalidArgumentError("point must be finite")
    return float(gather_many(volume, p[None, :])[0])


def scatter_many(accumulator: VoxelVolume, points_mm: np.ndarray,
                 values: np.ndarray) -> VoxelVolume:
    """Adds values * trilinear weights into the accumulator (transpose of
    gather); weight mass falling outside the grid is dropped."""
    vals = np.atleast_1d(np.asarray(values, dtype=np.float64))
    n, corners = _corner_setup(accumulator, points_mm)
    if vals.shape[0] != n:
        raise InvalidArgumentError("points and values length mismatch")
    flat_acc = accumulator.values.reshape(-1)
    for flat, w, ok in corners:
        np.add.at(flat_acc, flat[ok], (vals * w)[ok])
    return accumulator


def scatter(accumulator: VoxelVolume, point_mm, value: float) -> VoxelVolume:
    """Single-point form of :func:`scatter_many`."""
    p = np.asarray(point_mm, dtype=float)
    if not np.all(np.isfinite(p)):
        raise InvalidArgumentError("point must be finite")
    return scatter_many(accumulator, p[None, :], np.array([value]))
