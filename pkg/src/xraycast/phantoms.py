"""Analytic test volumes with closed-form line integrals.

Primitives are spheres, ellipsoids, axis-aligned (elliptic) cylinders, and
boxes; later primitives override earlier ones inside overlaps. Rasterization
uses a plain voxel-center membership test so oracle comparisons only have
to budget for voxelization plus ray quadrature.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidArgumentError
from .volume import VoxelVolume

_SHAPES = ("sphere", "ellipsoid", "cylinder", "box")
_AXES = {"x": 0, "y": 1, "z": 2}


@dataclass(frozen=True)
class Primitive:
    """One solid. ``radii_mm`` are per-axis half-extents; a sphere uses
    radii_mm[0]; a cylinder is elliptic in the plane perpendicular to
    ``axis`` with half-length radii_mm[axis]."""

    shape: str
    center_mm: tuple[float, float, float]
    radii_mm: tuple[float, float, float]
    density: float
    material: str = "tissue"
    axis: str = "z"

    def __post_init__(self):
        if self.shape not in _SHAPES:
            raise InvalidArgumentError(f"unknown shape {self.shape!r}")
        if self.material not in ("bone", "tissue"):
            raise InvalidArgumentError(f"unknown material {self.material!r}")
        if self.axis not in _AXES:
            raise InvalidArgumentError(f"unknown axis {self.axis!r}")
        if any(r <= 0 for r in self.radii_mm):
            raise InvalidArgumentError("radii must be > 0")
        if self.density < 0:
            raise InvalidArgumentError("density must be >= 0")

    def contains(self, pts: np.ndarray) -> np.ndarray:
        """Vectorized membership test for points of shape (n, 3)."""
        c = np.asarray(self.center_mm)
        r = np.asarray(self.radii_mm, dtype=float)
        d = pts - c
        if self.shape == "sphere":
            return (d ** 2).sum(axis=1) <= r[0] ** 2
        if self.shape == "ellipsoid":
            return ((d / r) ** 2).sum(axis=1) <= 1.0
        if self.shape == "box":
            return np.all(np.abs(d) <= r, axis=1)
        ax = _AXES[self.axis]
        perp = [i for i in range(3) if i != ax]
        radial = ((d[:, perp] / r[perp]) ** 2).sum(axis=1) <= 1.0
        return radial & (np.abs(d[:, ax]) <= r[ax])

    def ray_interval(self, origin: np.ndarray, direction: np.ndarray):
        """(t0, t1) of the ray-solid intersection, or None on a miss."""
        c = np.asarray(self.center_mm)
        r = np.asarray(self.radii_mm, dtype=float)
        o = np.asarray(origin, dtype=float) - c
        d = np.asarray(direction, dtype=float)
        if self.shape == "sphere":
            return _quadratic_interval(o, d, np.full(3, r[0]))
        if self.shape == "ellipsoid":
            return _quadratic_interval(o, d, r)
        if self.shape == "box":
            return _slab_interval(o, d, -r, r)
        ax = _AXES[self.axis]
        perp = [i for i in range(3) if i != ax]
        quad = _quadratic_interval_2d(o[perp], d[perp], r[perp])
        if quad is None:
            return None
        slab = _slab_interval(o[[ax]], d[[ax]], np.array([-r[ax]]),
                              np.array([r[ax]]))
        if slab is None:
            return None
        t0 = max(quad[0], slab[0])
        t1 = min(quad[1], slab[1])
        return (t0, t1) if t0 < t1 else None


def _quadratic_interval(o, d, radii):
    os, ds = o / radii, d / radii
    a = float(ds @ ds)
    b = 2.0 * float(os @ ds)
    cc = float(os @ os) - 1.0
    disc = b * b - 4.0 * a * cc
    if a == 0.0 or disc <= 0.0:
        return None
    s = math.sqrt(disc)
    return ((-b - s) / (2 * a), (-b + s) / (2 * a))


def _quadratic_interval_2d(o, d, radii):
    os, ds = o / radii, d / radii
    a = float(ds @ ds)
    if a == 0.0:  # ray parallel to the cylinder axis
        return (-math.inf, math.inf) if float(os @ os) <= 1.0 else None
    b = 2.0 * float(os @ ds)
    cc = float(os @ os) - 1.0
    disc = b * b - 4.0 * a * cc
    if disc <= 0.0:
        return None
    s = math.sqrt(disc)
    return ((-b - s) / (2 * a), (-b + s) / (2 * a))


def _slab_interval(o, d, lo, hi):
    t0, t1 = -math.inf, math.inf
    for i in range(len(o)):
        if d[i] == 0.0:
            if not (lo[i] <= o[i] <= hi[i]):
                return None
            continue
        a = (lo[i] - o[i]) / d[i]
        b = (hi[i] - o[i]) / d[i]
        t0 = max(t0, min(a, b))
        t1 = min(t1, max(a, b))
    return (t0, t1) if t0 < t1 else None


@dataclass(frozen=True)
class AnalyticPhantom:
    primitives: tuple[Primitive, ...] = field(default_factory=tuple)

    def rasterize(self, dims, spacing_mm, origin_mm=None
                  ) -> tuple[VoxelVolume, VoxelVolume]:
        """Voxel-center rasterization to (density volume, bone mask)."""
        dims = tuple(int(n) for n in dims)
        spacing = tuple(float(s) for s in spacing_mm)
        if any(n < 1 for n in dims) or any(s <= 0 for s in spacing):
            raise InvalidArgumentError("dims must be >= 1 and spacing > 0")
        if origin_mm is None:
            # Center the grid on the world origin by default.
            origin_mm = tuple(-(n - 1) / 2.0 * s for n, s in zip(dims, spacing))
        ix, iy, iz = np.meshgrid(*(np.arange(n) for n in dims), indexing="ij")
        pts = (np.stack([ix, iy, iz], axis=-1).reshape(-1, 3)
               * np.asarray(spacing) + np.asarray(origin_mm))
        density = np.zeros(pts.shape[0])
        bone = np.zeros(pts.shape[0])
        for prim in self.primitives:  # later primitives override
            inside = prim.contains(pts)
            density[inside] = prim.density
            bone[inside] = 1.0 if prim.material == "bone" else 0.0
        return (VoxelVolume(density.reshape(dims), spacing, origin_mm),
                VoxelVolume(bone.reshape(dims), spacing, origin_mm,
                            kind="mask"))

    def analytic_line_integral(self, origin_mm, direction
                               ) -> tuple[float, float]:
        """Exact (t_bone, t_tissue) along one ray, resolving overlap by
        interval subtraction: each elementary segment belongs to the last
        primitive covering it."""
        origin = np.asarray(origin_mm, dtype=float)
        d = np.asarray(direction, dtype=float)
        d = d / np.linalg.norm(d)
        intervals = [prim.ray_interval(origin, d) for prim in self.primitives]
        cuts = sorted({t for iv in intervals if iv is not None for t in iv
                       if math.isfinite(t)})
        t_bone = 0.0
        t_tissue = 0.0
        for a, b in zip(cuts[:-1], cuts[1:]):
            mid = 0.5 * (a + b)
            owner = None
            for prim, iv in zip(self.primitives, intervals):
                if iv is not None and iv[0] <= mid <= iv[1]:
                    owner = prim
            if owner is None:
                continue
            contrib = owner.density * (b - a)
            if owner.material == "bone":
                t_bone += contrib
            else:
                t_tissue += contrib
        return t_bone, t_tissue

    def to_json_dict(self) -> dict:
        return {"primitives": [
            {"shape": p.shape, "center_mm": list(p.center_mm),
             "radii_mm": list(p.radii_mm), "density": p.density,
             "material": p.material, "axis": p.axis}
            for p in self.primitives]}

    @classmethod
    def from_json_dict(cls, d: dict) -> "AnalyticPhantom":
        prims = tuple(
            Primitive(shape=p["shape"], center_mm=tuple(p["center_mm"]),
                      radii_mm=tuple(p["radii_mm"]), density=float(p["density"]),
                      material=p.get("material", "tissue"),
                      axis=p.get("axis", "z"))
            for p in d["primitives"])
        return cls(prims)


def preset(name: str) -> AnalyticPhantom:
    """Named phantoms used throughout the test suite."""
    if name == "sphere":
        return AnalyticPhantom((
            Primitive("sphere", (0.0, 0.0, 0.0), (60.0, 60.0, 60.0), 1.0),
        ))
    if name == "shell":
        return AnalyticPhantom((
            Primitive("sphere", (0.0, 0.0, 0.0), (45.0, 45.0, 45.0), 1.0),
            Primitive("sphere", (0.0, 0.0, 0.0), (30.0, 30.0, 30.0), 0.2),
        ))
    if name == "chest_toy":
        # Tissue ellipsoid torso plus six bone rods standing in for ribs.
        rods = tuple(
            Primitive("cylinder", (x, y, 0.0), (4.0, 4.0, 45.0), 1.8,
                      material="bone", axis="z")
            for x, y in [(-35.0, -18.0), (-35.0, 18.0), (0.0, -30.0),
                         (0.0, 30.0), (35.0, -18.0), (35.0, 18.0)])
        return AnalyticPhantom((
            Primitive("ellipsoid", (0.0, 0.0, 0.0), (55.0, 40.0, 58.0), 1.0),
        ) + rods)
    raise InvalidArgumentError(f"unknown phantom preset {name!r}")
