"""View poses, beam geometry, and per-pixel ray generation.

Conventions (fixed here so poses are reproducible):
  * the viewing axis is +Y (source -> detector), the vertical axis is +Z,
    the lateral axis is +X;
  * azimuth rotates about +Z first, elevation then rotates about the
    already-rotated +X (intrinsic order), i.e. R = Rz(azimuth) @ Rx(elevation);
  * the rotation pivot is the volume center, applied where the volume
    bounds are known (see :func:`pose_matrix_about`).

All angles are degrees, all lengths millimeters.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidArgumentError


@dataclass(frozen=True)
class ViewPose:
    """Rigid view transform: azimuth/elevation rotation plus translation."""

    azimuth_deg: float
    elevation_deg: float
    translation_mm: tuple[float, float, float] = (0.0, 0.0, 0.0)
    matrix: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        az = math.radians(self.azimuth_deg)
        el = math.radians(self.elevation_deg)
        ca, sa = math.cos(az), math.sin(az)
        ce, se = math.cos(el), math.sin(el)
        rz = np.array([[ca, -sa, 0.0], [sa, ca, 0.0], [0.0, 0.0, 1.0]])
        rx = np.array([[1.0, 0.0, 0.0], [0.0, ce, -se], [0.0, se, ce]])
        m = np.eye(4)
        m[:3, :3] = rz @ rx
        m[:3, 3] = np.asarray(self.translation_mm, dtype=float)
        m.flags.writeable = False
        object.__setattr__(self, "matrix", m)

    def inverse_matrix(self) -> np.ndarray:
        r = self.matrix[:3, :3]
        inv = np.eye(4)
        inv[:3, :3] = r.T
        inv[:3, 3] = -r.T @ self.matrix[:3, 3]
        return inv


def make_pose(azimuth_deg: float, elevation_deg: float,
              translation_mm=(0.0, 0.0, 0.0)) -> ViewPose:
    """Build a view pose; rejects non-finite inputs."""
    vals = [azimuth_deg, elevation_deg, *translation_mm]
    if not all(math.isfinite(float(v)) for v in vals):
        raise InvalidArgumentError("pose parameters must be finite")
    if len(tuple(translation_mm)) != 3:
        raise InvalidArgumentError("translation_mm must have 3 components")
    return ViewPose(float(azimuth_deg), float(elevation_deg),
                    tuple(float(v) for v in translation_mm))


def pose_matrix_about(pose: ViewPose, center_mm) -> np.ndarray:
    """4x4 matrix of ``pose`` with the rotation pivot moved to ``center_mm``."""
    c = np.asarray(center_mm, dtype=float)
    t_fwd = np.eye(4)
    t_fwd[:3, 3] = c
    t_back = np.eye(4)
    t_back[:3, 3] = -c
    return t_fwd @ pose.matrix @ t_back


@dataclass(frozen=True)
class ProjectionGeometry:
    """Source/detector layout defining the rays and the sample step."""

    mode: str = "cone_beam"  # or "parallel_beam"
    source_to_axis_mm: float = 1000.0
    axis_to_detector_mm: float = 500.0
    detector_size_px: tuple[int, int] = (256, 256)  # (nu, nv)
    detector_pitch_mm: tuple[float, float] = (2.0, 2.0)
    step_mm: float = 0.5

    def __post_init__(self):
        if self.mode not in ("cone_beam", "parallel_beam"):
            raise InvalidArgumentError(f"unknown mode {self.mode!r}")
        if self.source_to_axis_mm <= 0 or self.axis_to_detector_mm <= 0:
            raise InvalidArgumentError("source/detector distances must be > 0")
        if self.step_mm <= 0:
            raise InvalidArgumentError("step_mm must be > 0")
        if any(int(n) < 1 for n in self.detector_size_px):
            raise InvalidArgumentError("detector_size_px must be >= 1")
        if any(p <= 0 for p in self.detector_pitch_mm):
            raise InvalidArgumentError("detector_pitch_mm must be > 0")
        object.__setattr__(self, "detector_size_px",
                           tuple(int(n) for n in self.detector_size_px))
        object.__setattr__(self, "detector_pitch_mm",
                           tuple(float(p) for p in self.detector_pitch_mm))

    def to_json_dict(self) -> dict:
        return {
            "mode": self.mode,
            "source_to_axis_mm": self.source_to_axis_mm,
            "axis_to_detector_mm": self.axis_to_detector_mm,
            "detector_size_px": list(self.detector_size_px),
            "detector_pitch_mm": list(self.detector_pitch_mm),
            "step_mm": self.step_mm,
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "ProjectionGeometry":
        return cls(
            mode=d["mode"],
            source_to_axis_mm=float(d["source_to_axis_mm"]),
            axis_to_detector_mm=float(d["axis_to_detector_mm"]),
            detector_size_px=tuple(d["detector_size_px"]),
            detector_pitch_mm=tuple(d["detector_pitch_mm"]),
            step_mm=float(d["step_mm"]),
        )


@dataclass(frozen=True)
class Ray:
    """One ray, clipped to a volume's bounding box.

    ``entry_t``/``exit_t`` parametrize the in-volume segment as
    origin + t * direction; ``hit`` is False when the box is missed.
    """

    origin_mm: np.ndarray
    direction: np.ndarray
    entry_t: float
    exit_t: float
    hit: bool


def _slab_clip(origins: np.ndarray, dirs: np.ndarray,
               lo: np.ndarray, hi: np.ndarray):
    """Vectorized slab test. Returns (entry_t, exit_t, hit) per ray."""
    with np.errstate(divide="ignore", invalid="ignore"):
        inv = 1.0 / dirs
        t1 = (lo[None, :] - origins) * inv
        t2 = (hi[None, :] - origins) * inv
    # Parallel-to-slab axes: inside -> (-inf, +inf), outside -> miss.
    par = dirs == 0.0
    inside = (origins >= lo[None, :]) & (origins <= hi[None, :])
    tmin = np.where(par, np.where(inside, -np.inf, np.inf), np.minimum(t1, t2))
    tmax = np.where(par, np.where(inside, np.inf, -np.inf), np.maximum(t1, t2))
    entry = tmin.max(axis=1)
    exit_ = tmax.min(axis=1)
    hit = entry <= exit_
    return entry, exit_, hit


def ray_bundle(geometry: ProjectionGeometry, pose: ViewPose,
               volume_bounds) -> tuple[np.ndarray, np.ndarray, np.ndarray,
                                       np.ndarray, np.ndarray]:
    """All detector rays under ``pose``, clipped to ``volume_bounds``.

    Returns (origins, directions, entry_t, exit_t, hit) with leading
    dimension nu*nv in v-major order (pixel (u, v) at index v*nu + u).
    """
    lo = np.asarray(volume_bounds[0], dtype=float)
    hi = np.asarray(volume_bounds[1], dtype=float)
    center = 0.5 * (lo + hi)
    nu, nv = geometry.detector_size_px
    pu, pv = geometry.detector_pitch_mm

    u = (np.arange(nu) - (nu - 1) / 2.0) * pu
    v = (np.arange(nv) - (nv - 1) / 2.0) * pv
    uu, vv = np.meshgrid(u, v)  # shape (nv, nu)
    uu = uu.ravel()
    vv = vv.ravel()

    # Identity-pose detector pixel centers: u along +X, v along +Z.
    pix = np.empty((uu.size, 3))
    pix[:, 0] = center[0] + uu
    pix[:, 1] = center[1] + geometry.axis_to_detector_mm
    pix[:, 2] = center[2] + vv

    if geometry.mode == "cone_beam":
        src = center - np.array([0.0, geometry.source_to_axis_mm, 0.0])
        origins = np.broadcast_to(src, pix.shape).copy()
        dirs = pix - origins
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    else:
        origins = pix.copy()
        origins[:, 1] = center[1]  # pull back to the axis plane
        dirs = np.broadcast_to(np.array([0.0, 1.0, 0.0]), pix.shape).copy()

    m = pose_matrix_about(pose, center)
    origins = origins @ m[:3, :3].T + m[:3, 3]
    dirs = dirs @ m[:3, :3].T

    entry, exit_, hit = _slab_clip(origins, dirs, lo, hi)
    return origins, dirs, entry, exit_, hit


def generate_ray(geometry: ProjectionGeometry, pose: ViewPose,
                 pixel_xy, volume_bounds) -> Ray:
    """Single-pixel form of :func:`ray_bundle`."""
    u, v = int(pixel_xy[0]), int(pixel_xy[1])
    nu, nv = geometry.detector_size_px
    if not (0 <= u < nu and 0 <= v < nv):
        raise InvalidArgumentError(
            f"pixel {pixel_xy} outside detector {geometry.detector_size_px}")
    origins, dirs, entry, exit_, hit = ray_bundle(geometry, pose, volume_bounds)
    i = v * nu + u
    return Ray(origin_mm=origins[i], direction=dirs[i],
               entry_t=float(entry[i]), exit_t=float(exit_[i]),
               hit=bool(hit[i]))
