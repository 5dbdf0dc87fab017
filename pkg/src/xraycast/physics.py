"""Polychromatic attenuation model and the CT-to-radiograph simulator.

Two materials only (bone and tissue); air is treated as tissue. Per-bin
spectral weights default to uniform 1/num_bins so an unattenuated ray reads
exactly 1. The display inversion uses the per-image maximum of the raw
attenuation, recomputed on every call; its subgradient is routed to the
argmax pixel (first index wins on ties). No scatter, no noise.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidArgumentError
from .geometry import ProjectionGeometry, ViewPose
from .projector import ThicknessMap, forward_project, forward_project_vjp
from .volume import VoxelVolume


@dataclass(frozen=True)
class SpectrumBin:
    energy_keV: float
    weight: float
    mu_bone_per_mm: float
    mu_tissue_per_mm: float


@dataclass(frozen=True)
class MaterialSpectrum:
    """Attenuation table over energy bins plus the tissue weight knob.

    The effective tissue coefficient everywhere is
    tissue_weight * mu_tissue_per_mm.
    """

    bins: tuple[SpectrumBin, ...]
    tissue_weight: float = 1.0

    def __post_init__(self):
        if len(self.bins) < 1:
            raise InvalidArgumentError("spectrum needs at least one bin")
        for b in self.bins:
            if b.mu_bone_per_mm <= 0 or b.mu_tissue_per_mm <= 0:
                raise InvalidArgumentError("attenuation coefficients must be > 0")
            if b.weight <= 0:
                raise InvalidArgumentError("bin weights must be > 0")
        if self.tissue_weight <= 0:
            raise InvalidArgumentError("tissue_weight must be > 0")

    @property
    def weights(self) -> np.ndarray:
        return np.array([b.weight for b in self.bins])

    @property
    def mu_bone(self) -> np.ndarray:
        return np.array([b.mu_bone_per_mm for b in self.bins])

    @property
    def mu_tissue_eff(self) -> np.ndarray:
        """Tissue coefficients already scaled by tissue_weight."""
        return self.tissue_weight * np.array(
            [b.mu_tissue_per_mm for b in self.bins])

    @classmethod
    def single_bin(cls, mu_bone: float, mu_tissue: float,
                   tissue_weight: float = 1.0,
                   energy_keV: float = 60.0) -> "MaterialSpectrum":
        return cls((SpectrumBin(energy_keV, 1.0, mu_bone, mu_tissue),),
                   tissue_weight)


@dataclass
class Radiograph:
    """Display-convention radiograph: inverted attenuation, >= 0.

    ``atten`` keeps the raw per-pixel attenuation in (0, sum(weights)];
    ``values`` = max(atten) - atten, so the max attainer reads 0.
    """

    atten: np.ndarray
    values: np.ndarray = field(init=False)

    def __post_init__(self):
        self.atten = np.asarray(self.atten, dtype=np.float64)
        if self.atten.ndim != 2:
            raise InvalidArgumentError("attenuation map must be 2D")
        if np.any(self.atten <= 0) or not np.all(np.isfinite(self.atten)):
            raise InvalidArgumentError("attenuation must be finite and > 0")
        self.values = self.atten.max() - self.atten

    @property
    def size_px(self) -> tuple[int, int]:
        nv, nu = self.values.shape
        return nu, nv


def material_thickness(volume: VoxelVolume, mask: VoxelVolume,
                       geometry: ProjectionGeometry, pose: ViewPose
                       ) -> tuple[ThicknessMap, ThicknessMap]:
    """Per-material path integrals: bone = FP(V * M), tissue = FP(V * (1-M))."""
    if mask.dims != volume.dims:
        raise InvalidArgumentError(
            f"mask dims {mask.dims} != volume dims {volume.dims}")
    if mask.values.min() < 0.0 or mask.values.max() > 1.0:
        raise InvalidArgumentError("mask values must lie in [0, 1]")
    bone_vol = VoxelVolume(volume.values * mask.values, volume.spacing_mm,
                           volume.origin_mm)
    tissue_vol = VoxelVolume(volume.values * (1.0 - mask.values),
                             volume.spacing_mm, volume.origin_mm)
    t_bone = forward_project(bone_vol, geometry, pose)
    t_tissue = forward_project(tissue_vol, geometry, pose)
    return t_bone, t_tissue


def attenuate(t_bone: np.ndarray, t_tissue: np.ndarray,
              spectrum: MaterialSpectrum) -> np.ndarray:
    """Raw attenuation: sum_E weight_E * exp(-(mu_b t_b + w mu_t t_t))."""
    tb = np.asarray(getattr(t_bone, "values", t_bone), dtype=np.float64)
    tt = np.asarray(getattr(t_tissue, "values", t_tissue), dtype=np.float64)
    if tb.shape != tt.shape:
        raise InvalidArgumentError("thickness maps must have the same shape")
    if np.any(tb < 0) or np.any(tt < 0):
        raise InvalidArgumentError("thickness must be non-negative")
    expo = (spectrum.mu_bone[:, None, None] * tb[None]
            + spectrum.mu_tissue_eff[:, None, None] * tt[None])
    return (spectrum.weights[:, None, None] * np.exp(-expo)).sum(axis=0)


def ct2xray_from_thickness(t_bone, t_tissue,
                           spectrum: MaterialSpectrum) -> Radiograph:
    """Radiograph from (possibly externally refined) thickness maps."""
    return Radiograph(attenuate(t_bone, t_tissue, spectrum))


def ct2xray(volume: VoxelVolume, mask: VoxelVolume,
            geometry: ProjectionGeometry, pose: ViewPose,
            spectrum: MaterialSpectrum) -> Radiograph:
    """Full simulator: thickness decomposition, attenuation, inversion."""
    t_bone, t_tissue = material_thickness(volume, mask, geometry, pose)
    return ct2xray_from_thickness(t_bone, t_tissue, spectrum)


def drr(volume: VoxelVolume, geometry: ProjectionGeometry,
        pose: ViewPose) -> ThicknessMap:
    """Plain digitally reconstructed radiograph (alias of forward_project)."""
    return forward_project(volume, geometry, pose)


def segment_bone(volume: VoxelVolume, threshold: float) -> VoxelVolume:
    """Binary mask: 1 where value >= threshold."""
    if not np.isfinite(threshold):
        raise InvalidArgumentError("threshold must be finite")
    mask = (volume.values >= threshold).astype(np.float64)
    return VoxelVolume(mask, volume.spacing_mm, volume.origin_mm, kind="mask")


def clip_dynamic_range(radiograph: Radiograph, lo_fraction: float,
                       hi_fraction: float) -> Radiograph:
    """Clamp display values to [lo*max, hi*max], then rescale to [0, max]."""
    if not (0.0 <= lo_fraction < hi_fraction <= 1.0):
        raise InvalidArgumentError(
            f"need 0 <= lo < hi <= 1, got ({lo_fraction}, {hi_fraction})")
    vmax = radiograph.values.max()
    if vmax == 0.0:
        return Radiograph(radiograph.atten.copy())
    lo, hi = lo_fraction * vmax, hi_fraction * vmax
    clipped = np.clip(radiograph.values, lo, hi)
    rescaled = (clipped - lo) / (hi - lo) * vmax
    # Rebuild the attenuation view consistently with the new display values.
    return Radiograph(rescaled.max() - rescaled + radiograph.atten.min())


def _attenuation_cotangent_to_thickness(t_bone: np.ndarray,
                                        t_tissue: np.ndarray,
                                        spectrum: MaterialSpectrum,
                                        atten_cot: np.ndarray):
    """Jacobian of attenuate wrt both thickness maps, applied to a cotangent."""
    expo = (spectrum.mu_bone[:, None, None] * t_bone[None]
            + spectrum.mu_tissue_eff[:, None, None] * t_tissue[None])
    terms = spectrum.weights[:, None, None] * np.exp(-expo)
    g_bone = -(spectrum.mu_bone[:, None, None] * terms).sum(axis=0) * atten_cot
    g_tissue = -(spectrum.mu_tissue_eff[:, None, None] * terms).sum(axis=0) \
        * atten_cot
    return g_bone, g_tissue


def gradient_ct2xray_wrt_volume(volume: VoxelVolume, mask: VoxelVolume,
                                geometry: ProjectionGeometry, pose: ViewPose,
                                spectrum: MaterialSpectrum,
                                output_cotangent: np.ndarray) -> VoxelVolume:
    """Exact reverse-mode gradient of <cotangent, ct2xray(volume)> wrt volume.

    Chain: display inversion (-1 everywhere, +sum routed to the argmax
    pixel), attenuation jacobian per bin, then the projector adjoint through
    both masked branches.
    """
    cot = np.asarray(getattr(output_cotangent, "values", output_cotangent),
                     dtype=np.float64)
    nu, nv = geometry.detector_size_px
    if cot.shape != (nv, nu):
        raise InvalidArgumentError(
            f"cotangent shape {cot.shape} does not match detector")

    t_bone, t_tissue = material_thickness(volume, mask, geometry, pose)
    atten = attenuate(t_bone, t_tissue, spectrum)

    # d(max(A) - A)/dA applied to cot: -cot, plus sum(cot) at the argmax.
    atten_cot = -cot.copy()
    amax = np.unravel_index(np.argmax(atten), atten.shape)
    atten_cot[amax] += cot.sum()

    g_b, g_t = _attenuation_cotangent_to_thickness(
        t_bone.values, t_tissue.values, spectrum, atten_cot)
    grad_bone = forward_project_vjp(volume, geometry, pose,
                                    ThicknessMap(g_b, geometry, pose))
    grad_tissue = forward_project_vjp(volume, geometry, pose,
                                      ThicknessMap(g_t, geometry, pose))
    grad = (mask.values * grad_bone.values
            + (1.0 - mask.values) * grad_tissue.values)
    return VoxelVolume(grad, volume.spacing_mm, volume.origin_mm)
