"""xraycast: differentiable X-ray projection and radiograph physics.

Core surface: cone/parallel-beam ray casting (forward projection), its
matched adjoint for gradients, a single-image backprojector, a two-material
polychromatic radiograph simulator with exact reverse-mode gradients, the
reverse-simulation bone-suppression algorithm, analytic phantom oracles,
PSNR/SSIM metrics, and bit-exact file I/O.
"""

from .errors import (DegenerateInputError, InvalidArgumentError, ParseError,
                     SchemaError, XraycastError)
from .geometry import (ProjectionGeometry, Ray, ViewPose, generate_ray,
                       make_pose, pose_matrix_about, ray_bundle)
from .io_formats import (default_spectrum_path, geometry_hash, read_geometry,
                         read_phantom, read_radiograph, read_spectrum,
                         read_thickness_map, read_volume, write_geometry,
                         write_phantom, write_radiograph, write_spectrum,
                         write_thickness_map, write_volume)
from .metrics import MetricReport, compare, psnr, ssim
from .phantoms import AnalyticPhantom, Primitive, preset
from .physics import (MaterialSpectrum, Radiograph, SpectrumBin, attenuate,
                      clip_dynamic_range, ct2xray, ct2xray_from_thickness,
                      drr, gradient_ct2xray_wrt_volume, material_thickness,
                      segment_bone)
from .projector import (ThicknessMap, backproject_single, forward_project,
                        forward_project_vjp)
from .suppression import (SuppressionConfig, SuppressionResult,
                          decomposition_weights, normalize_to_attenuation,
                          reconstruct_tissue, suppress)
from .volume import VoxelVolume, gather, gather_many, scatter, scatter_many

__version__ = "0.1.0"

__all__ = [
    "AnalyticPhantom", "DegenerateInputError", "InvalidArgumentError",
    "MaterialSpectrum", "MetricReport", "ParseError", "Primitive",
    "ProjectionGeometry", "Radiograph", "Ray", "SchemaError", "SpectrumBin",
    "SuppressionConfig", "SuppressionResult", "ThicknessMap", "ViewPose",
    "VoxelVolume", "XraycastError", "attenuate", "backproject_single",
    "clip_dynamic_range", "compare", "ct2xray", "ct2xray_from_thickness",
    "decomposition_weights", "default_spectrum_path", "drr",
    "forward_project", "forward_project_vjp", "gather", "gather_many",
    "generate_ray", "geometry_hash", "gradient_ct2xray_wrt_volume",
    "make_pose", "material_thickness", "normalize_to_attenuation",
    "pose_matrix_about", "preset", "psnr", "ray_bundle", "read_geometry",
    "read_phantom", "read_radiograph", "read_spectrum", "read_thickness_map",
    "read_volume", "reconstruct_tissue", "scatter", "scatter_many",
    "segment_bone", "ssim", "suppress", "write_geometry", "write_phantom",
    "write_radiograph", "write_spectrum", "write_thickness_map",
    "write_volume",
]
