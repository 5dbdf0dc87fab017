"""Readers/writers: raw little-endian float32 arrays + JSON sidecars.

Every array file ``foo.raw`` pairs with ``foo.json`` holding the metadata;
either path can be handed to a reader. Round trips are bit-exact at float32
and all readers return structured errors instead of crashing on bad bytes.
schema_version is 1 and frozen by tests.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import ParseError, SchemaError
from .geometry import ProjectionGeometry, ViewPose, make_pose
from .phantoms import AnalyticPhantom
from .physics import MaterialSpectrum, Radiograph, SpectrumBin
from .projector import ThicknessMap
from .volume import VoxelVolume

SCHEMA_VERSION = 1


def _paths(path) -> tuple[Path, Path]:
    p = Path(path)
    # Only shed suffixes we own; a base name like "az-009.000" keeps its dot.
    base = p.with_suffix("") if p.suffix in (".raw", ".json", ".png") else p
    return (base.parent / (base.name + ".raw"),
            base.parent / (base.name + ".json"))


def _read_sidecar(json_path: Path, require_version: bool = True) -> dict:
    try:
        text = json_path.read_text()
    except OSError as e:
        raise ParseError(f"cannot read sidecar {json_path}: {e}") from e
    try:
        meta = json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(f"sidecar {json_path} is not valid JSON: {e}") from e
    if not isinstance(meta, dict):
        raise SchemaError(f"sidecar {json_path} must be a JSON object")
    version = meta.get("schema_version", None if require_version
                       else SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise SchemaError(f"schema_version: expected {SCHEMA_VERSION}, "
                          f"got {version!r}")
    return meta

def _read_raw(raw_path: Path, expected_count: int) -> np.ndarray:
    try:
        data = raw_path.read_bytes()
    except OSError as e:
        raise ParseError(f"cannot read {raw_path}: {e}") from e
    expected_bytes = expected_count * 4
    if len(data) != expected_bytes:
        raise ParseError(
            f"{raw_path}: expected {expected_bytes} bytes "
            f"({expected_count} float32), got {len(data)} bytes")
    arr = np.frombuffer(data, dtype="<f4")
    if not np.all(np.isfinite(arr)):
        raise SchemaError(f"{raw_path}: array contains non-finite values")
    return arr


def _require(meta: dict, key: str):
    if key not in meta:
        raise SchemaError(f"missing required key {key!r}")
    return meta[key]


# -- volumes ----------------------------------------------------------------

def write_volume(volume: VoxelVolume, path) -> None:
    raw_path, json_path = _paths(path)
    nx, ny, nz = volume.dims
    # x-fastest flat order on disk.
    flat = np.ascontiguousarray(
        volume.values.transpose(2, 1, 0), dtype="<f4").ravel()
    raw_path.write_bytes(flat.tobytes())
    json_path.write_text(json.dumps({
        "schema_version": SCHEMA_VERSION,
        "kind": volume.kind,
        "dims": [nx, ny, nz],
        "spacing_mm": list(volume.spacing_mm),
        "origin_mm": list(volume.origin_mm),
    }, indent=2))


def read_volume(path) -> VoxelVolume:
    raw_path, json_path = _paths(path)
    meta = _read_sidecar(json_path)
    kind = _require(meta, "kind")
    if kind not in ("density", "mask"):
        raise SchemaError(f"kind: expected 'density' or 'mask', got {kind!r}")
    dims = _require(meta, "dims")
    if (not isinstance(dims, list) or len(dims) != 3
            or any(not isinstance(n, int) or n < 1 for n in dims)):
        raise SchemaError(f"dims: expected 3 positive ints, got {dims!r}")
    nx, ny, nz = dims
    flat = _read_raw(raw_path, nx * ny * nz)
    values = flat.reshape(nz, ny, nx).transpose(2, 1, 0).astype(np.float64)
    spacing = _require(meta, "spacing_mm")
    origin = _require(meta, "origin_mm")
    if any(s <= 0 for s in spacing):
        raise SchemaError(f"spacing_mm: must be > 0, got {spacing!r}")
    return VoxelVolume(values, tuple(spacing), tuple(origin), kind=kind)


# -- geometry / pose --------------------------------------------------------

def geometry_hash(geometry: ProjectionGeometry) -> str:
    canon = json.dumps(geometry.to_json_dict(), sort_keys=True)
    return hashlib.sha256(canon.encode()).hexdigest()[:16]


def write_geometry(geometry: ProjectionGeometry, path) -> None:
    d = geometry.to_json_dict()
    d["schema_version"] = SCHEMA_VERSION
    Path(path).write_text(json.dumps(d, indent=2))


def read_geometry(path) -> ProjectionGeometry:
    meta = _read_sidecar(Path(path), require_version=False)
    try:
        return ProjectionGeometry.from_json_dict(meta)
    except (KeyError, ValueError) as e:
        raise SchemaError(f"geometry file {path}: {e}") from e


def _pose_dict(pose: ViewPose) -> dict:
    return {"azimuth_deg": pose.azimuth_deg,
            "elevation_deg": pose.elevation_deg,
            "translation_mm": list(pose.translation_mm)}


def _pose_from_dict(d: dict) -> ViewPose:
    return make_pose(d["azimuth_deg"], d["elevation_deg"],
                     tuple(d.get("translation_mm", (0.0, 0.0, 0.0))))


# -- thickness maps ---------------------------------------------------------

def write_thickness_map(tmap: ThicknessMap, path) -> None:
    raw_path, json_path = _paths(path)
    raw_path.write_bytes(
        np.ascontiguousarray(tmap.values, dtype="<f4").tobytes())
    json_path.write_text(json.dumps({
        "schema_version": SCHEMA_VERSION,
        "kind": "thickness_map",
        "size_px": list(tmap.size_px),
        "pose": _pose_dict(tmap.pose),
        "geometry_hash": geometry_hash(tmap.geometry),
        "geometry": tmap.geometry.to_json_dict(),
    }, indent=2))


def read_thickness_map(path) -> ThicknessMap:
    raw_path, json_path = _paths(path)
    meta = _read_sidecar(json_path)
    if _require(meta, "kind") != "thickness_map":
        raise SchemaError(f"kind: expected 'thickness_map', got {meta['kind']!r}")
    nu, nv = _require(meta, "size_px")
    flat = _read_raw(raw_path, nu * nv)
    geometry = ProjectionGeometry.from_json_dict(_require(meta, "geometry"))
    if list(geometry.detector_size_px) != [nu, nv]:
        raise SchemaError("size_px: disagrees with geometry detector_size_px")
    pose = _pose_from_dict(_require(meta, "pose"))
    return ThicknessMap(flat.reshape(nv, nu).astype(np.float64), geometry, pose)


# -- radiographs ------------------------------------------------------------

def write_radiograph(radiograph: Radiograph, path) -> None:
    """Writes base.raw (the raw attenuation), base.json, and base.png
    (16-bit grayscale of the display values, linearly mapped to [0, 65535])."""
    raw_path, json_path = _paths(path)
    raw_path.write_bytes(
        np.ascontiguousarray(radiograph.atten, dtype="<f4").tobytes())
    nu, nv = radiograph.size_px
    json_path.write_text(json.dumps({
        "schema_version": SCHEMA_VERSION,
        "kind": "radiograph",
        "size_px": [nu, nv],
    }, indent=2))
    vmax = radiograph.values.max()
    scaled = radiograph.values / vmax if vmax > 0 else radiograph.values
    png = (scaled * 65535.0 + 0.5).astype(np.uint16)
    Image.fromarray(png, mode="I;16").save(raw_path.with_suffix(".png"))


def read_radiograph(path) -> Radiograph:
    raw_path, json_path = _paths(path)
    meta = _read_sidecar(json_path)
    if _require(meta, "kind") != "radiograph":
        raise SchemaError(f"kind: expected 'radiograph', got {meta['kind']!r}")
    nu, nv = _require(meta, "size_px")
    flat = _read_raw(raw_path, nu * nv)
    return Radiograph(flat.reshape(nv, nu).astype(np.float64))


# -- spectra ----------------------------------------------------------------

def write_spectrum(spectrum: MaterialSpectrum, path) -> None:
    Path(path).write_text(json.dumps({
        "schema_version": SCHEMA_VERSION,
        "bins": [{"energy_keV": b.energy_keV, "weight": b.weight,
                  "mu_bone_per_mm": b.mu_bone_per_mm,
                  "mu_tissue_per_mm": b.mu_tissue_per_mm}
                 for b in spectrum.bins],
        "tissue_weight": spectrum.tissue_weight,
    }, indent=2))


def read_spectrum(path) -> MaterialSpectrum:
    meta = _read_sidecar(Path(path), require_version=False)
    bins_raw = _require(meta, "bins")
    if not isinstance(bins_raw, list) or not bins_raw:
        raise SchemaError("bins: expected a non-empty list")
    bins = []
    for i, b in enumerate(bins_raw):
        for key in ("energy_keV", "weight", "mu_bone_per_mm",
                    "mu_tissue_per_mm"):
            if key not in b:
                raise SchemaError(f"bins[{i}]: missing key {key!r}")
            if not isinstance(b[key], (int, float)) or b[key] <= 0:
                raise SchemaError(f"bins[{i}].{key}: must be > 0, "
                                  f"got {b[key]!r}")
        bins.append(SpectrumBin(float(b["energy_keV"]), float(b["weight"]),
                                float(b["mu_bone_per_mm"]),
                                float(b["mu_tissue_per_mm"])))
    tissue_weight = meta.get("tissue_weight", 1.0)
    if not isinstance(tissue_weight, (int, float)) or tissue_weight <= 0:
        raise SchemaError(f"tissue_weight: must be > 0, got {tissue_weight!r}")
    return MaterialSpectrum(tuple(bins), float(tissue_weight))


def default_spectrum_path() -> Path:
    return Path(__file__).parent / "data" / "default_spectrum.json"


# -- phantoms ---------------------------------------------------------------

def write_phantom(phantom: AnalyticPhantom, path) -> None:
    d = phantom.to_json_dict()
    d["schema_version"] = SCHEMA_VERSION
    Path(path).write_text(json.dumps(d, indent=2))


def read_phantom(path) -> AnalyticPhantom:
    meta = _read_sidecar(Path(path), require_version=False)
    prims = _require(meta, "primitives")
    if not isinstance(prims, list):
        raise SchemaError("primitives: expected a list")
    try:
        return AnalyticPhantom.from_json_dict(meta)
    except (KeyError, ValueError) as e:
        raise SchemaError(f"phantom file {path}: {e}") from e
