"""Command-line surface tying the pipeline together.

Exit codes: 0 ok, 2 usage/input errors, 3 computation invariant violations.
Every subcommand echoes an effective-config JSON sufficient to reproduce the
run. With --json-errors, failures also emit a machine-readable JSON object
on stderr. Outputs are deterministic for identical flags and inputs, and
invariant to the thread count.
"""

from __future__ import annotations

import functools
import json
import os
import sys
from pathlib import Path

import click
import numpy as np

from . import io_formats
from .errors import ParseError, SchemaError, XraycastError
from .geometry import ProjectionGeometry, make_pose
from .phantoms import preset as phantom_preset
from .physics import ct2xray, material_thickness
from .projector import backproject_single, forward_project
from .suppression import SuppressionConfig, suppress as run_suppress
from .metrics import compare as metric_compare

POSE_RANGE_GUARD_DEG = 18.0


def _apply_threads(threads: int | None) -> int | None:
    if threads is None:
        env = os.environ.get("XRAYCAST_THREADS")
        threads = int(env) if env else None
    if threads is not None:
        if threads < 1:
            raise click.UsageError("--threads must be >= 1")
        try:
            import numba

            # Requests beyond the launch-time pool size are clamped, not
            # errors; results are thread-count invariant either way.
            numba.set_num_threads(min(threads,
                                      numba.config.NUMBA_NUM_THREADS))
        except ImportError:
            pass
    return threads


def _echo_config(subcommand: str, config: dict) -> None:
    click.echo(json.dumps({"subcommand": subcommand,
                           "effective_config": config}, indent=2))


def _handle_errors(f):
    """Map library errors to the documented exit codes."""

    @functools.wraps(f)
    def wrapper(*args, json_errors=False, **kwargs):
        try:
            return f(*args, **kwargs)
        except (FileNotFoundError, ParseError, SchemaError) as e:
            _fail(e, 2, json_errors)
        except XraycastError as e:
            _fail(e, 3, json_errors)

    return wrapper


def _fail(exc: Exception, code: int, json_errors: bool) -> None:
    if json_errors:
        click.echo(json.dumps({"error": type(exc).__name__,
                               "message": str(exc)}), err=True)
    else:
        click.echo(f"error: {exc}", err=True)
    sys.exit(code)


def _common_options(f):
    f = click.option("--threads", type=int, default=None,
                     help="Worker threads (default: all cores; env "
                          "XRAYCAST_THREADS as fallback).")(f)
    f = click.option("--json-errors", is_flag=True,
                     help="Emit machine-readable errors on stderr.")(f)
    return f


def _load_geometry(geometry_path, volume, detector=None, pitch=None
                   ) -> ProjectionGeometry:
    if geometry_path:
        return io_formats.read_geometry(geometry_path)
    kwargs = {"step_mm": 0.5 * min(volume.spacing_mm)}
    if detector:
        kwargs["detector_size_px"] = detector
    if pitch:
        kwargs["detector_pitch_mm"] = pitch
    return ProjectionGeometry(**kwargs)


def _parse_triple(text: str, typ=float):
    parts = [typ(t) for t in text.split(",")]
    if len(parts) == 1:
        parts = parts * 3
    if len(parts) != 3:
        raise click.UsageError(f"expected 1 or 3 comma-separated values, "
                               f"got {text!r}")
    return tuple(parts)


@click.group()
def main():
    """Differentiable X-ray projection and radiograph-physics toolkit."""


@main.command("phantom")
@click.option("--preset", "preset_name", type=str, default=None,
              help="Named phantom: sphere, shell, or chest_toy.")
@click.option("--file", "phantom_file", type=click.Path(), default=None,
              help="Phantom JSON file (alternative to --preset).")
@click.option("--dims", default="64,64,64", show_default=True)
@click.option("--spacing", default="2.0", show_default=True,
              help="Voxel spacing in mm (one value or three).")
@click.option("--out", required=True, type=click.Path(),
              help="Output base path; writes OUT.raw/.json + OUT_mask.*")
@_common_options
@_handle_errors
def cmd_phantom(preset_name, phantom_file, dims, spacing, out, threads):
    """Rasterize an analytic phantom to the volume file format."""
    if (preset_name is None) == (phantom_file is None):
        raise click.UsageError("give exactly one of --preset or --file")
    _apply_threads(threads)
    phantom = (phantom_preset(preset_name) if preset_name
               else io_formats.read_phantom(phantom_file))
    dims_t = _parse_triple(dims, int)
    spacing_t = _parse_triple(spacing, float)
    density, mask = phantom.rasterize(dims_t, spacing_t)
    io_formats.write_volume(density, out)
    io_formats.write_volume(mask, f"{Path(out).with_suffix('')}_mask")
    _echo_config("phantom", {
        "preset": preset_name, "file": phantom_file,
        "dims": list(dims_t), "spacing_mm": list(spacing_t), "out": out})


@main.command("project")
@click.option("--volume", "volume_path", required=True, type=click.Path())
@click.option("--azimuth", type=float, default=0.0, show_default=True)
@click.option("--elevation", type=float, default=0.0, show_default=True)
@click.option("--geometry", "geometry_path", type=click.Path(), default=None)
@click.option("--out", required=True, type=click.Path())
@_common_options
@_handle_errors
def cmd_project(volume_path, azimuth, elevation, geometry_path, out, threads):
    """Plain forward projection (DRR) to a thickness-map file."""
    _apply_threads(threads)
    volume = io_formats.read_volume(volume_path)
    geometry = _load_geometry(geometry_path, volume)
    pose = make_pose(azimuth, elevation)
    tmap = forward_project(volume, geometry, pose)
    io_formats.write_thickness_map(tmap, out)
    _echo_config("project", {
        "volume": volume_path, "azimuth_deg": azimuth,
        "elevation_deg": elevation, "geometry": geometry.to_json_dict(),
        "out": out})


@main.command("backproject")
@click.option("--image", "image_path", required=True, type=click.Path(),
              help="Thickness-map file to smear back into a volume.")
@click.option("--like", "like_path", required=True, type=click.Path(),
              help="Volume file supplying the output grid.")
@click.option("--out", required=True, type=click.Path())
@_common_options
@_handle_errors
def cmd_backproject(image_path, like_path, out, threads):
    """Single-image backprojection onto the grid of --like."""
    _apply_threads(threads)
    tmap = io_formats.read_thickness_map(image_path)
    template = io_formats.read_volume(like_path)
    vol = backproject_single(tmap, tmap.geometry, tmap.pose, template)
    io_formats.write_volume(vol, out)
    _echo_config("backproject", {
        "image": image_path, "like": like_path,
        "geometry": tmap.geometry.to_json_dict(), "out": out})


@main.command("simulate")
@click.option("--volume", "volume_path", required=True, type=click.Path())
@click.option("--mask", "mask_path", required=True, type=click.Path())
@click.option("--spectrum", "spectrum_path", type=click.Path(), default=None,
              help="Spectrum JSON (default: bundled 4-bin table).")
@click.option("--azimuth", type=float, default=0.0, show_default=True)
@click.option("--elevation", type=float, default=0.0, show_default=True)
@click.option("--geometry", "geometry_path", type=click.Path(), default=None)
@click.option("--out", required=True, type=click.Path())
@_common_options
@_handle_errors
def cmd_simulate(volume_path, mask_path, spectrum_path, azimuth, elevation,
                 geometry_path, out, threads):
    """Polychromatic radiograph simulation (radiograph + thickness maps)."""
    _apply_threads(threads)
    for angle, name in ((azimuth, "azimuth"), (elevation, "elevation")):
        if abs(angle) > POSE_RANGE_GUARD_DEG:
            click.echo(f"warning: {name} {angle} deg outside the "
                       f"+-{POSE_RANGE_GUARD_DEG} deg guard range", err=True)
    volume = io_formats.read_volume(volume_path)
    mask = io_formats.read_volume(mask_path)
    spectrum = io_formats.read_spectrum(
        spectrum_path or io_formats.default_spectrum_path())
    geometry = _load_geometry(geometry_path, volume)
    pose = make_pose(azimuth, elevation)

    t_bone, t_tissue = material_thickness(volume, mask, geometry, pose)
    from .physics import ct2xray_from_thickness

    radiograph = ct2xray_from_thickness(t_bone, t_tissue, spectrum)
    base = Path(out).with_suffix("")
    io_formats.write_radiograph(radiograph, out)
    io_formats.write_thickness_map(t_bone, f"{base}_t_bone")
    io_formats.write_thickness_map(t_tissue, f"{base}_t_tissue")
    config = {
        "volume": volume_path, "mask": mask_path,
        "spectrum": str(spectrum_path or io_formats.default_spectrum_path()),
        "azimuth_deg": azimuth, "elevation_deg": elevation,
        "geometry": geometry.to_json_dict(), "out": out}
    Path(f"{base}_config.json").write_text(json.dumps(config, indent=2))
    _echo_config("simulate", config)


@main.command("sweep")
@click.option("--volume", "volume_path", required=True, type=click.Path())
@click.option("--mask", "mask_path", required=True, type=click.Path())
@click.option("--spectrum", "spectrum_path", type=click.Path(), default=None)
@click.option("--views", type=int, default=20, show_default=True)
@click.option("--range-deg", type=float, default=9.0, show_default=True)
@click.option("--geometry", "geometry_path", type=click.Path(), default=None)
@click.option("--out-dir", required=True, type=click.Path())
@_common_options
@_handle_errors
def cmd_sweep(volume_path, mask_path, spectrum_path, views, range_deg,
              geometry_path, out_dir, threads):
    """Radiographs at azimuths uniformly spaced over [-range, +range]."""
    if views < 1:
        raise click.UsageError("--views must be >= 1")
    _apply_threads(threads)
    volume = io_formats.read_volume(volume_path)
    mask = io_formats.read_volume(mask_path)
    spectrum = io_formats.read_spectrum(
        spectrum_path or io_formats.default_spectrum_path())
    geometry = _load_geometry(geometry_path, volume)
    azimuths = (np.linspace(-range_deg, range_deg, views) if views > 1
                else np.array([0.0]))
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    names = []
    for i, az in enumerate(azimuths):
        radiograph = ct2xray(volume, mask, geometry, make_pose(az, 0.0),
                             spectrum)
        name = f"view_{i:03d}_az{az:+08.3f}"
        io_formats.write_radiograph(radiograph, out / name)
        names.append(name)
    _echo_config("sweep", {
        "volume": volume_path, "mask": mask_path,
        "spectrum": str(spectrum_path or io_formats.default_spectrum_path()),
        "views": views, "range_deg": range_deg,
        "azimuths_deg": [float(a) for a in azimuths],
        "geometry": geometry.to_json_dict(),
        "out_dir": str(out_dir), "files": names})


@main.command("suppress")
@click.option("--input", "input_path", required=True, type=click.Path())
@click.option("--t-bone", "t_bone_path", required=True, type=click.Path())
@click.option("--t-tissue", "t_tissue_path", required=True, type=click.Path())
@click.option("--spectrum", "spectrum_path", type=click.Path(), default=None)
@click.option("--alpha", type=float, default=0.0, show_default=True,
              help="Suppression blend: 0 full suppression, 1 identity.")
@click.option("--out", required=True, type=click.Path())
@_common_options
@_handle_errors
def cmd_suppress(input_path, t_bone_path, t_tissue_path, spectrum_path,
                 alpha, out, threads):
    """Bone suppression via reverse simulation; prints the residual."""
    _apply_threads(threads)
    radiograph = io_formats.read_radiograph(input_path)
    t_bone = io_formats.read_thickness_map(t_bone_path)
    t_tissue = io_formats.read_thickness_map(t_tissue_path)
    spectrum = io_formats.read_spectrum(
        spectrum_path or io_formats.default_spectrum_path())
    result = run_suppress(radiograph, t_bone, t_tissue, spectrum,
                          SuppressionConfig(alpha=alpha))
    base = Path(out).with_suffix("")
    io_formats.write_radiograph(result.suppressed, out)
    report = {"reconstruction_residual": result.reconstruction_residual,
              "clamp_count": result.clamp_count, "alpha": result.alpha}
    Path(f"{base}_report.json").write_text(json.dumps(report, indent=2))
    click.echo(f"reconstruction_residual: {result.reconstruction_residual:.3e}")
    _echo_config("suppress", {
        "input": input_path, "t_bone": t_bone_path, "t_tissue": t_tissue_path,
        "spectrum": str(spectrum_path or io_formats.default_spectrum_path()),
        "alpha": alpha, "out": out, "report": report})


@main.command("compare")
@click.argument("path_a", type=click.Path())
@click.argument("path_b", type=click.Path())
@click.option("--range", "data_range", type=float, required=True,
              help="Data range used by PSNR and SSIM.")
@_common_options
@_handle_errors
def cmd_compare(path_a, path_b, data_range, threads):
    """PSNR/SSIM between two radiograph or thickness-map files."""
    _apply_threads(threads)
    report = metric_compare(_load_image(path_a), _load_image(path_b),
                            data_range)
    click.echo(json.dumps(report.to_json_dict(), indent=2))


def _load_image(path) -> np.ndarray:
    meta = io_formats._read_sidecar(io_formats._paths(path)[1])
    if meta.get("kind") == "radiograph":
        return io_formats.read_radiograph(path).values
    return io_formats.read_thickness_map(path).values


if __name__ == "__main__":
    main()
