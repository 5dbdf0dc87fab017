import math

import numpy as np
import pytest

from xraycast import (
    AnalyticPhantom,
    InvalidArgumentError,
    Primitive,
    ProjectionGeometry,
    forward_project,
    make_pose,
    preset,
)


def test_empty_phantom_rasterizes_to_zero():
    vol, mask = AnalyticPhantom([]).rasterize((8, 8, 8), (2.0, 2.0, 2.0))
    assert np.all(vol.values == 0.0)
    assert np.all(mask.values == 0.0)
    assert mask.kind == "mask"


def test_sphere_volume_matches_analytic():
    vol, _ = preset("sphere").rasterize((64, 64, 64), (2.0, 2.0, 2.0))
    measured = vol.values.sum() * 8.0  # density 1, voxel volume 8 mm^3
    analytic = 4.0 / 3.0 * math.pi * 60.0 ** 3
    assert abs(measured - analytic) / analytic < 0.02


def test_bone_cylinder_mask_marks_exactly_the_cylinder():
    ph = AnalyticPhantom([
        Primitive("ellipsoid", (0, 0, 0), (30, 30, 30), 1.0, "tissue"),
        Primitive("cylinder", (0, 0, 0), (5, 5, 20), 1.8, "bone"),
    ])
    vol, mask = ph.rasterize((32, 32, 32), (2.0, 2.0, 2.0))
    cyl = Primitive("cylinder", (0, 0, 0), (5, 5, 20), 1.8, "bone")
    centers = np.stack(np.meshgrid(*([np.arange(32) * 2.0 - 31.0] * 3),
                                   indexing="ij"), axis=-1).reshape(-1, 3)
    inside = cyl.contains(centers).reshape(32, 32, 32)
    np.testing.assert_array_equal(mask.values, inside.astype(float))
    assert np.all(vol.values[inside] == 1.8)


def test_line_integral_miss():
    ph = preset("shell")
    assert ph.analytic_line_integral((0.0, -500.0, 200.0), (0, 1, 0)) == (0, 0)


def test_line_integral_diameter_chord():
    ph = AnalyticPhantom(
        [Primitive("sphere", (0, 0, 0), (7, 7, 7), 2.5, "tissue")])
    tb, tt = ph.analytic_line_integral((0.0, -100.0, 0.0), (0, 1, 0))
    assert tb == 0.0
    assert tt == pytest.approx(2 * 7 * 2.5, abs=1e-12)


def test_line_integral_offset_chord_exact():
    ph = AnalyticPhantom(
        [Primitive("sphere", (0, 0, 0), (5, 5, 5), 1.0, "tissue")])
    _, tt = ph.analytic_line_integral((3.0, -100.0, 0.0), (0, 1, 0))
    assert tt == pytest.approx(8.0, abs=1e-12)  # 2*sqrt(25-9)


def test_override_never_double_counts():
    inner = Primitive("sphere", (0, 0, 0), (10, 10, 10), 0.5, "bone")
    outer = Primitive("sphere", (0, 0, 0), (20, 20, 20), 1.0, "tissue")
    ph = AnalyticPhantom([outer, inner])
    tb, tt = ph.analytic_line_integral((0.0, -100.0, 0.0), (0, 1, 0))
    # Inner sphere owns its chord; the outer one keeps only the remainder.
    assert tb == pytest.approx(0.5 * 20.0, abs=1e-12)
    assert tt == pytest.approx(1.0 * (40.0 - 20.0), abs=1e-12)
    # Sub-interval lengths add up to the full outer chord.
    assert tb / 0.5 + tt / 1.0 == pytest.approx(40.0, abs=1e-12)


def test_last_primitive_wins_in_rasterization():
    ph = AnalyticPhantom([
        Primitive("box", (0, 0, 0), (10, 10, 10), 1.0, "tissue"),
        Primitive("box", (0, 0, 0), (4, 4, 4), 2.0, "bone"),
    ])
    vol, mask = ph.rasterize((16, 16, 16), (2.0, 2.0, 2.0))
    center = vol.values[7:9, 7:9, 7:9]
    assert np.all(center == 2.0)
    assert np.all(mask.values[7:9, 7:9, 7:9] == 1.0)


def test_fp_converges_to_line_integral():
    ph = preset("chest_toy")
    geo = ProjectionGeometry(mode="parallel_beam", detector_size_px=(24, 24),
                             detector_pitch_mm=(6.0, 6.0), step_mm=1.0)
    pose = make_pose(2.0, 1.0)
    # Analytic reference per detector ray.
    from xraycast import ray_bundle

    errs = []
    spacings = [4.0, 2.0, 1.0]
    for h in spacings:
        dims = int(round(144.0 / h))
        vol, _ = ph.rasterize((dims,) * 3, (h,) * 3)
        geo_h = ProjectionGeometry(mode="parallel_beam",
                                   detector_size_px=(24, 24),
                                   detector_pitch_mm=(6.0, 6.0), step_mm=h / 2)
        img = forward_project(vol, geo_h, pose).values
        origins, dirs, _, _, _ = ray_bundle(geo_h, pose, vol.bounds_mm())
        ref = np.array([sum(ph.analytic_line_integral(o, d))
                        for o, d in zip(origins, dirs)]).reshape(24, 24)
        errs.append(np.linalg.norm(img - ref) / np.linalg.norm(ref))
    # First-order (or better) convergence in the rasterization spacing.
    assert errs[1] < 0.75 * errs[0]
    assert errs[2] < 0.75 * errs[1]
    assert errs[2] < 0.02


def test_primitive_validation():
    with pytest.raises(InvalidArgumentError):
        Primitive("sphere", (0, 0, 0), (0.0, 1.0, 1.0), 1.0)
    with pytest.raises(InvalidArgumentError):
        Primitive("sphere", (0, 0, 0), (1.0, 1.0, 1.0), -0.5)
    with pytest.raises(InvalidArgumentError):
        Primitive("cone", (0, 0, 0), (1.0, 1.0, 1.0), 1.0)


def test_presets_exist():
    assert len(preset("sphere").primitives) == 1
    assert len(preset("shell").primitives) == 2
    chest = preset("chest_toy")
    assert len(chest.primitives) == 7
    assert sum(p.material == "bone" for p in chest.primitives) == 6
    with pytest.raises(InvalidArgumentError):
        preset("nope")
