import math

import numpy as np
import pytest

from xraycast import InvalidArgumentError, compare, psnr, ssim


def test_psnr_identical_is_infinite(rng):
    a = rng.random((16, 16))
    assert psnr(a, a, 1.0) == math.inf


def test_psnr_half_range_offset():
    a = np.full((8, 8), 0.25)
    b = a + 0.5
    assert psnr(a, b, 1.0) == pytest.approx(10 * math.log10(4), abs=1e-12)


def test_psnr_matches_direct_formula(rng):
    a, b = rng.random((20, 20)), rng.random((20, 20))
    mse = np.mean((a - b) ** 2)
    expect = 10 * math.log10(2.5 ** 2 / mse)
    assert psnr(a, b, 2.5) == pytest.approx(expect, abs=1e-10)


def test_psnr_validation(rng):
    a = rng.random((8, 8))
    with pytest.raises(InvalidArgumentError):
        psnr(a, rng.random((8, 9)), 1.0)
    with pytest.raises(InvalidArgumentError):
        psnr(a, a, 0.0)


def test_ssim_identical_is_one(rng):
    a = rng.random((16, 16))
    assert ssim(a, a, 1.0) == pytest.approx(1.0, abs=1e-12)


def test_ssim_constant_pair_is_one():
    a = np.full((12, 12), 0.4)
    assert ssim(a, a.copy(), 1.0) == pytest.approx(1.0, abs=1e-12)


def test_ssim_anticorrelated_is_negative():
    # Checkerboard: local means vanish, so flipping the sign flips the
    # structure term instead of the luminance term.
    i, j = np.meshgrid(np.arange(32), np.arange(32), indexing="ij")
    a = np.where((i + j) % 2 == 0, 1.0, -1.0)
    assert ssim(a, -a, 2.0) < 0.0


def test_ssim_rejects_small_images(rng):
    with pytest.raises(InvalidArgumentError):
        ssim(rng.random((8, 8)), rng.random((8, 8)), 1.0)


def test_metrics_symmetry(rng):
    a, b = rng.random((16, 16)), rng.random((16, 16))
    assert abs(psnr(a, b, 1.0) - psnr(b, a, 1.0)) < 1e-12
    assert abs(ssim(a, b, 1.0) - ssim(b, a, 1.0)) < 1e-12


def test_ssim_bounded(rng):
    for _ in range(10):
        a, b = rng.random((16, 16)), rng.random((16, 16))
        assert -1.0 <= ssim(a, b, 1.0) <= 1.0


def test_compare_report(rng):
    a = rng.random((16, 16))
    rep = compare(a, a, 1.0)
    assert rep.ssim == pytest.approx(1.0, abs=1e-12)
    assert rep.data_range == 1.0
    d = rep.to_json_dict()
    assert d["psnr_db"] == "inf"  # JSON-safe sentinel
    b = a + rng.normal(0, 0.01, a.shape)
    rep2 = compare(a, b, 1.0)
    assert math.isfinite(rep2.psnr_db)
    assert isinstance(rep2.to_json_dict()["psnr_db"], float)
