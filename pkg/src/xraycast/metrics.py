"""PSNR and SSIM for regression tests and CLI comparison.

SSIM uses the standard 11x11 Gaussian window (sigma 1.5) with k1 = 0.01 and
k2 = 0.03, averaged over the valid interior (no padding).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.signal import convolve2d

from .errors import InvalidArgumentError


@dataclass(frozen=True)
class MetricReport:
    psnr_db: float
    ssim: float
    data_range: float

    def to_json_dict(self) -> dict:
        psnr = "inf" if math.isinf(self.psnr_db) else self.psnr_db
        return {"psnr_db": psnr, "ssim": self.ssim, "data_range": self.data_range}


def _check_pair(a, b, data_range):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise InvalidArgumentError(f"shape mismatch: {a.shape} vs {b.shape}")
    if data_range <= 0:
        raise InvalidArgumentError("data_range must be > 0")
    return a, b


def psnr(a, b, data_range: float) -> float:
    """10 * log10(range^2 / MSE); identical inputs return +inf."""
    a, b = _check_pair(a, b, data_range)
    mse = float(np.mean((a - b) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(data_range ** 2 / mse)


def _gaussian_window(size: int = 11, sigma: float = 1.5) -> np.ndarray:
    half = (size - 1) / 2.0
    g = np.exp(-((np.arange(size) - half) ** 2) / (2 * sigma ** 2))
    k = np.outer(g, g)
    return k / k.sum()


def ssim(a, b, data_range: float) -> float:
    """Mean local structural similarity over the valid interior."""
    a, b = _check_pair(a, b, data_range)
    if a.ndim != 2 or min(a.shape) < 11:
        raise InvalidArgumentError("ssim needs 2D images of at least 11x11")
    win = _gaussian_window()
    c1 = (0.01 * data_range) ** 2
    c2 = (0.03 * data_range) ** 2

    mu_a = convolve2d(a, win, mode="valid")
    mu_b = convolve2d(b, win, mode="valid")
    var_a = convolve2d(a * a, win, mode="valid") - mu_a ** 2
    var_b = convolve2d(b * b, win, mode="valid") - mu_b ** 2
    cov = convolve2d(a * b, win, mode="valid") - mu_a * mu_b

    num = (2 * mu_a * mu_b + c1) * (2 * cov + c2)
    den = (mu_a ** 2 + mu_b ** 2 + c1) * (var_a + var_b + c2)
    return float(np.mean(num / den))


def compare(a, b, data_range: float) -> MetricReport:
    return MetricReport(psnr_db=psnr(a, b, data_range),
                        ssim=ssim(a, b, data_range),
                        data_range=float(data_range))
