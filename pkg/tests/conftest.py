import numpy as np
import pytest

from xraycast import MaterialSpectrum, ProjectionGeometry, SpectrumBin, VoxelVolume


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


@pytest.fixture
def small_volume(rng):
    return VoxelVolume(rng.random((16, 16, 16)), (2.0, 2.0, 2.0),
                       (-15.0, -15.0, -15.0))


@pytest.fixture
def small_geometry():
    return ProjectionGeometry(detector_size_px=(20, 20),
                              detector_pitch_mm=(2.0, 2.0), step_mm=1.0)


@pytest.fixture
def two_bin_spectrum():
    return MaterialSpectrum((SpectrumBin(40.0, 0.5, 0.02, 0.01),
                             SpectrumBin(80.0, 0.5, 0.008, 0.006)),
                            tissue_weight=0.9)
