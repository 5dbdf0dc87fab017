import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from xraycast import (
    DegenerateInputError,
    InvalidArgumentError,
    MaterialSpectrum,
    Radiograph,
    SpectrumBin,
    SuppressionConfig,
    attenuate,
    decomposition_weights,
    normalize_to_attenuation,
    reconstruct_tissue,
    suppress,
)


def _random_spectrum(rng, nbins):
    bins = tuple(
        SpectrumBin(30.0 + 20.0 * i, float(rng.uniform(0.1, 1.0)),
                    float(rng.uniform(0.01, 0.2)),
                    float(rng.uniform(0.005, 0.05)))
        for i in range(nbins))
    return MaterialSpectrum(bins, tissue_weight=float(rng.uniform(0.5, 1.5)))


# --- normalize_to_attenuation ---

def test_normalize_round_trips_simulator_output(rng, two_bin_spectrum):
    tb, tt = rng.random((6, 6)) * 20, rng.random((6, 6)) * 20
    atten = attenuate(tb, tt, two_bin_spectrum)
    rad = Radiograph(atten)
    back = normalize_to_attenuation(rad.values, atten)
    np.testing.assert_allclose(back, atten, rtol=1e-12, atol=1e-12)


def test_normalize_rejects_all_zero():
    with pytest.raises(DegenerateInputError):
        normalize_to_attenuation(np.zeros((3, 3)), np.ones((3, 3)))


def test_normalize_constant_reference(rng):
    img = rng.random((4, 4)) + 0.1
    out = normalize_to_attenuation(img, np.full((4, 4), 0.42))
    np.testing.assert_array_equal(out, 0.42)


def test_normalize_direction(rng):
    img = rng.random((5, 5))
    ref = rng.random((5, 5)) + 0.5
    out = normalize_to_attenuation(img, ref)
    # Brightest display pixel corresponds to the least-attenuating ray.
    assert out.flat[np.argmax(img)] == pytest.approx(ref.min())
    assert out.flat[np.argmin(img)] <= ref.max() + 1e-12


# --- decomposition_weights ---

def test_weights_single_bin_is_one(rng):
    spec = MaterialSpectrum.single_bin(0.05, 0.02)
    tb, tt = rng.random((4, 4)), rng.random((4, 4))
    atten = attenuate(tb, tt, spec)
    np.testing.assert_allclose(
        decomposition_weights(tb, tt, spec, atten), 1.0, rtol=1e-14)


def test_weights_zero_thickness_uniform(two_bin_spectrum):
    z = np.zeros((3, 3))
    atten = attenuate(z, z, two_bin_spectrum)
    w = decomposition_weights(z, z, two_bin_spectrum, atten)
    np.testing.assert_allclose(w, 0.5, rtol=1e-14)


def test_weights_sum_to_one(rng):
    spec = _random_spectrum(rng, 5)
    tb, tt = rng.random((8, 8)) * 30, rng.random((8, 8)) * 30
    atten = attenuate(tb, tt, spec)
    w = decomposition_weights(tb, tt, spec, atten)
    np.testing.assert_allclose(w.sum(axis=0), 1.0, rtol=1e-12, atol=1e-12)


def test_weights_reject_nonpositive_attenuation(two_bin_spectrum):
    z = np.zeros((2, 2))
    bad = np.array([[1.0, 0.5], [0.0, 0.2]])
    with pytest.raises(InvalidArgumentError):
        decomposition_weights(z, z, two_bin_spectrum, bad)


# --- reconstruct_tissue ---

def test_reconstruction_recovers_tissue_exactly(rng, two_bin_spectrum):
    tb, tt = rng.random((6, 6)) * 15, rng.random((6, 6)) * 15
    atten = attenuate(tb, tt, two_bin_spectrum)
    w = decomposition_weights(tb, tt, two_bin_spectrum, atten)
    t_recon, clamps = reconstruct_tissue(atten, w, tb, two_bin_spectrum)
    assert clamps == 0
    for i in range(len(two_bin_spectrum.bins)):
        np.testing.assert_allclose(t_recon[i], tt, rtol=1e-10, atol=1e-10)


def test_reconstruction_single_material(rng):
    spec = MaterialSpectrum.single_bin(0.05, 0.02)
    tt = rng.random((4, 4)) * 10
    zeros = np.zeros((4, 4))
    atten = attenuate(zeros, tt, spec)
    w = decomposition_weights(zeros, tt, spec, atten)
    t_recon, _ = reconstruct_tissue(atten, w, zeros, spec)
    np.testing.assert_allclose(t_recon[0], -np.log(atten) / 0.02,
                               rtol=1e-12)


def test_reconstruction_counts_clamps(two_bin_spectrum):
    # A tiny attenuation with a huge floor forces every pixel to clamp.
    atten = np.full((3, 3), 1e-6)
    w = np.full((2, 3, 3), 0.5)
    _, clamps = reconstruct_tissue(atten, w, np.zeros((3, 3)),
                                   two_bin_spectrum, epsilon_log=1.0)
    assert clamps == 18


# --- suppress ---

@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2 ** 31 - 1), nbins=st.integers(1, 6))
def test_lossless_reconstruction_arbitrary_inputs(seed, nbins):
    rng = np.random.default_rng(seed)
    spec = _random_spectrum(rng, nbins)
    tb = rng.random((7, 7)) * rng.uniform(0.5, 40)
    tt = rng.random((7, 7)) * rng.uniform(0.5, 40)
    img = rng.random((7, 7)) * rng.uniform(0.1, 100)
    res = suppress(img, tb, tt, spec)
    assert res.reconstruction_residual <= 1e-9
    assert np.all(np.isfinite(res.t_recon_tissue))


def test_alpha_one_is_identity(rng, two_bin_spectrum):
    tb, tt = rng.random((5, 5)) * 10, rng.random((5, 5)) * 10
    img = rng.random((5, 5)) + 0.05
    res = suppress(img, tb, tt, two_bin_spectrum,
                   SuppressionConfig(alpha=1.0))
    atten_ref = attenuate(tb, tt, two_bin_spectrum)
    atten_in = normalize_to_attenuation(img, atten_ref)
    np.testing.assert_allclose(res.suppressed.values,
                               Radiograph(atten_in).values,
                               rtol=1e-10, atol=1e-10)


def test_alpha_one_idempotent(rng, two_bin_spectrum):
    tb, tt = rng.random((5, 5)) * 10, rng.random((5, 5)) * 10
    # Simulator output, so the display image spans the reference attenuation
    # range and the normalization is an exact inverse.
    img = Radiograph(attenuate(tb, tt, two_bin_spectrum)).values
    cfg = SuppressionConfig(alpha=1.0)
    once = suppress(img, tb, tt, two_bin_spectrum, cfg)
    twice = suppress(once.suppressed, tb, tt, two_bin_spectrum, cfg)
    np.testing.assert_allclose(twice.suppressed.values,
                               once.suppressed.values, rtol=1e-10, atol=1e-10)


def test_indistinguishable_materials_noop(rng):
    # mu_bone == tissue_weight * mu_tissue: the blend cannot change anything.
    spec = MaterialSpectrum((SpectrumBin(60.0, 1.0, 0.024, 0.03),),
                            tissue_weight=0.8)
    tb, tt = rng.random((4, 4)) * 10, rng.random((4, 4)) * 10
    img = rng.random((4, 4)) + 0.1
    full = suppress(img, tb, tt, spec, SuppressionConfig(alpha=0.0))
    none = suppress(img, tb, tt, spec, SuppressionConfig(alpha=1.0))
    np.testing.assert_allclose(full.suppressed.values, none.suppressed.values,
                               rtol=1e-12, atol=1e-12)


def test_full_suppression_single_bin(rng):
    spec = MaterialSpectrum.single_bin(0.06, 0.02)
    tb = np.zeros((4, 4))
    tb[1:3, 1:3] = 12.0  # a bone slab in the middle
    tt = np.full((4, 4), 20.0)
    img = Radiograph(attenuate(tb, tt, spec)).values
    res = suppress(img, tb, tt, spec, SuppressionConfig(alpha=0.0))
    sup_atten = res.suppressed.atten
    atten_in = attenuate(tb, tt, spec)
    tissue_only = attenuate(np.zeros((4, 4)), tt, spec)
    bone = tb > 0
    # Tissue-only rays are untouched; bone rays move toward (here: reach)
    # the tissue-only value because mu_bone is replaced by the tissue mu.
    np.testing.assert_allclose(sup_atten[~bone], atten_in[~bone],
                               rtol=1e-10, atol=1e-10)
    expect_bone = attenuate(tb, tt, MaterialSpectrum.single_bin(0.02, 0.02))
    np.testing.assert_allclose(sup_atten[bone], expect_bone[bone], rtol=1e-10)
    assert np.all(sup_atten[bone] > atten_in[bone])
    assert np.all(sup_atten[bone] < tissue_only[bone] + 1e-12)


def test_monotone_in_alpha(rng, two_bin_spectrum):
    tb = rng.random((4, 4)) * 10 + 1.0  # bone everywhere, mu_b > w*mu_t
    tt = rng.random((4, 4)) * 10
    img = rng.random((4, 4)) + 0.1
    prev = None
    for alpha in (0.0, 0.25, 0.5, 0.75, 1.0):
        res = suppress(img, tb, tt, two_bin_spectrum,
                       SuppressionConfig(alpha=alpha))
        if prev is not None:
            assert np.all(res.suppressed.atten <= prev + 1e-15)
        prev = res.suppressed.atten


def test_config_validation():
    with pytest.raises(InvalidArgumentError):
        SuppressionConfig(alpha=1.5)
    with pytest.raises(InvalidArgumentError):
        SuppressionConfig(alpha=-0.1)
    with pytest.raises(InvalidArgumentError):
        SuppressionConfig(epsilon_log=0.0)


def test_suppress_shape_mismatch(rng, two_bin_spectrum):
    with pytest.raises(InvalidArgumentError):
        suppress(rng.random((3, 3)), rng.random((4, 4)), rng.random((4, 4)),
                 two_bin_spectrum)
