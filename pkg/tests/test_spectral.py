import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from deltamax.annulus import AnnulusSpec, rasterize_annulus
from deltamax.grid import Field, direct_convolve, lp_norm, make_grid
from deltamax.spectral import (
    KernelCache,
    SpectralField,
    delta_convolve,
    fft_convolve,
    forward_transform,
    from_real_spectrum,
    inverse_transform,
    real_spectrum,
)
from oracles import direct_dft


@pytest.mark.parametrize("d, n, box", [(1, 16, 3.0), (2, 8, 2.0), (3, 4, 1.0)])
def test_forward_matches_direct_dft(rng, d, n, box):
    g = make_grid(d, n, box)
    v = rng.standard_normal(g.shape)
    F = forward_transform(Field(g, v))
    ref = np.fft.fftshift(direct_dft(v, g.spacing))
    np.testing.assert_allclose(F.coeffs, ref, atol=1e-12)


def test_round_trip(rng):
    g = make_grid(2, 32, 5.0)
    f = Field(g, rng.standard_normal(g.shape))
    np.testing.assert_allclose(inverse_transform(forward_transform(f)).values, f.values, atol=1e-13)
    np.testing.assert_allclose(from_real_spectrum(g, real_spectrum(f)), f.values, atol=1e-13)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**31), box=st.sampled_from([0.5, 1.0, 8.0]), n=st.sampled_from([4, 8, 16]))
def test_parseval(seed, box, n):
    g = make_grid(2, n, box)
    f = Field(g, np.random.default_rng(seed).standard_normal(g.shape))
    assert forward_transform(f).l2_norm() == pytest.approx(lp_norm(f, 2), rel=1e-12)


def test_impulse_has_flat_spectrum():
    g = make_grid(2, 16, 4.0)
    F = forward_transform(Field.impulse(g))
    np.testing.assert_allclose(F.coeffs, 1.0, atol=1e-14)


def test_cosine_has_two_coefficients():
    g = make_grid(1, 32, 2.0)
    (x,) = g.coordinates()
    m = 3
    f = Field(g, np.cos(2 * math.pi * m * x.ravel() / g.box_length))
    F = forward_transform(f)
    (freqs,) = F.frequencies()
    big = np.abs(F.coeffs) > 1e-12
    assert set(np.round(freqs[big] * g.box_length).astype(int)) == {-m, m}
    np.testing.assert_allclose(F.coeffs[big], g.box_length / 2, atol=1e-12)


def test_spectral_field_shape_check():
    g = make_grid(2, 8, 1.0)
    with pytest.raises(ValueError):
        SpectralField(g, np.zeros((8, 4)))


@pytest.mark.parametrize("d, n", [(1, 32), (2, 8), (3, 4)])
def test_fft_convolve_matches_direct(rng, d, n):
    g = make_grid(d, n, 1.5)
    f = Field(g, rng.standard_normal(g.shape))
    k = Field(g, rng.standard_normal(g.shape))
    np.testing.assert_allclose(fft_convolve(f, k).values, direct_convolve(f, k).values, atol=1e-12)


def test_fft_convolve_grid_mismatch():
    with pytest.raises(ValueError):
        fft_convolve(Field.zeros(make_grid(2, 8, 1.0)), Field.zeros(make_grid(2, 8, 2.0)))


@pytest.mark.parametrize(
    "rule, box, delta, k", [("area", 8.0, 0.25, -1), ("area", 8.0, 0.25, 0), ("centre", 1.5, 0.45, -2)]
)
def test_delta_convolve_matches_direct_oracle(rng, rule, box, delta, k):
    g = make_grid(2, 64, box)
    spec = AnnulusSpec.isotropic(2, delta, k)
    f = Field(g, rng.standard_normal(g.shape))
    kern = rasterize_annulus(g, spec, rule)
    got = delta_convolve(f, spec, rule).values
    np.testing.assert_allclose(got, direct_convolve(f, kern).values, atol=1e-12)


def test_delta_convolve_preserves_constants_and_mean(rng):
    g = make_grid(2, 64, 8.0)
    spec = AnnulusSpec.isotropic(2, 0.25, 0)
    out = delta_convolve(Field.constant(g, 2.5), spec, "area")
    np.testing.assert_allclose(out.values, 2.5, rtol=1e-13)
    f = Field(g, rng.standard_normal(g.shape))
    assert delta_convolve(f, spec, "area").values.mean() == pytest.approx(f.values.mean(), abs=1e-13)


def test_delta_convolve_bounded_by_extremes(rng):
    g = make_grid(2, 64, 8.0)
    f = Field(g, rng.uniform(-1, 3, g.shape))
    out = delta_convolve(f, AnnulusSpec.isotropic(2, 0.25, 0), "area").values
    assert out.min() >= f.values.min() - 1e-12
    assert out.max() <= f.values.max() + 1e-12


def test_delta_convolve_impulse_recovers_kernel():
    g = make_grid(2, 64, 8.0)
    spec = AnnulusSpec.isotropic(2, 0.25, 0)
    out = delta_convolve(Field.impulse(g), spec, "area")
    np.testing.assert_allclose(out.values, rasterize_annulus(g, spec, "area").values, atol=1e-12)


def test_delta_convolve_small_grid_direct_sum(rng):
    # n = 16: compare against an explicit double loop over the kernel support.
    g = make_grid(2, 16, 4.0)
    spec = AnnulusSpec.isotropic(2, 0.25, -1)
    f = rng.standard_normal(g.shape)
    kern = rasterize_annulus(g, spec, "area").values
    out = np.zeros(g.shape)
    for i in range(16):
        for j in range(16):
            out += kern[i, j] * np.roll(f, (i, j), axis=(0, 1))
    out *= g.cell_volume
    np.testing.assert_allclose(delta_convolve(Field(g, f), spec, "area").values, out, atol=1e-12)


def test_kernel_cache_reuses_and_checks_rule():
    g = make_grid(2, 32, 8.0)
    cache = KernelCache("area")
    spec = AnnulusSpec.isotropic(2, 0.25, 0)
    m1 = cache.multiplier(g, spec)
    m2 = cache.multiplier(g, spec)
    assert m1 is m2 and len(cache) == 1
    assert not m1.flags.writeable
    assert m1[0, 0] == pytest.approx(1.0, abs=1e-14)
    np.testing.assert_allclose(m1, real_spectrum(cache.kernel(g, spec)))
    with pytest.raises(ValueError):
        delta_convolve(Field.zeros(g), spec, "centre", cache=cache)


def test_multiplier_close_to_continuous_transform():
    # The area kernel's multiplier approximates the normalised shell transform at low frequency.
    from deltamax.special import annulus_fourier

    g = make_grid(2, 256, 16.0)
    spec = AnnulusSpec.isotropic(2, 0.25, 0)
    m = KernelCache("area").multiplier(g, spec)
    fx, fy = g.frequencies(real=True)
    rho = np.sqrt(fx**2 + fy**2)
    ref = annulus_fourier(2, 0.25, rho) / annulus_fourier(2, 0.25, 0.0)
    low = rho <= 2.0
    assert np.max(np.abs(m[low].real - ref[low])) <= 5e-3
    assert np.max(np.abs(m.imag)) <= 1e-12
