import math

import numpy as np
import pytest
from scipy import special as sps

from deltamax.annulus import annulus_measure
from deltamax.special import (
    SERIES_SWITCH,
    BesselOrder,
    annulus_fourier,
    bessel_j,
    decay_envelopes,
    sphere_fourier,
)
from oracles import annulus_fourier_quadrature, bessel_quadrature, sphere_profile_quadrature


def test_bessel_order_type():
    assert BesselOrder.of(1.5) == BesselOrder(3)
    assert BesselOrder(4).nu == 2.0
    with pytest.raises(ValueError):
        BesselOrder(-1)
    with pytest.raises(ValueError):
        BesselOrder.of(0.3)


def test_j0_at_zero():
    assert bessel_j(0, 0.0) == 1.0
    for nu in (0.5, 1, 2.5, 5):
        assert bessel_j(nu, 0.0) == 0.0


def test_half_integer_closed_form():
    assert bessel_j(0.5, math.pi / 2) == pytest.approx(2.0 / math.pi, abs=1e-15)
    x = np.linspace(0.1, 200.0, 3001)
    np.testing.assert_allclose(bessel_j(0.5, x), np.sqrt(2 / (np.pi * x)) * np.sin(x), atol=1e-13)
    np.testing.assert_allclose(
        bessel_j(1.5, x), np.sqrt(2 / (np.pi * x)) * (np.sin(x) / x - np.cos(x)), atol=1e-13
    )


def test_j0_first_zero_by_quadrature():
    x = 2.4048255577
    assert abs(bessel_j(0, x)) <= 1e-8
    assert bessel_j(0, x) == pytest.approx(bessel_quadrature(0, x), abs=1e-12)


@pytest.mark.parametrize("n", [0, 1, 2, 3, 5])
@pytest.mark.parametrize("x", [0.3, 1.0, 5.5, 11.9, 12.0, 12.1, 20.0, 33.3, 63.9])
def test_integer_orders_match_quadrature(n, x):
    assert bessel_j(n, x) == pytest.approx(bessel_quadrature(n, x), abs=1e-10)


@pytest.mark.parametrize("twice", range(0, 12))
def test_against_scipy_both_regimes(twice):
    nu = twice / 2
    x = np.linspace(0.0, 64.0, 20001)
    np.testing.assert_allclose(bessel_j(nu, x), sps.jv(nu, x), atol=1e-10, rtol=0)
    big = np.geomspace(64.0, 1e5, 2000)
    ref = sps.jv(nu, big)
    # Relative accuracy away from zeros; scale by the local envelope near them.
    env = np.sqrt(2.0 / (np.pi * big))
    assert np.max(np.abs(bessel_j(nu, big) - ref) / env) <= 1e-8


def test_switch_point_continuity():
    for twice in range(0, 12):
        nu = twice / 2
        s = max(SERIES_SWITCH, 2 * nu)
        lo, hi = bessel_j(nu, s), bessel_j(nu, np.nextafter(s, np.inf))
        assert abs(lo - hi) <= 1e-10


def test_rejects_negative_argument():
    with pytest.raises(ValueError):
        bessel_j(0, -1.0)


@pytest.mark.parametrize("nu", [0.5, 1.0, 1.5, 2.0, 3.0, 4.5, 5.0])
def test_three_term_recurrence(nu):
    x = np.linspace(0.5, 64.0, 5000)
    if nu >= 1:
        lhs = bessel_j(nu - 1, x)
    else:
        # J_{-1/2} is outside the library's range; use its closed form.
        lhs = np.sqrt(2 / (np.pi * x)) * np.cos(x)
    total = lhs + bessel_j(nu + 1, x)
    rhs = 2 * nu / x * bessel_j(nu, x)
    scale = np.maximum(np.abs(rhs), np.sqrt(2 / (np.pi * x)))
    assert np.max(np.abs(total - rhs) / scale) <= 1e-8


@pytest.mark.parametrize("d", [2, 3, 4])
@pytest.mark.parametrize("c", [1.0, 2 * math.pi, 7.3])
def test_derivative_identity(d, c):
    # d/dr [r^{d/2} J_{d/2}(c r)] = c r^{d/2} J_{d/2 - 1}(c r)
    nu = d / 2
    r = np.linspace(0.2, 3.0, 41)
    step = 1e-5

    def g(rr):
        return rr**nu * bessel_j(nu, c * rr)

    fd = (g(r + step) - g(r - step)) / (2 * step)
    np.testing.assert_allclose(fd, c * r**nu * bessel_j(nu - 1, c * r), atol=1e-6)


@pytest.mark.parametrize("d", [2, 3, 4])
def test_sphere_fourier_at_zero(d):
    assert sphere_fourier(d, 0.0) == 1.0


def test_sphere_fourier_examples():
    assert abs(sphere_fourier(3, 0.5)) <= 1e-15
    assert sphere_fourier(2, 1.0) == pytest.approx(bessel_quadrature(0, 2 * math.pi), abs=1e-12)
    assert sphere_fourier(2, 1.0) == pytest.approx(0.2203, abs=5e-5)
    rho = np.linspace(0.01, 30, 500)
    np.testing.assert_allclose(sphere_fourier(3, rho), np.sin(2 * np.pi * rho) / (2 * np.pi * rho), atol=1e-13)


@pytest.mark.parametrize("d", [2, 3, 4])
@pytest.mark.parametrize("rho", [1e-9, 0.05, 0.7, 2.2, 9.0])
def test_sphere_fourier_matches_angular_quadrature(d, rho):
    assert sphere_fourier(d, rho) == pytest.approx(sphere_profile_quadrature(d, rho), abs=1e-11)


@pytest.mark.parametrize("d", [2, 3, 4])
def test_sphere_fourier_bounded(d):
    v = sphere_fourier(d, np.linspace(0, 100, 20001))
    assert np.all(np.abs(v) <= 1.0 + 1e-15)


def test_annulus_fourier_at_zero_is_measure():
    assert annulus_fourier(2, 0.25, 0.0) == pytest.approx(math.pi, rel=1e-15)
    for d in (2, 3, 4):
        for delta in (0.3, 0.1, 1e-3):
            assert annulus_fourier(d, delta, 0.0) == pytest.approx(annulus_measure(d, delta), rel=1e-13)


@pytest.mark.parametrize(
    "d, delta, rho",
    [(2, 0.25, 3.7), (2, 0.25, 0.4), (2, 0.01, 12.5), (3, 0.125, 2.3), (3, 0.4, 7.1), (4, 0.2, 1.1), (4, 0.05, 14.0)],
)
def test_annulus_fourier_matches_radial_quadrature(d, delta, rho):
    assert annulus_fourier(d, delta, rho) == pytest.approx(annulus_fourier_quadrature(d, delta, rho), abs=1e-8)


def test_annulus_fourier_rejects_bad_delta():
    with pytest.raises(ValueError):
        annulus_fourier(2, 0.5, 1.0)
    with pytest.raises(ValueError):
        annulus_fourier(2, 0.0, 1.0)


def test_normalised_envelope_d3():
    rho = np.linspace(0, 200, 40001)
    ratio = np.abs(annulus_fourier(3, 0.125, rho)) / annulus_measure(3, 0.125)
    c = np.max(ratio * (1 + 2 * np.pi * rho))
    assert np.isfinite(c) and c < 5.0


@pytest.mark.parametrize("d", [2, 3])
def test_decay_envelopes_finite(d):
    rho = np.linspace(1, 64, 4033)
    for delta in (0.25, 0.03125):
        e = decay_envelopes(d, delta, rho)
        assert 0 < e.envelope_a < 10
        # Unnormalised envelope: bounded independently of delta, not by 1.
        assert 0 < e.envelope_b < 50
        assert 0 < e.interpolated < 10
