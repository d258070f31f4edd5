import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, special

from dirlap.distributions import (
    GigParams,
    InvGaussParams,
    dirichlet_sample,
    gamma_sample,
    gig_log_density,
    gig_log_normalizer,
    gig_mean,
    gig_sample,
    invgauss_log_density,
    invgauss_sample,
    log_bessel_k,
)
from dirlap.rng import RngStream
from dirlap.validation import gig_total_mass, ks_two_sample

N = 100_000

# E[X] and E[log X] by adaptive quadrature of x * density (frozen)
MEAN_NEG_HALF_4_1 = 0.4999999999999999
LOGMEAN_STRESS = -11.497816173680745  # nu=-99, gamma=1, xi=2e-3


def within(samples, target, k=4.0):
    se = np.std(samples, ddof=1) / math.sqrt(len(samples))
    return abs(np.mean(samples) - target) <= k * se


# -- parameter validation ---------------------------------------------------


@pytest.mark.parametrize("nu,g,xi", [(0.0, 1.0, 0.0), (-1.0, 1.0, 0.0), (1.0, 0.0, 1.0), (1.0, -1.0, 1.0),
                                     (1.0, 1.0, -1.0), (math.nan, 1.0, 1.0)])
def test_gig_params_reject_invalid(nu, g, xi):
    with pytest.raises(ValueError):
        GigParams(nu, g, xi)


@pytest.mark.parametrize("mu,lam", [(0.0, 1.0), (1.0, 0.0), (-1.0, 1.0)])
def test_invgauss_params_reject_invalid(mu, lam):
    with pytest.raises(ValueError):
        InvGaussParams(mu, lam)


def test_density_domain_errors():
    with pytest.raises(ValueError):
        gig_log_density(0.0, GigParams(1.0, 1.0, 1.0))
    with pytest.raises(ValueError):
        invgauss_log_density(-1.0, InvGaussParams(1.0, 1.0))


# -- densities --------------------------------------------------------------


def test_gig_reduces_to_exponential():
    assert gig_log_density(1.0, GigParams(1.0, 2.0, 0.0)) == pytest.approx(-1.0, abs=1e-12)


@pytest.mark.parametrize("mu,lam", [(1.0, 1.0), (3.0, 0.5), (0.2, 7.0)])
def test_gig_matches_invgauss_density(mu, lam):
    p = GigParams(-0.5, lam / mu**2, lam)
    for x in (mu, 0.3 * mu, 2.5 * mu):
        assert gig_log_density(x, p) == pytest.approx(invgauss_log_density(x, InvGaussParams(mu, lam)), abs=1e-10)


def test_gig_normalizes_example():
    assert gig_total_mass(GigParams(-0.99, 1.0, 0.4)) == pytest.approx(1.0, abs=1e-6)


@pytest.mark.parametrize("nu", [-99.0, -0.99, -0.5, 0.5, 2.0])
@pytest.mark.parametrize("g", [0.1, 1.0, 10.0])
@pytest.mark.parametrize("xi", [1e-8, 0.1, 1.0, 10.0])
def test_gig_normalizes_on_grid(nu, g, xi):
    assert gig_total_mass(GigParams(nu, g, xi)) == pytest.approx(1.0, abs=1e-6)


@pytest.mark.parametrize("mu,lam", [(1.0, 1.0), (1e3, 0.5), (0.01, 20.0)])
def test_invgauss_normalizes(mu, lam):
    p = InvGaussParams(mu, lam)
    tot = integrate.quad(lambda u: math.exp(invgauss_log_density(math.exp(u), p) + u), -60, 60, limit=400,
                         points=[math.log(mu)])[0]
    assert tot == pytest.approx(1.0, abs=1e-6)


def test_log_bessel_k_matches_scipy():
    for nu, z in [(0.5, 1.0), (3.0, 0.2), (-2.5, 7.0), (0.0, 50.0)]:
        assert log_bessel_k(nu, z) == pytest.approx(math.log(special.kv(nu, z)), rel=1e-12)


def test_log_bessel_k_beyond_double_range():
    # small-argument asymptote K_nu(z) ~ Gamma(nu)/2 (2/z)^nu, relative error O(z^2/nu)
    nu, z = 99.0, 1e-3
    ref = special.gammaln(nu) - math.log(2.0) + nu * math.log(2.0 / z)
    assert log_bessel_k(nu, z) == pytest.approx(ref, rel=1e-9)
    assert log_bessel_k(nu, z) == log_bessel_k(-nu, z)


def test_gig_mean_bessel_ratio_matches_quadrature():
    assert gig_mean(GigParams(-0.5, 4.0, 1.0)) == pytest.approx(MEAN_NEG_HALF_4_1, rel=1e-10)


@settings(max_examples=40, deadline=None)
@given(nu=st.floats(-20, 20), g=st.floats(0.05, 20), xi=st.floats(0.05, 20), c=st.floats(0.1, 10))
def test_gig_scaling_identity_for_density_and_mean(nu, g, xi, c):
    # cX ~ GiG(nu, gamma/c, c xi)
    p, q = GigParams(nu, g, xi), GigParams(nu, g / c, c * xi)
    x = 0.7
    assert gig_log_density(c * x, q) == pytest.approx(gig_log_density(x, p) - math.log(c), abs=1e-8)
    assert gig_mean(q) == pytest.approx(c * gig_mean(p), rel=1e-8)


@settings(max_examples=30, deadline=None)
@given(nu=st.floats(-5, 5), z=st.floats(0.01, 30))
def test_log_normalizer_is_log_of_integral(nu, z):
    p = GigParams(nu, 1.0, z * z)
    lo = gig_log_normalizer(p)
    assert gig_total_mass(p) == pytest.approx(1.0, abs=1e-7)
    assert math.isfinite(lo)


# -- samplers ---------------------------------------------------------------


def test_gig_exponential_case():
    x = gig_sample(GigParams(1.0, 2.0, 0.0), RngStream(1), N)
    assert abs(np.mean(x) - 1.0) < 0.01


def test_gig_inverse_gaussian_case_mean():
    x = gig_sample(GigParams(-0.5, 4.0, 1.0), RngStream(2), N)
    assert within(x, MEAN_NEG_HALF_4_1)


def test_gig_stress_case():
    x = gig_sample(GigParams(-99.0, 1.0, 2e-3), RngStream(3), N)
    assert np.all(np.isfinite(x)) and np.all(x > 0)
    assert within(np.log(x), LOGMEAN_STRESS)


def test_gig_tiny_xi_stays_positive():
    x = gig_sample(GigParams(-0.99, 1.0, 1e-300), RngStream(4), 10_000)
    assert np.all(x > 0) and np.all(np.isfinite(x))


def test_gig_reduction_gamma_ks():
    x = gig_sample(GigParams(2.5, 3.0, 0.0), RngStream(5), N)
    y = np.random.default_rng(5).gamma(2.5, 2.0 / 3.0, N)
    assert not ks_two_sample(x, y).rejects(1e-3)


def test_gig_reduction_invgauss_ks():
    mu, lam = 2.0, 3.0
    x = gig_sample(GigParams(-0.5, lam / mu**2, lam), RngStream(6), N)
    y = invgauss_sample(InvGaussParams(mu, lam), RngStream(7), N)
    assert not ks_two_sample(x, y).rejects(1e-3)


def test_gig_scaling_ks():
    c = 3.7
    x = c * gig_sample(GigParams(-1.3, 0.8, 2.0), RngStream(8), N)
    y = gig_sample(GigParams(-1.3, 0.8 / c, 2.0 * c), RngStream(9), N)
    assert not ks_two_sample(x, y).rejects(1e-3)


def test_invgauss_moments():
    x = invgauss_sample(InvGaussParams(1.0, 1.0), RngStream(10), N)
    assert abs(np.mean(x) - 1.0) < 0.02 and within(x, 1.0)
    x = invgauss_sample(InvGaussParams(3.0, 1.0), RngStream(11), N)
    assert abs(np.mean(1 / x) - 4.0 / 3.0) < 0.02 and within(1 / x, 4.0 / 3.0)


def test_invgauss_huge_mean():
    x = invgauss_sample(InvGaussParams(1e6, 1.0), RngStream(12), N)
    assert np.all(x > 0) and np.all(np.isfinite(x))
    # E[1/X] = 1/mu + 1/lam
    assert within(1 / x, 1e-6 + 1.0)


def test_gamma_moments():
    x = gamma_sample(1.0, 0.5, RngStream(13), N)
    assert abs(np.mean(x) - 2.0) < 0.03
    x = gamma_sample(0.01, 0.5, RngStream(14), N)
    assert abs(np.mean(x) - 0.02) < 0.002
    assert np.all(x > 0) and np.all(x >= np.finfo(float).tiny)


def test_gamma_parameter_identity():
    a = gamma_sample(100 * (1 / 100), 0.5, RngStream(15), 1000)
    b = gamma_sample(1.0, 0.5, RngStream(15), 1000)
    np.testing.assert_array_equal(a, b)


def test_gamma_rejects_bad_params():
    with pytest.raises(ValueError):
        gamma_sample(0.0, 1.0, RngStream(0))
    with pytest.raises(ValueError):
        gamma_sample(1.0, -1.0, RngStream(0))


def test_dirichlet_moments():
    g = RngStream(16).generator()
    x = np.array([dirichlet_sample([5.0, 5.0], g)[0] for _ in range(N)])
    assert abs(x.mean() - 0.5) < 0.01
    x = np.array([dirichlet_sample([1.0, 1.0, 1.0], g) for _ in range(N)])
    cov = np.cov(x.T)
    assert cov[0, 1] == pytest.approx(-1 / 36, abs=2e-3)
    np.testing.assert_allclose(x.sum(axis=1), 1.0, atol=1e-12)


def test_dirichlet_small_concentration():
    g = RngStream(17).generator()
    for _ in range(1000):
        v = dirichlet_sample([0.01, 0.01], g)
        assert np.all(np.isfinite(v)) and abs(v.sum() - 1.0) < 1e-12


def test_dirichlet_rejects_bad_concentration():
    with pytest.raises(ValueError):
        dirichlet_sample([1.0, 0.0], RngStream(0))


@pytest.mark.parametrize("draw", [
    lambda r: gig_sample(GigParams(-0.7, 1.0, 0.3), r, 50),
    lambda r: invgauss_sample(InvGaussParams(2.0, 1.0), r, 50),
    lambda r: gamma_sample(0.3, 0.5, r, 50),
    lambda r: dirichlet_sample([0.5] * 5, r),
])
def test_samplers_are_reproducible(draw):
    np.testing.assert_array_equal(draw(RngStream(42, 7)), draw(RngStream(42, 7)))
    assert not np.array_equal(draw(RngStream(42, 7)), draw(RngStream(42, 8)))
