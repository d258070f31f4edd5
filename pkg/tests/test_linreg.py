import math

import numpy as np
import pytest

from dirlap.linreg import (
    RegData,
    RegState,
    VariancePrior,
    draw_delta_reg,
    draw_phi_reg_flawed,
    draw_psi_reg,
    draw_sigma2_marginal,
    draw_tau_reg_flawed,
    draw_theta_given_sigma2,
    initial_state,
    run_chain,
    scan_correct_reg,
    scan_original_reg,
)
from dirlap.normal_means import draw_delta_given_theta, draw_tau_given_theta_phi
from dirlap.prior import DeltaState
from dirlap.rng import RngStream
from dirlap.validation import batch_means_mcse, ks_two_sample

X2 = np.array([[1.0, 0.5], [0.3, 1.0]])
Y2 = np.array([2.0, -1.0])
PRIOR_3_2 = VariancePrior(3.0, 2.0)

# fixed D = diag(1.5, 0.4): means of the normal-inverse-gamma conditional by 3-D quadrature
NIG_THETA = (1.07187894, -0.22866751)
NIG_SIGMA2 = 1.19630097
# full posterior under the DL prior with a = 1/2, (s, r) = (3, 2): 3-D quadrature over (theta1, theta2, sigma^2)
POST_THETA = (0.714389, -0.169953)
POST_SIGMA2 = 1.297584


def mean_ok(x, target, k=4.0):
    return abs(np.mean(x) - target) <= k * np.std(x, ddof=1) / math.sqrt(len(x))


def local(psi, delta):
    return DeltaState(np.asarray(psi, dtype=float), np.asarray(delta, dtype=float))


def test_data_and_prior_validation():
    with pytest.raises(ValueError):
        RegData(np.ones((3, 2)), np.ones(2))
    with pytest.raises(ValueError):
        VariancePrior(0.0, 1.0)
    with pytest.raises(ValueError):
        RegState(np.zeros(2), 0.0, local([1, 1], [1, 1]))


def test_sigma2_zero_design_and_zero_data():
    g = RngStream(1).generator()
    d = RegData(np.zeros((4, 1)), np.array([1.0, -2.0, 0.5, 1.5]))
    x = np.array([draw_sigma2_marginal(d, local([1.0], [1.0]), PRIOR_3_2, g) for _ in range(100_000)])
    # iGa(s + n/2, r + sum y^2 / 2)
    assert mean_ok(x, (2.0 + 0.5 * np.sum(d.y**2)) / (3.0 + 2.0 - 1.0))
    d0 = RegData(np.random.default_rng(0).standard_normal((4, 3)), np.zeros(4))
    x = np.array([draw_sigma2_marginal(d0, local([1.0] * 3, [2.0] * 3), PRIOR_3_2, g) for _ in range(100_000)])
    assert mean_ok(x, 2.0 / (3.0 + 2.0 - 1.0))


def test_collapsed_block_matches_nig_quadrature():
    d = RegData(X2, Y2)
    # D = psi delta^2 = (1.5, 0.4)
    loc = local([1.5, 0.4], [1.0, 1.0])
    g = RngStream(2).generator()
    s2 = np.empty(100_000)
    th = np.empty((100_000, 2))
    for k in range(s2.size):
        s2[k] = draw_sigma2_marginal(d, loc, PRIOR_3_2, g)
        th[k] = draw_theta_given_sigma2(d, s2[k], loc, g)
    assert mean_ok(s2, NIG_SIGMA2)
    assert mean_ok(th[:, 0], NIG_THETA[0])
    assert mean_ok(th[:, 1], NIG_THETA[1])


def test_theta_identity_design():
    n = 3
    d = RegData(np.eye(n), np.array([2.0, -1.0, 4.0]))
    g = RngStream(3).generator()
    x = np.array([draw_theta_given_sigma2(d, 2.0, local([1.0] * n, [1.0] * n), g) for _ in range(50_000)])
    np.testing.assert_allclose(x.mean(axis=0), d.y / 2, atol=4 * math.sqrt(1.0 / 50_000) * 1.2)
    np.testing.assert_allclose(x.var(axis=0), 1.0, rtol=0.03)


@pytest.mark.parametrize("method", ["fast", "direct"])
def test_theta_degenerate_prior_scale(method):
    rng = np.random.default_rng(4)
    d = RegData(rng.standard_normal((3, 6)), rng.standard_normal(3))
    loc = local([1.0] * 6, [1.0, 1.0, 1e-9, 1.0, 1.0, 1.0])
    x = np.array([draw_theta_given_sigma2(d, 1.0, loc, RngStream(5, k), method) for k in range(200)])
    assert np.max(np.abs(x[:, 2])) < 1e-7


def test_theta_method_validation():
    d = RegData(X2, Y2)
    with pytest.raises(ValueError):
        draw_theta_given_sigma2(d, 1.0, local([1, 1], [1, 1]), 0, method="qr")
    with pytest.raises(ValueError):
        draw_theta_given_sigma2(d, -1.0, local([1, 1], [1, 1]), 0)


def test_fast_matches_direct_small():
    rng = np.random.default_rng(6)
    d = RegData(rng.standard_normal((3, 6)), rng.standard_normal(3))
    loc = local(rng.exponential(2.0, 6), rng.gamma(0.5, 2.0, 6))
    n = 20_000
    g1, g2 = RngStream(7).generator(), RngStream(8).generator()
    a = np.array([draw_theta_given_sigma2(d, 1.7, loc, g1, "fast") for _ in range(n)])
    b = np.array([draw_theta_given_sigma2(d, 1.7, loc, g2, "direct") for _ in range(n)])
    for j in range(6):
        assert not ks_two_sample(a[:, j], b[:, j]).rejects(1e-3)


def test_delta_reg_reduces_and_scales():
    th = np.array([0.8, -2.0])
    a = np.array([draw_delta_reg(th, 1.0, 0.5, RngStream(9, k)) for k in range(20_000)])
    b = np.array([draw_delta_given_theta(th, 0.5, RngStream(9, k)) for k in range(20_000)])
    np.testing.assert_array_equal(a, b)
    c = 3.0
    s = np.array([draw_delta_reg(c * th, c * c, 0.5, RngStream(10, k)) for k in range(20_000)])
    assert not ks_two_sample(a[:, 1], s[:, 1]).rejects(1e-3)
    # |theta|/sigma = 2: GiG(-1/2, 1, 4) has mean 2 (quadrature)
    x = np.array([draw_delta_reg(np.array([4.0]), 4.0, 0.5, RngStream(11, k))[0] for k in range(50_000)])
    assert mean_ok(x, 2.0)


def test_psi_reg_moment():
    # mu = sigma delta / |theta| = 1: E[psi] = 1/mu + 1/lam = 2
    x = np.array([draw_psi_reg(np.array([2.0]), 4.0, np.array([1.0]), RngStream(12, k))[0] for k in range(50_000)])
    assert mean_ok(x, 2.0)


def test_tau_phi_reg_reduce_to_normal_means():
    th, phi = np.array([0.5, -1.2, 3.0]), np.full(3, 1 / 3)
    a = [draw_tau_reg_flawed(th, 1.0, phi, 0.5, RngStream(13, k)) for k in range(2000)]
    b = [draw_tau_given_theta_phi(th, phi, 0.5, RngStream(13, k)) for k in range(2000)]
    np.testing.assert_array_equal(a, b)
    v = draw_phi_reg_flawed(th, 2.0, 0.5, RngStream(14))
    assert abs(v.sum() - 1.0) < 1e-12 and np.all(v > 0)
    t = draw_tau_reg_flawed(np.full(100, 1e-3), 1.0, np.full(100, 0.01), 0.01, RngStream(15))
    assert math.isfinite(t) and t > 0


def test_scans_are_deterministic():
    rng = np.random.default_rng(16)
    d = RegData(rng.standard_normal((5, 8)), rng.standard_normal(5))
    out = []
    for _ in range(2):
        g = RngStream(17).generator()
        sc = initial_state(d, 0.5, "correct", g)
        so = initial_state(d, 0.5, "original", g)
        for _ in range(100):
            sc = scan_correct_reg(sc, d, 0.5, VariancePrior(), g)
            so = scan_original_reg(so, d, 0.5, VariancePrior(), g)
        out.append((sc.theta, sc.sigma2, so.theta, so.local.tau))
    np.testing.assert_array_equal(out[0][0], out[1][0])
    np.testing.assert_array_equal(out[0][2], out[1][2])
    assert out[0][1] == out[1][1] and out[0][3] == out[1][3]


def test_scans_require_matching_state():
    d = RegData(X2, Y2)
    sc = initial_state(d, 0.5, "correct", 0)
    so = initial_state(d, 0.5, "original", 0)
    with pytest.raises(TypeError):
        scan_correct_reg(so, d, 0.5, VariancePrior(), 0)
    with pytest.raises(TypeError):
        scan_original_reg(sc, d, 0.5, VariancePrior(), 0)


def test_tiny_posterior_matches_quadrature():
    d = RegData(X2, Y2)
    store = run_chain(d, 0.5, "correct", 205_000, 5000, RngStream(18), PRIOR_3_2)
    for j in range(2):
        x = store.theta[j]
        assert abs(x.mean() - POST_THETA[j]) <= 3 * batch_means_mcse(x)
    s2 = store.extras["sigma2"]
    assert abs(s2.mean() - POST_SIGMA2) <= 3 * batch_means_mcse(s2)


def test_run_chain_outputs():
    rng = np.random.default_rng(19)
    d = RegData(rng.standard_normal((4, 12)), rng.standard_normal(4))
    s = run_chain(d, 0.1, "original", 300, 100, RngStream(20))
    assert s.theta.shape == (12, 200) and s.extras["sigma2"].shape == (200,)
    s = run_chain(d, 0.1, "correct", 300, 100, RngStream(20), init="prior")
    assert np.all(np.isfinite(s.theta))
    with pytest.raises(ValueError):
        run_chain(d, 0.1, "correct", 10, 10, 0)
