"""Numba kernels for the local-scale full conditionals.

Shared by the normal-means and regression samplers. ``sigma`` divides
``theta`` everywhere (pass 1.0 for the normal-means model). All kernels fill
their output in place and bump the guard counters in ``counts``.
"""
from __future__ import annotations

import math

import numba as nb
import numpy as np

from .distributions import IG_MEAN_CAP, MU_CAP, XI_CLAMP, XI_FLOOR, _gig, _invgauss, _std_gamma

_jit = nb.njit(cache=True, error_model="numpy")
_TINY = np.finfo(float).tiny
_LOG_2 = math.log(2.0)
_LOG_MU_CAP = math.log(IG_MEAN_CAP)
# below this, GiG(nu < 0, 1, xi) is xi / (2 G), G ~ Gamma(-nu), to double precision
_LOG_XI_ASYMPTOTIC = math.log(1e-200)


@_jit
def shrink(psi, scale):
    # {1 + 1/(psi scale^2)}^{-1}
    return 1.0 / (1.0 + 1.0 / (psi * scale * scale))


@_jit
def draw_theta_nm(y, psi, scale, rng, out):
    for i in range(y.shape[0]):
        z2 = shrink(psi[i], scale[i])
        out[i] = z2 * y[i] + math.sqrt(z2) * rng.standard_normal()
    return out


@_jit
def _xi(abs_theta, sigma, counts):
    xi = 2.0 * abs_theta / sigma
    if not xi >= XI_FLOOR:
        counts[XI_CLAMP] += 1
        xi = XI_FLOOR
    return xi


@_jit
def draw_delta(theta, a, sigma, rng, out, counts):
    """delta_j ~ GiG(a - 1, 1, 2|theta_j|/sigma)."""
    for j in range(theta.shape[0]):
        out[j] = _gig(a - 1.0, 1.0, _xi(abs(theta[j]), sigma, counts), rng)
    return out


@_jit
def draw_psi(theta, scale, sigma, rng, out, counts):
    """psi_j = 1/X_j with X_j ~ iG(sigma scale_j/|theta_j|, 1)."""
    for j in range(theta.shape[0]):
        mu = sigma * scale[j] / abs(theta[j])
        if not mu <= IG_MEAN_CAP:
            counts[MU_CAP] += 1
            mu = IG_MEAN_CAP
        out[j] = 1.0 / _invgauss(mu, 1.0, rng)
    return out


@_jit
def draw_tau(theta, phi, a, sigma, rng, counts):
    """tau ~ GiG(dim (a - 1), 1, 2 sum_j |theta_j|/(sigma phi_j))."""
    s = 0.0
    for j in range(theta.shape[0]):
        s += abs(theta[j]) / phi[j]
    return _gig(theta.shape[0] * (a - 1.0), 1.0, _xi(s, sigma, counts), rng)


@_jit
def draw_phi(theta, a, sigma, rng, out, counts):
    """T_j ~ GiG(a - 1, 1, 2|theta_j|/sigma), phi = T / sum(T)."""
    draw_delta(theta, a, sigma, rng, out, counts)
    total = out.sum()
    for j in range(out.shape[0]):
        v = out[j] / total
        out[j] = v if v > _TINY else _TINY
    return out


# ---------------------------------------------------------------------------
# legacy scan on log magnitudes
#
# In the legacy scan tau pools |theta_j| / phi_j over all coordinates. Under
# small a the null theta_j and phi_j shrink together far below the double
# range while their ratio stays O(1); on plain doubles both underflow, the
# ratio drops out of the tau update and the chain collapses onto zero. The
# kernels below carry log|theta|, log phi and log tau instead.


@_jit
def log_gig(nu, log_xi, rng):
    """log of a GiG(nu, 1, xi) draw for nu <= 0, given log(xi)."""
    if log_xi < _LOG_XI_ASYMPTOTIC:
        # 1/X ~ GiG(-nu, xi, 1) -> Gamma(-nu, rate xi/2) as xi -> 0
        return log_xi - _LOG_2 - math.log(_std_gamma(-nu, rng))
    return math.log(_gig(nu, 1.0, math.exp(log_xi), rng))


@_jit
def _logsumexp(v):
    m = v.max()
    acc = 0.0
    for x in v:
        acc += math.exp(x - m)
    return m + math.log(acc)


@_jit
def draw_theta_nm_log(y, psi, log_scale, rng, theta, log_abs):
    """draw_theta_nm with scale = exp(log_scale); also fills log|theta|.

    theta = sqrt(z2) (sqrt(z2) y + N(0, 1)), so log|theta| stays finite
    when z2 underflows.
    """
    for i in range(y.shape[0]):
        v = math.log(psi[i]) + 2.0 * log_scale[i]
        # log z2 = log sigmoid(v)
        lz2 = -math.log1p(math.exp(-v)) if v > 0.0 else v - math.log1p(math.exp(v))
        r = math.exp(0.5 * lz2) * y[i] + rng.standard_normal()
        log_abs[i] = 0.5 * lz2 + math.log(abs(r))
        theta[i] = math.copysign(math.exp(log_abs[i]), r)
    return theta


@_jit
def legacy_local_steps_log(log_abs, psi, log_phi, log_tau, a, log_sigma, rng, counts):
    """Local updates of the legacy scan, in their historical order.

    psi is drawn with the *previous* (tau, phi), tau with the previous phi,
    and phi last from theta alone. ``log_abs`` is log|theta|. Updates psi
    and log_phi in place and returns the new log tau.
    """
    n = log_abs.shape[0]
    for j in range(n):
        lmu = log_sigma + log_tau + log_phi[j] - log_abs[j]
        if not lmu <= _LOG_MU_CAP:
            counts[MU_CAP] += 1
            lmu = _LOG_MU_CAP
        psi[j] = 1.0 / _invgauss(math.exp(lmu), 1.0, rng)
    log_tau = log_gig(n * (a - 1.0), _LOG_2 + _logsumexp(log_abs - log_phi) - log_sigma, rng)
    log_t = np.empty(n)
    for j in range(n):
        log_t[j] = log_gig(a - 1.0, _LOG_2 + log_abs[j] - log_sigma, rng)
    log_phi[:] = log_t - _logsumexp(log_t)
    return log_tau


@_jit
def legacy_local_steps(theta, psi, phi, tau, a, sigma, rng, counts):
    """legacy_local_steps_log on plain values; updates psi and phi in place, returns tau."""
    log_phi = np.log(phi)
    log_tau = legacy_local_steps_log(np.log(np.abs(theta)), psi, log_phi, math.log(tau), a, math.log(sigma),
                                     rng, counts)
    for j in range(phi.shape[0]):
        phi[j] = max(math.exp(log_phi[j]), _TINY)
    return max(math.exp(log_tau), _TINY)


@_jit
def exact_local_steps(theta, psi, delta, a, sigma, rng, counts):
    """delta | theta, then psi | theta, delta: an exact draw of (psi, delta) | theta."""
    draw_delta(theta, a, sigma, rng, delta, counts)
    draw_psi(theta, delta, sigma, rng, psi, counts)
