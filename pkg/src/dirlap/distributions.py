"""Variate generation and densities for the distributions the samplers use.

Parameterizations follow the usual shrinkage-prior conventions:

* ``Gamma(shape, rate)`` and ``Exp(rate)``.
* ``iG(mu, lam)``: inverse Gaussian with mean ``mu`` and shape ``lam``.
* ``GiG(nu, gamma, xi)``: density proportional to
  ``x**(nu - 1) * exp(-(gamma * x + xi / x) / 2)`` on ``x > 0``.

The GiG normalizing constant uses the standard Bessel form

    int_0^inf x**(nu-1) exp(-(gamma x + xi/x)/2) dx
        = 2 * (xi / gamma)**(nu / 2) * K_nu(sqrt(gamma * xi)),

with ``K_nu`` the modified Bessel function of the second kind, evaluated in
log space so that orders like ``nu = -99`` with a tiny argument do not
overflow.

The scalar samplers are numba kernels that draw from a
:class:`numpy.random.Generator` passed in from Python, so a stream yields the
same numbers whether it is consumed here or by numpy directly.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numba as nb
import numpy as np
from scipy import integrate, special

from .rng import RngLike, as_generator

__all__ = [
    "GigParams",
    "InvGaussParams",
    "XI_FLOOR",
    "IG_MEAN_CAP",
    "log_bessel_k",
    "gig_log_density",
    "gig_mean",
    "gig_moment",
    "gig_sample",
    "invgauss_log_density",
    "invgauss_sample",
    "gamma_sample",
    "dirichlet_sample",
]

# Smallest xi handed to the GiG sampler; 2|theta| below this is clamped.
XI_FLOOR = 1e-300
# Largest inverse-Gaussian mean used; delta/|theta| above this is capped.
# mu**2 must stay finite for the transformation-with-roots method.
IG_MEAN_CAP = 1e150

_TINY = np.finfo(float).tiny

# Indices into the diagnostics counter array used by the chain kernels.
XI_CLAMP = 0
MU_CAP = 1

_jit = nb.njit(cache=True, error_model="numpy")


@dataclass(frozen=True)
class GigParams:
    nu: float
    gamma_rate: float
    xi: float

    def __post_init__(self) -> None:
        nu, g, xi = self.nu, self.gamma_rate, self.xi
        if not (math.isfinite(nu) and math.isfinite(g) and math.isfinite(xi)):
            raise ValueError("GiG parameters must be finite")
        if g < 0 or xi < 0:
            raise ValueError("GiG requires gamma_rate >= 0 and xi >= 0")
        if xi == 0 and not nu > 0:
            raise ValueError("GiG with xi = 0 needs nu > 0")
        if g == 0 and not nu < 0:
            raise ValueError("GiG with gamma_rate = 0 needs nu < 0")


@dataclass(frozen=True)
class InvGaussParams:
    mu: float
    lam: float

    def __post_init__(self) -> None:
        if not (self.mu > 0 and self.lam > 0) or not math.isfinite(self.lam):
            raise ValueError("inverse Gaussian requires mu > 0 and lam > 0")


# ---------------------------------------------------------------------------
# Bessel function and densities


def log_bessel_k(nu: float, z: float) -> float:
    """log K_nu(z) for z > 0.

    Uses the exponentially scaled scipy routine when it is representable and
    otherwise integrates ``K_nu(z) = int_0^inf exp(-z cosh t) cosh(nu t) dt``
    around its peak in log space.
    """
    if not z > 0:
        raise ValueError("log_bessel_k requires z > 0")
    nu = abs(float(nu))
    v = special.kve(nu, z)
    if math.isfinite(v) and v > 1e-300:
        return math.log(v) - z

    def log_integrand(t: float) -> float:
        # log cosh(nu t), written to avoid overflow of cosh
        lc = nu * t + math.log1p(math.exp(-2.0 * nu * t)) - math.log(2.0)
        return -z * math.cosh(t) + lc

    t_peak = math.asinh(nu / z) if nu > 0 else 0.0
    h0 = log_integrand(t_peak)
    # width of the peak ~ 1/sqrt(curvature); integrate well past it
    width = 1.0 / math.sqrt(max(z * math.cosh(t_peak), 1e-300))
    upper = t_peak + 50.0 * width + 50.0
    val, _ = integrate.quad(
        lambda t: math.exp(log_integrand(t) - h0),
        0.0,
        upper,
        points=[t_peak] if 0 < t_peak < upper else None,
        limit=500,
        epsabs=0.0,
        epsrel=1e-12,
    )
    return h0 + math.log(val)


def gig_log_normalizer(p: GigParams) -> float:
    """log of int_0^inf x**(nu-1) exp(-(gamma x + xi/x)/2) dx."""
    nu, g, xi = p.nu, p.gamma_rate, p.xi
    if xi == 0:
        return special.gammaln(nu) - nu * math.log(g / 2.0)
    if g == 0:
        return special.gammaln(-nu) + nu * math.log(xi / 2.0)
    omega = math.sqrt(g) * math.sqrt(xi)
    return math.log(2.0) + 0.5 * nu * (math.log(xi) - math.log(g)) + log_bessel_k(nu, omega)


def gig_log_density(x: float, p: GigParams) -> float:
    if not x > 0:
        raise ValueError("GiG density is supported on x > 0")
    kernel = (p.nu - 1.0) * math.log(x) - 0.5 * (p.gamma_rate * x + p.xi / x)
    return kernel - gig_log_normalizer(p)


def gig_mean(p: GigParams) -> float:
    """E[X] = sqrt(xi/gamma) K_{nu+1}(w) / K_nu(w), w = sqrt(gamma xi)."""
    nu, g, xi = p.nu, p.gamma_rate, p.xi
    if xi == 0:
        return 2.0 * nu / g
    if g == 0:
        return xi / 2.0 / (-nu - 1.0) if nu < -1 else math.inf
    omega = math.sqrt(g) * math.sqrt(xi)
    log_ratio = log_bessel_k(nu + 1.0, omega) - log_bessel_k(nu, omega)
    return math.exp(0.5 * (math.log(xi) - math.log(g)) + log_ratio)


def gig_moment(p: GigParams, k: float) -> float:
    """E[X^k] = (xi/gamma)^{k/2} K_{nu+k}(w) / K_nu(w) for xi, gamma > 0."""
    nu, g, xi = p.nu, p.gamma_rate, p.xi
    if xi == 0 or g == 0:
        raise ValueError("gig_moment needs gamma_rate > 0 and xi > 0")
    omega = math.sqrt(g) * math.sqrt(xi)
    log_ratio = log_bessel_k(nu + k, omega) - log_bessel_k(nu, omega)
    return math.exp(0.5 * k * (math.log(xi) - math.log(g)) + log_ratio)


def invgauss_log_density(x: float, p: InvGaussParams) -> float:
    if not x > 0:
        raise ValueError("inverse Gaussian density is supported on x > 0")
    mu, lam = p.mu, p.lam
    return 0.5 * (math.log(lam) - math.log(2.0 * math.pi) - 3.0 * math.log(x)) - lam * (x - mu) ** 2 / (
        2.0 * mu * mu * x
    )


# ---------------------------------------------------------------------------
# numba kernels


@_jit
def _std_gamma(shape, rng):
    """Gamma(shape, 1) that never returns exactly zero.

    For shape < 1 the draw is built in log space from
    Gamma(shape + 1) * U**(1/shape); results below the smallest normal double
    are raised to it.
    """
    if shape >= 1.0:
        g = rng.standard_gamma(shape)
    else:
        lg = math.log(rng.standard_gamma(shape + 1.0)) + math.log(rng.random()) / shape
        g = math.exp(lg)
    if g < _TINY:
        g = _TINY
    return g


@_jit
def _gamma_rate(shape, rate, rng):
    return _std_gamma(shape, rng) / rate


@_jit
def _invgauss(mu, lam, rng):
    """Transformation with multiple roots (Michael, Schucany and Haas).

    The smaller root is written as mu / (1 + r + sqrt(r (r + 2))) with
    r = mu y / (2 lam), which avoids the cancellation of the textbook form
    when mu >> lam.
    """
    z = rng.standard_normal()
    r = mu * z * z / (2.0 * lam)
    x1 = mu / (1.0 + r + math.sqrt(r * (r + 2.0)))
    if rng.random() * (mu + x1) <= mu:
        x = x1
    else:
        x = mu * (mu / x1)
    if x < _TINY:
        x = _TINY
    return x


@_jit
def _gig_mode(lam, omega):
    if lam >= 1.0:
        return (math.sqrt((lam - 1.0) * (lam - 1.0) + omega * omega) + (lam - 1.0)) / omega
    return omega / (math.sqrt((1.0 - lam) * (1.0 - lam) + omega * omega) + (1.0 - lam))


@_jit
def _gig_rou_shift(lam, omega, rng):
    # ratio of uniforms shifted by the mode; lam > 2 or omega > 3, or lam >= 1
    # with omega >= 0.5
    t = 0.5 * (lam - 1.0)
    s = 0.25 * omega
    xm = _gig_mode(lam, omega)
    nc = t * math.log(xm) - s * (xm + 1.0 / xm)
    a = -(2.0 * (lam + 1.0) / omega + xm)
    b = 2.0 * (lam - 1.0) * xm / omega - 1.0
    c = xm
    p = b - a * a / 3.0
    q = (2.0 * a * a * a) / 27.0 - (a * b) / 3.0 + c
    arg = -q / (2.0 * math.sqrt(-(p * p * p) / 27.0))
    arg = min(1.0, max(-1.0, arg))
    fi = math.acos(arg)
    fak = 2.0 * math.sqrt(-p / 3.0)
    y1 = fak * math.cos(fi / 3.0) - a / 3.0
    y2 = fak * math.cos(fi / 3.0 + 4.0 / 3.0 * math.pi) - a / 3.0
    uplus = (y1 - xm) * math.exp(t * math.log(y1) - s * (y1 + 1.0 / y1) - nc)
    uminus = (y2 - xm) * math.exp(t * math.log(y2) - s * (y2 + 1.0 / y2) - nc)
    while True:
        u = uminus + rng.random() * (uplus - uminus)
        v = rng.random()
        x = u / v + xm
        if x > 0.0 and math.log(v) <= t * math.log(x) - s * (x + 1.0 / x) - nc:
            return x


@_jit
def _gig_rou_noshift(lam, omega, rng):
    t = 0.5 * (lam - 1.0)
    s = 0.25 * omega
    xm = _gig_mode(lam, omega)
    nc = t * math.log(xm) - s * (xm + 1.0 / xm)
    ym = ((lam + 1.0) + math.sqrt((lam + 1.0) * (lam + 1.0) + omega * omega)) / omega
    um = math.exp(0.5 * (lam + 1.0) * math.log(ym) - s * (ym + 1.0 / ym) - nc)
    while True:
        u = um * rng.random()
        v = rng.random()
        x = u / v
        if x > 0.0 and math.log(v) <= t * math.log(x) - s * (x + 1.0 / x) - nc:
            return x


@_jit
def _gig_concave_hat(lam, omega, rng):
    """Rejection from a three-piece hat for 0 <= lam < 1 and small omega.

    Hat: constant on (0, x0], x**(lam-1) on (x0, 2/omega], exponential tail
    beyond. Areas are kept in log space so omega near 1e-150 is harmless.
    """
    xm = _gig_mode(lam, omega)
    x0 = omega / (1.0 - lam)
    logk0 = (lam - 1.0) * math.log(xm) - 0.5 * omega * (xm + 1.0 / xm)
    logA0 = logk0 + math.log(x0)
    two_over_w = 2.0 / omega
    if x0 >= two_over_w:
        logk1 = -np.inf
        logA1 = -np.inf
        x_tail = x0
        logk2 = (lam - 1.0) * math.log(x0)
        logA2 = logk2 + math.log(2.0) - 0.5 * omega * x0 - math.log(omega)
    else:
        logk1 = -omega
        if lam == 0.0:
            logA1 = logk1 + math.log(math.log(two_over_w / x0))
        else:
            ratio = math.exp(lam * (math.log(x0) - math.log(two_over_w)))
            logA1 = logk1 - math.log(lam) + lam * math.log(two_over_w) + math.log1p(-ratio)
        x_tail = two_over_w
        logk2 = (lam - 1.0) * math.log(two_over_w)
        logA2 = logk2 + math.log(2.0) - 1.0 - math.log(omega)
    m = max(logA0, max(logA1, logA2))
    A0 = math.exp(logA0 - m)
    A1 = math.exp(logA1 - m)
    A2 = math.exp(logA2 - m)
    atot = A0 + A1 + A2
    while True:
        v = atot * rng.random()
        if v <= A0:
            x = x0 * (v / A0)
            loghx = logk0
        elif v <= A0 + A1:
            u = (v - A0) / A1
            if lam == 0.0:
                x = x0 * math.exp(u * math.log(two_over_w / x0))
            else:
                lo = math.exp(lam * math.log(x0))
                hi = math.exp(lam * math.log(two_over_w))
                x = math.exp(math.log(lo + u * (hi - lo)) / lam)
            loghx = logk1 + (lam - 1.0) * math.log(x)
        else:
            u = (v - A0 - A1) / A2
            x = x_tail - two_over_w * math.log1p(-u)
            loghx = logk2 - 0.5 * omega * x
        if not x > 0.0:
            continue
        if math.log(rng.random()) + loghx <= (lam - 1.0) * math.log(x) - 0.5 * omega * (x + 1.0 / x):
            return x


@_jit
def _gig(nu, g, xi, rng):
    """One GiG(nu, g, xi) draw in the three-parameter form.

    Negative orders use X ~ GiG(nu, g, xi) <=> 1/X ~ GiG(-nu, xi, g). The
    positive-order draw is reduced to the two-parameter form
    GiG(lam, omega, omega) by scaling with sqrt(xi/g), except for lam >= 1
    and omega < 0.5, where rejection from Gamma(lam, g/2) with acceptance
    probability exp(-xi/(2x)) is exact and accepts with probability at least
    0.5 K_1(0.5) ~ 0.83.
    """
    if xi == 0.0:
        return _gamma_rate(nu, 0.5 * g, rng)
    if g == 0.0:
        return 1.0 / _gamma_rate(-nu, 0.5 * xi, rng)
    swap = nu < 0.0
    lam = -nu if swap else nu
    gg = xi if swap else g
    xx = g if swap else xi
    omega = math.sqrt(gg) * math.sqrt(xx)
    if lam >= 1.0 and omega < 0.5:
        while True:
            x = 2.0 * _std_gamma(lam, rng) / gg
            if math.log(rng.random()) <= -0.5 * xx / x:
                break
    else:
        if lam > 2.0 or omega > 3.0:
            y = _gig_rou_shift(lam, omega, rng)
        elif lam >= 1.0 - 2.25 * omega * omega or omega > 0.2:
            y = _gig_rou_noshift(lam, omega, rng)
        else:
            y = _gig_concave_hat(lam, omega, rng)
        x = (math.sqrt(xx) / math.sqrt(gg)) * y
    if swap:
        x = 1.0 / x
    if x < _TINY:
        x = _TINY
    return x


@_jit
def _gig_fill(nu, g, xi, rng, out):
    for i in range(out.shape[0]):
        out[i] = _gig(nu, g, xi, rng)
    return out


@_jit
def _invgauss_fill(mu, lam, rng, out):
    for i in range(out.shape[0]):
        out[i] = _invgauss(mu, lam, rng)
    return out


@_jit
def _gamma_fill(shape, rate, rng, out):
    for i in range(out.shape[0]):
        out[i] = _gamma_rate(shape, rate, rng)
    return out


@_jit
def _log_gamma_fill(conc, rng, out):
    # log Gamma(conc_i, 1) draws, exact in log space even for tiny shapes
    for i in range(conc.shape[0]):
        a = conc[i]
        if a >= 1.0:
            out[i] = math.log(rng.standard_gamma(a))
        else:
            out[i] = math.log(rng.standard_gamma(a + 1.0)) + math.log(rng.random()) / a
    return out


# ---------------------------------------------------------------------------
# public samplers


def _draw(fill, size, *args):
    n = 1 if size is None else int(np.prod(size))
    out = fill(*args, np.empty(n))
    return float(out[0]) if size is None else out.reshape(size)


def gig_sample(p: GigParams, rng: RngLike, size=None):
    gen = as_generator(rng)
    return _draw(_gig_fill, size, float(p.nu), float(p.gamma_rate), float(p.xi), gen)


def invgauss_sample(p: InvGaussParams, rng: RngLike, size=None):
    gen = as_generator(rng)
    return _draw(_invgauss_fill, size, float(p.mu), float(p.lam), gen)


def gamma_sample(shape: float, rate: float, rng: RngLike, size=None):
    if not (shape > 0 and rate > 0) or not (math.isfinite(shape) and math.isfinite(rate)):
        raise ValueError("gamma requires finite shape > 0 and rate > 0")
    gen = as_generator(rng)
    return _draw(_gamma_fill, size, float(shape), float(rate), gen)


def dirichlet_sample(conc: Sequence[float], rng: RngLike) -> np.ndarray:
    """Simplex draw via normalized gammas, normalized in log space."""
    c = np.asarray(conc, dtype=float)
    if c.ndim != 1 or c.size == 0 or not np.all(c > 0) or not np.all(np.isfinite(c)):
        raise ValueError("Dirichlet concentrations must be a non-empty vector of positive reals")
    gen = as_generator(rng)
    lg = _log_gamma_fill(c, gen, np.empty(c.size))
    w = np.exp(lg - lg.max())
    return w / w.sum()
