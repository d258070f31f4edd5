"""Gibbs samplers for y = X theta + N(0, sigma^2 I) under the DL prior.

Prior: theta | sigma^2, psi, delta ~ N_p(0, sigma^2 D) with
D = diag(psi_j delta_j^2) and sigma^2 ~ InvGamma(s, r).

The first update of both scans draws (theta, sigma^2) jointly: sigma^2 from its
theta-marginal conditional

    sigma^2 | psi, delta, y ~ InvGamma(s + n/2, r + y' M^{-1} y / 2),
    M = I_n + X D X',

then theta | sigma^2 ~ N(A^{-1} X'y, sigma^2 A^{-1}) with A = X'X + D^{-1}.
For p > n the theta draw uses the O(n^2 p) algorithm of Bhattacharya,
Chakraborty and Mallick (2016) on the scaled coefficients theta/sigma, which
shares the Cholesky factor of M with the sigma^2 draw. For p <= n the
correct scan factorizes A directly; the legacy scan always uses the
structured draw, which lets it carry log|theta| (see ``_conditionals``).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numba as nb
import numpy as np

from . import _conditionals as K
from .prior import DeltaState, DlHyper, TauPhiState, from_delta, prior_sample
from .rng import RngLike, as_generator
from .store import Diagnostics, SampleStore, new_counts

_jit = nb.njit(cache=True, error_model="numpy")
_D_FLOOR = 1e-300
_TINY = np.finfo(float).tiny


@dataclass(frozen=True)
class RegData:
    X: np.ndarray
    y: np.ndarray

    def __post_init__(self) -> None:
        X = np.ascontiguousarray(self.X, dtype=float)
        y = np.ascontiguousarray(self.y, dtype=float)
        if X.ndim != 2 or y.ndim != 1 or X.shape[0] != y.size or y.size < 1 or X.shape[1] < 1:
            raise ValueError("X must be n x p and y of length n")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
            raise ValueError("X and y must be finite")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]


@dataclass(frozen=True)
class RegState:
    theta: np.ndarray
    sigma2: float
    local: Union[DeltaState, TauPhiState]

    def __post_init__(self) -> None:
        object.__setattr__(self, "theta", np.asarray(self.theta, dtype=float))
        if not self.sigma2 > 0:
            raise ValueError("sigma2 must be positive")


@dataclass(frozen=True)
class VariancePrior:
    s: float = 0.1
    r: float = 0.1

    def __post_init__(self) -> None:
        if not (self.s > 0 and self.r > 0):
            raise ValueError("inverse-gamma prior needs s > 0 and r > 0")


# ---------------------------------------------------------------------------
# kernels


@_jit
def _prior_diag(psi, scale):
    d = psi * scale * scale
    for j in range(d.shape[0]):
        if not d[j] >= _D_FLOOR:
            d[j] = _D_FLOOR
    return d


@_jit
def _chol_M(X, d):
    M = (X * d) @ X.T
    for i in range(M.shape[0]):
        M[i, i] += 1.0
    return np.linalg.cholesky(M)


@_jit
def _forward(L, b):
    # solve L z = b
    n = b.shape[0]
    z = np.empty(n)
    for i in range(n):
        acc = b[i]
        for k in range(i):
            acc -= L[i, k] * z[k]
        z[i] = acc / L[i, i]
    return z


@_jit
def _backward(L, z):
    # solve L' w = z
    n = z.shape[0]
    w = np.empty(n)
    for i in range(n - 1, -1, -1):
        acc = z[i]
        for k in range(i + 1, n):
            acc -= L[k, i] * w[k]
        w[i] = acc / L[i, i]
    return w


@_jit
def _inv_gamma(shape, rate, rng):
    return rate / rng.standard_gamma(shape)


@_jit
def _sigma2_from_quad(quad, n, s, r, rng):
    return _inv_gamma(s + 0.5 * n, r + 0.5 * quad, rng)


@_jit
def _theta_fast(X, y, d, sigma, L, rng):
    # eta = theta / sigma has prior N(0, D) and data y/sigma ~ N(X eta, I)
    n, p = X.shape
    u = np.empty(p)
    for j in range(p):
        u[j] = math.sqrt(d[j]) * rng.standard_normal()
    e = np.empty(n)
    for i in range(n):
        e[i] = rng.standard_normal()
    rhs = y / sigma - (X @ u + e)
    w = _backward(L, _forward(L, rhs))
    return sigma * (u + d * (X.T @ w))


@_jit
def _theta_fast_log(X, y, log_d, sigma, L, rng, theta, log_abs):
    # as _theta_fast, with theta_j / sigma = sqrt(d_j) (z_j + sqrt(d_j) (X'w)_j) kept in log form
    n, p = X.shape
    z = np.empty(p)
    u = np.empty(p)
    for j in range(p):
        z[j] = rng.standard_normal()
        u[j] = math.exp(0.5 * log_d[j]) * z[j]
    e = np.empty(n)
    for i in range(n):
        e[i] = rng.standard_normal()
    rhs = y / sigma - (X @ u + e)
    xw = X.T @ _backward(L, _forward(L, rhs))
    log_sigma = math.log(sigma)
    for j in range(p):
        r = z[j] + math.exp(0.5 * log_d[j]) * xw[j]
        log_abs[j] = log_sigma + 0.5 * log_d[j] + math.log(abs(r))
        theta[j] = math.copysign(math.exp(log_abs[j]), r)
    return theta


@_jit
def _theta_direct(X, y, d, sigma, rng):
    p = X.shape[1]
    A = X.T @ X
    for j in range(p):
        A[j, j] += 1.0 / d[j]
    La = np.linalg.cholesky(A)
    mean = _backward(La, _forward(La, X.T @ y))
    z = np.empty(p)
    for j in range(p):
        z[j] = rng.standard_normal()
    return mean + sigma * _backward(La, z)


@_jit
def _quad_form(X, y, d, L):
    z = _forward(L, y)
    return z @ z


@_jit
def _block_update(X, y, d, s, r, fast, rng):
    """Joint (sigma^2, theta) | D, y. Returns (sigma2, theta)."""
    n = X.shape[0]
    L = _chol_M(X, d)
    sigma2 = _sigma2_from_quad(_quad_form(X, y, d, L), n, s, r, rng)
    sigma = math.sqrt(sigma2)
    if fast:
        theta = _theta_fast(X, y, d, sigma, L, rng)
    else:
        theta = _theta_direct(X, y, d, sigma, rng)
    return sigma2, theta


@_jit
def _step_correct(X, y, a, s, r, fast, theta, psi, delta, rng, counts):
    d = _prior_diag(psi, delta)
    sigma2, th = _block_update(X, y, d, s, r, fast, rng)
    theta[:] = th
    K.exact_local_steps(theta, psi, delta, a, math.sqrt(sigma2), rng, counts)
    return sigma2


@_jit
def _step_original(X, y, a, s, r, theta, log_abs, psi, log_phi, log_tau, rng, counts):
    # always the structured theta draw: it is exact for any (n, p) and keeps log|theta| finite
    log_d = np.log(psi) + 2.0 * (log_tau + log_phi)
    L = _chol_M(X, np.exp(log_d))
    sigma2 = _sigma2_from_quad(_quad_form(X, y, log_d, L), X.shape[0], s, r, rng)
    sigma = math.sqrt(sigma2)
    _theta_fast_log(X, y, log_d, sigma, L, rng, theta, log_abs)
    log_tau = K.legacy_local_steps_log(log_abs, psi, log_phi, log_tau, a, math.log(sigma), rng, counts)
    return sigma2, log_tau


@_jit
def _chain_correct(X, y, a, s, r, fast, theta, psi, delta, iters, burnin, rng, draws, s2_trace, counts):
    for it in range(iters):
        sigma2 = _step_correct(X, y, a, s, r, fast, theta, psi, delta, rng, counts)
        if it >= burnin:
            draws[:, it - burnin] = theta
            s2_trace[it - burnin] = sigma2


@_jit
def _chain_original(X, y, a, s, r, theta, psi, log_phi, log_tau, iters, burnin, rng, draws, s2_trace, counts):
    log_abs = np.empty(theta.shape[0])
    for it in range(iters):
        sigma2, log_tau = _step_original(X, y, a, s, r, theta, log_abs, psi, log_phi, log_tau, rng, counts)
        if it >= burnin:
            draws[:, it - burnin] = theta
            s2_trace[it - burnin] = sigma2
    return log_tau


# ---------------------------------------------------------------------------
# single conditionals


def _local_diag(local: DeltaState) -> np.ndarray:
    return _prior_diag(local.psi.copy(), local.delta.copy())


def draw_sigma2_marginal(d: RegData, local: DeltaState, prior: VariancePrior, rng: RngLike) -> float:
    diag = _local_diag(local)
    L = _chol_M(d.X, diag)
    quad = _quad_form(d.X, d.y, diag, L)
    return float(_sigma2_from_quad(quad, d.n, prior.s, prior.r, as_generator(rng)))


def draw_theta_given_sigma2(
    d: RegData, sigma2: float, local: DeltaState, rng: RngLike, method: str = "auto"
) -> np.ndarray:
    """theta ~ N(A^{-1} X'y, sigma^2 A^{-1}), A = X'X + D^{-1}.

    ``method`` is ``"fast"`` (structured sampler), ``"direct"`` (Cholesky of
    A) or ``"auto"`` (fast when p > n).
    """
    if not sigma2 > 0:
        raise ValueError("sigma2 must be positive")
    diag = _local_diag(local)
    gen = as_generator(rng)
    fast = d.p > d.n if method == "auto" else method == "fast"
    if method not in ("auto", "fast", "direct"):
        raise ValueError(f"unknown method {method!r}")
    sigma = math.sqrt(sigma2)
    if fast:
        return _theta_fast(d.X, d.y, diag, sigma, _chol_M(d.X, diag), gen)
    return _theta_direct(d.X, d.y, diag, sigma, gen)


def draw_delta_reg(theta, sigma2: float, a: float, rng: RngLike, counts=None) -> np.ndarray:
    """delta_j ~ GiG(a - 1, 1, 2|theta_j|/sigma)."""
    theta = np.ascontiguousarray(theta, dtype=float)
    counts = new_counts() if counts is None else counts
    return K.draw_delta(theta, float(a), math.sqrt(sigma2), as_generator(rng), np.empty(theta.size), counts)


def draw_psi_reg(theta, sigma2: float, delta, rng: RngLike, counts=None) -> np.ndarray:
    """psi_j = 1/X_j, X_j ~ iG(sigma delta_j/|theta_j|, 1)."""
    theta = np.ascontiguousarray(theta, dtype=float)
    delta = np.ascontiguousarray(delta, dtype=float)
    counts = new_counts() if counts is None else counts
    return K.draw_psi(theta, delta, math.sqrt(sigma2), as_generator(rng), np.empty(theta.size), counts)


def draw_tau_reg_flawed(theta, sigma2: float, phi, a: float, rng: RngLike, counts=None) -> float:
    """tau ~ GiG(p(a - 1), 1, 2 sum_j |theta_j|/(sigma phi_j))."""
    theta = np.ascontiguousarray(theta, dtype=float)
    phi = np.ascontiguousarray(phi, dtype=float)
    counts = new_counts() if counts is None else counts
    return float(K.draw_tau(theta, phi, float(a), math.sqrt(sigma2), as_generator(rng), counts))


def draw_phi_reg_flawed(theta, sigma2: float, a: float, rng: RngLike, counts=None) -> np.ndarray:
    theta = np.ascontiguousarray(theta, dtype=float)
    counts = new_counts() if counts is None else counts
    return K.draw_phi(theta, float(a), math.sqrt(sigma2), as_generator(rng), np.empty(theta.size), counts)


# ---------------------------------------------------------------------------
# scans and chains


def scan_correct_reg(state: RegState, d: RegData, a: float, prior: VariancePrior, rng: RngLike,
                     counts=None) -> RegState:
    if not isinstance(state.local, DeltaState):
        raise TypeError("scan_correct_reg works on the (psi, delta) parameterization")
    theta, psi, delta = state.theta.copy(), state.local.psi.copy(), state.local.delta.copy()
    counts = new_counts() if counts is None else counts
    sigma2 = _step_correct(d.X, d.y, float(a), prior.s, prior.r, d.p > d.n, theta, psi, delta,
                           as_generator(rng), counts)
    return RegState(theta, float(sigma2), DeltaState(psi, delta))


def scan_original_reg(state: RegState, d: RegData, a: float, prior: VariancePrior, rng: RngLike,
                      counts=None) -> RegState:
    if not isinstance(state.local, TauPhiState):
        raise TypeError("scan_original_reg works on the (psi, tau, phi) parameterization")
    theta, psi, phi = state.theta.copy(), state.local.psi.copy(), state.local.phi.copy()
    counts = new_counts() if counts is None else counts
    log_phi = np.log(phi)
    sigma2, log_tau = _step_original(d.X, d.y, float(a), prior.s, prior.r, theta, np.empty(d.p), psi, log_phi,
                                     math.log(state.local.tau), as_generator(rng), counts)
    tau = max(math.exp(log_tau), _TINY)
    return RegState(theta, float(sigma2), TauPhiState(psi, tau, np.maximum(np.exp(log_phi), _TINY)))


def initial_state(d: RegData, a: float, algorithm: str, rng: RngLike, init: str = "conditional") -> RegState:
    """Starting point for a regression chain.

    ``"conditional"``: theta at the ridge estimate X'(XX' + I)^{-1} y,
    sigma^2 = 1, and (psi, delta) drawn from their exact conditional given
    that theta. ``"prior"``: theta = 0, sigma^2 = 1, (psi, delta) from the
    prior.
    """
    gen = as_generator(rng)
    local = prior_sample(DlHyper(a, d.p), gen)
    if init == "conditional":
        theta = d.X.T @ np.linalg.solve(d.X @ d.X.T + np.eye(d.n), d.y)
        psi, delta = local.psi.copy(), local.delta.copy()
        K.exact_local_steps(theta, psi, delta, float(a), 1.0, gen, new_counts())
        local = DeltaState(psi, delta)
    elif init == "prior":
        theta = np.zeros(d.p)
    else:
        raise ValueError(f"unknown init {init!r}")
    if algorithm == "original":
        local = from_delta(local)
    elif algorithm != "correct":
        raise ValueError(f"unknown algorithm {algorithm!r}")
    return RegState(theta, 1.0, local)


def run_chain(
    d: RegData,
    a: float,
    algorithm: str,
    iters: int,
    burnin: int,
    rng: RngLike,
    prior: VariancePrior = VariancePrior(),
    init: RegState | str = "conditional",
) -> SampleStore:
    if not iters > burnin >= 0:
        raise ValueError("need iters > burnin >= 0")
    gen = as_generator(rng)
    state = initial_state(d, a, algorithm, gen, init) if isinstance(init, str) else init
    draws = np.empty((d.p, iters - burnin))
    s2 = np.empty(iters - burnin)
    counts = new_counts()
    theta, psi = state.theta.copy(), state.local.psi.copy()
    fast = d.p > d.n
    if algorithm == "correct":
        _chain_correct(d.X, d.y, float(a), prior.s, prior.r, fast, theta, psi, state.local.delta.copy(),
                       iters, burnin, gen, draws, s2, counts)
    elif algorithm == "original":
        _chain_original(d.X, d.y, float(a), prior.s, prior.r, theta, psi, np.log(state.local.phi),
                        math.log(state.local.tau), iters, burnin, gen, draws, s2, counts)
    else:
        raise ValueError(f"unknown algorithm {algorithm!r}")
    return SampleStore(draws, iters, burnin, Diagnostics.from_counts(counts), {"sigma2": s2})
