"""Gibbs samplers for the normal-means model y_i = theta_i + N(0, 1).

Two scans are provided:

``scan_correct``
    theta | psi, delta, y; then delta | theta; then psi | theta, delta.
    The two local updates are an exact draw from p(psi, delta | theta), so the chain
    leaves the posterior invariant.

``scan_original``
    The legacy (tau, phi) scan in its historical order: theta; psi given the
    old (tau, phi); tau given the old phi; phi given theta. It does not
    target the posterior and is kept only for comparison.
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
_TINY = np.finfo(float).tiny

ALGORITHMS = ("original", "correct")


@dataclass(frozen=True)
class NmData:
    y: np.ndarray

    def __post_init__(self) -> None:
        y = np.asarray(self.y, dtype=float)
        if y.ndim != 1 or y.size < 1 or not np.all(np.isfinite(y)):
            raise ValueError("y must be a non-empty vector of finite reals")
        object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return self.y.size


@dataclass(frozen=True)
class NmState:
    theta: np.ndarray
    local: Union[DeltaState, TauPhiState]

    def __post_init__(self) -> None:
        theta = np.asarray(self.theta, dtype=float)
        object.__setattr__(self, "theta", theta)
        if theta.shape != self.local.psi.shape:
            raise ValueError("theta and local scales have different lengths")


def shrink_factor(psi_i: float, scale_i: float) -> float:
    """zeta^2 = (1 + 1/(psi scale^2))^{-1}, the posterior weight on y_i."""
    if not (psi_i > 0 and scale_i > 0):
        raise ValueError("shrink_factor needs positive inputs")
    return float(K.shrink(float(psi_i), float(scale_i)))


def _vec(x, n=None):
    v = np.ascontiguousarray(x, dtype=float)
    if n is not None and v.shape != (n,):
        raise ValueError(f"expected a vector of length {n}")
    return v


def draw_theta(d: NmData, psi, scale, rng: RngLike) -> np.ndarray:
    """theta_i ~ N(zeta_i^2 y_i, zeta_i^2)."""
    psi, scale = _vec(psi, d.n), _vec(scale, d.n)
    return K.draw_theta_nm(d.y, psi, scale, as_generator(rng), np.empty(d.n))


def draw_delta_given_theta(theta, a: float, rng: RngLike, counts=None) -> np.ndarray:
    """delta_i ~ GiG(a - 1, 1, 2|theta_i|)."""
    theta = _vec(theta)
    counts = new_counts() if counts is None else counts
    return K.draw_delta(theta, float(a), 1.0, as_generator(rng), np.empty(theta.size), counts)


def draw_psi_given(theta, scale, rng: RngLike, counts=None) -> np.ndarray:
    """psi_i = 1/X_i, X_i ~ iG(scale_i/|theta_i|, 1)."""
    theta = _vec(theta)
    scale = _vec(scale, theta.size)
    counts = new_counts() if counts is None else counts
    return K.draw_psi(theta, scale, 1.0, as_generator(rng), np.empty(theta.size), counts)


def draw_tau_given_theta_phi(theta, phi, a: float, rng: RngLike, counts=None) -> float:
    """tau ~ GiG(n(a - 1), 1, 2 sum |theta_i|/phi_i)."""
    theta = _vec(theta)
    phi = _vec(phi, theta.size)
    counts = new_counts() if counts is None else counts
    return float(K.draw_tau(theta, phi, float(a), 1.0, as_generator(rng), counts))


def draw_phi_given_theta(theta, a: float, rng: RngLike, counts=None) -> np.ndarray:
    theta = _vec(theta)
    counts = new_counts() if counts is None else counts
    return K.draw_phi(theta, float(a), 1.0, as_generator(rng), np.empty(theta.size), counts)


# ---------------------------------------------------------------------------
# full scans


@_jit
def _step_correct(y, a, theta, psi, delta, rng, counts):
    K.draw_theta_nm(y, psi, delta, rng, theta)
    K.exact_local_steps(theta, psi, delta, a, 1.0, rng, counts)


@_jit
def _step_original(y, a, theta, log_abs, psi, log_phi, log_tau, rng, counts):
    K.draw_theta_nm_log(y, psi, log_tau + log_phi, rng, theta, log_abs)
    return K.legacy_local_steps_log(log_abs, psi, log_phi, log_tau, a, 0.0, rng, counts)


@_jit
def _chain_correct(y, a, theta, psi, delta, iters, burnin, rng, draws, counts):
    for it in range(iters):
        _step_correct(y, a, theta, psi, delta, rng, counts)
        if it >= burnin:
            draws[:, it - burnin] = theta


@_jit
def _chain_original(y, a, theta, psi, log_phi, log_tau, iters, burnin, rng, draws, tau_trace, counts):
    log_abs = np.log(np.abs(theta))
    for it in range(iters):
        log_tau = _step_original(y, a, theta, log_abs, psi, log_phi, log_tau, rng, counts)
        if it >= burnin:
            draws[:, it - burnin] = theta
            tau_trace[it - burnin] = math.exp(log_tau)
    return log_tau


def scan_correct(state: NmState, d: NmData, a: float, rng: RngLike, counts=None) -> NmState:
    if not isinstance(state.local, DeltaState):
        raise TypeError("scan_correct works on the (psi, delta) parameterization")
    theta, psi, delta = state.theta.copy(), state.local.psi.copy(), state.local.delta.copy()
    counts = new_counts() if counts is None else counts
    _step_correct(d.y, float(a), theta, psi, delta, as_generator(rng), counts)
    return NmState(theta, DeltaState(psi, delta))


def scan_original(state: NmState, d: NmData, a: float, rng: RngLike, counts=None) -> NmState:
    if not isinstance(state.local, TauPhiState):
        raise TypeError("scan_original works on the (psi, tau, phi) parameterization")
    theta, psi, phi = state.theta.copy(), state.local.psi.copy(), state.local.phi.copy()
    counts = new_counts() if counts is None else counts
    log_phi = np.log(phi)
    log_tau = _step_original(d.y, float(a), theta, np.empty(d.n), psi, log_phi, math.log(state.local.tau),
                             as_generator(rng), counts)
    return NmState(theta, TauPhiState(psi, max(math.exp(log_tau), _TINY), np.maximum(np.exp(log_phi), _TINY)))


INITS = ("conditional", "prior")


def initial_state(d: NmData, a: float, algorithm: str, rng: RngLike, init: str = "conditional") -> NmState:
    """theta at the data; (psi, delta) drawn from p(psi, delta | theta = y) or the prior.

    Prior draws at small ``a`` put almost every delta_j near zero, and the
    chain then needs many scans to free the signals; the conditional start
    avoids that.
    """
    gen = as_generator(rng)
    if init == "conditional":
        theta = np.ascontiguousarray(d.y)
        psi, delta = np.empty(d.n), np.empty(d.n)
        K.exact_local_steps(theta, psi, delta, float(a), 1.0, gen, new_counts())
        local = DeltaState(psi, delta)
    elif init == "prior":
        local = prior_sample(DlHyper(a, d.n), gen)
    else:
        raise ValueError(f"unknown init {init!r}")
    if algorithm == "original":
        local = from_delta(local)
    elif algorithm != "correct":
        raise ValueError(f"unknown algorithm {algorithm!r}")
    return NmState(d.y.copy(), local)


def run_chain(
    d: NmData,
    a: float,
    algorithm: str,
    iters: int,
    burnin: int,
    rng: RngLike,
    init: Union[NmState, str] = "conditional",
) -> SampleStore:
    """Run ``iters`` scans and keep theta after ``burnin``.

    ``init`` is a starting state or the name of an initializer (see
    ``initial_state``). The same generator initializes the chain and drives
    the scans.
    """
    if not iters > burnin >= 0:
        raise ValueError("need iters > burnin >= 0")
    gen = as_generator(rng)
    state = initial_state(d, a, algorithm, gen, init) if isinstance(init, str) else init
    draws = np.empty((d.n, iters - burnin))
    counts = new_counts()
    theta, psi = state.theta.copy(), state.local.psi.copy()
    extras = {}
    if algorithm == "correct":
        delta = state.local.delta.copy()
        _chain_correct(d.y, float(a), theta, psi, delta, iters, burnin, gen, draws, counts)
    elif algorithm == "original":
        tau_trace = np.empty(iters - burnin)
        _chain_original(d.y, float(a), theta, psi, np.log(state.local.phi), math.log(state.local.tau), iters,
                        burnin, gen, draws, tau_trace, counts)
        extras["tau"] = tau_trace
    else:
        raise ValueError(f"unknown algorithm {algorithm!r}")
    return SampleStore(draws, iters, burnin, Diagnostics.from_counts(counts), extras)
