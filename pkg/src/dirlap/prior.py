"""Dirichlet-Laplace prior and its two parameterizations.

The prior on a ``dim``-vector is

    theta_j | psi_j, tau, phi_j ~ N(0, psi_j tau^2 phi_j^2),
    psi_j ~ Exp(1/2),  tau ~ Ga(dim * a, 1/2),  phi ~ Dir(a, ..., a).

Writing ``delta_j = tau * phi_j`` gives independent ``delta_j ~ Ga(a, 1/2)``,
so chains keep their local scales as a :class:`DeltaState`. The
``(tau, phi)`` view exists for the legacy scans and for reporting.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .distributions import _gamma_fill
from .rng import RngLike, as_generator


@dataclass(frozen=True)
class DlHyper:
    a: float
    dim: int

    def __post_init__(self) -> None:
        if not self.a > 0 or not np.isfinite(self.a):
            raise ValueError("hyperparameter a must be a positive real")
        if int(self.dim) != self.dim or self.dim < 1:
            raise ValueError("dim must be a positive integer")


@dataclass(frozen=True)
class TauPhiState:
    psi: np.ndarray
    tau: float
    phi: np.ndarray

    def __post_init__(self) -> None:
        psi = np.asarray(self.psi, dtype=float)
        phi = np.asarray(self.phi, dtype=float)
        object.__setattr__(self, "psi", psi)
        object.__setattr__(self, "phi", phi)
        if psi.shape != phi.shape or psi.ndim != 1:
            raise ValueError("psi and phi must be vectors of equal length")
        if not np.all(psi > 0) or not self.tau > 0 or not np.all(phi > 0):
            raise ValueError("psi, tau and phi must be strictly positive")
        if abs(phi.sum() - 1.0) > 1e-10:
            raise ValueError("phi must lie on the simplex")


@dataclass(frozen=True)
class DeltaState:
    psi: np.ndarray
    delta: np.ndarray

    def __post_init__(self) -> None:
        psi = np.asarray(self.psi, dtype=float)
        delta = np.asarray(self.delta, dtype=float)
        object.__setattr__(self, "psi", psi)
        object.__setattr__(self, "delta", delta)
        if psi.shape != delta.shape or psi.ndim != 1:
            raise ValueError("psi and delta must be vectors of equal length")
        if not (np.all(psi > 0) and np.all(delta > 0)):
            raise ValueError("psi and delta must be strictly positive")


def to_delta(s: TauPhiState) -> DeltaState:
    return DeltaState(psi=s.psi, delta=s.tau * s.phi)


def from_delta(s: DeltaState) -> TauPhiState:
    tau = float(s.delta.sum())
    # underflowed ratios are kept on the positive side of the simplex
    phi = np.maximum(s.delta / tau, np.finfo(float).tiny)
    return TauPhiState(psi=s.psi, tau=tau, phi=phi)


def prior_sample(h: DlHyper, rng: RngLike) -> DeltaState:
    """psi_j ~ Exp(1/2) and delta_j ~ Ga(a, 1/2), all independent."""
    gen = as_generator(rng)
    psi = _gamma_fill(1.0, 0.5, gen, np.empty(h.dim))
    delta = _gamma_fill(float(h.a), 0.5, gen, np.empty(h.dim))
    return DeltaState(psi=psi, delta=delta)
