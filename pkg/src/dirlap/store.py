"""Containers for chain output."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .distributions import MU_CAP, XI_CLAMP


@dataclass
class Diagnostics:
    """Counts of numerical guards triggered while running a chain.

    ``xi_clamps``: GiG draws whose xi (2|theta|/sigma or the tau analogue)
    underflowed and was raised to ``XI_FLOOR``.
    ``mu_caps``: inverse-Gaussian draws whose mean was capped at
    ``IG_MEAN_CAP``.
    """

    xi_clamps: int = 0
    mu_caps: int = 0

    @classmethod
    def from_counts(cls, counts: np.ndarray) -> "Diagnostics":
        return cls(xi_clamps=int(counts[XI_CLAMP]), mu_caps=int(counts[MU_CAP]))

    def __add__(self, other: "Diagnostics") -> "Diagnostics":
        return Diagnostics(self.xi_clamps + other.xi_clamps, self.mu_caps + other.mu_caps)


def new_counts() -> np.ndarray:
    return np.zeros(2, dtype=np.int64)


@dataclass
class SampleStore:
    """Post-burn-in draws, one row per coordinate."""

    theta: np.ndarray
    iters: int
    burnin: int
    diagnostics: Diagnostics = field(default_factory=Diagnostics)
    extras: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.theta = np.asarray(self.theta, dtype=float)
        if self.theta.ndim != 2:
            raise ValueError("theta draws must be a (dim, n_draws) matrix")

    @property
    def dim(self) -> int:
        return self.theta.shape[0]

    @property
    def n_draws(self) -> int:
        return self.theta.shape[1]
