"""Independent checks of the samplers.

Nothing here runs a Markov chain on theta. The checks come from:

* quadrature of the exact one-dimensional normal-means posterior,
* exact draws of (psi, tau, phi) | theta built from independent GiG draws,
* two-sample Kolmogorov-Smirnov tests and sample correlations.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import integrate, optimize, special, stats

from . import _conditionals as K
from .distributions import _gig_fill
from .normal_means import NmData, run_chain
from .rng import RngLike, RngStream, as_generator
from .store import new_counts

# ---------------------------------------------------------------------------
# two-sample KS


@dataclass(frozen=True)
class KsResult:
    statistic: float
    pvalue: float
    n1: int
    n2: int

    def rejects(self, alpha: float) -> bool:
        return self.pvalue < alpha


def ks_two_sample(xs, ys) -> KsResult:
    """Two-sample KS statistic sup|F1 - F2| with the asymptotic p-value."""
    x = np.sort(np.asarray(xs, dtype=float).ravel())
    y = np.sort(np.asarray(ys, dtype=float).ravel())
    n1, n2 = x.size, y.size
    if n1 == 0 or n2 == 0:
        raise ValueError("both samples must be non-empty")
    grid = np.concatenate([x, y])
    cdf1 = np.searchsorted(x, grid, side="right") / n1
    cdf2 = np.searchsorted(y, grid, side="right") / n2
    d = float(np.max(np.abs(cdf1 - cdf2)))
    en = n1 * n2 / (n1 + n2)
    p = float(stats.kstwobign.sf(math.sqrt(en) * d))
    return KsResult(d, min(1.0, p), n1, n2)


# ---------------------------------------------------------------------------
# Monte Carlo error


def batch_means_mcse(x, n_batches: int = 50, stat=np.mean) -> float:
    """MCSE of ``stat`` from ``n_batches`` non-overlapping batches."""
    x = np.asarray(x, dtype=float)
    b = x.size // n_batches
    if b < 2:
        raise ValueError("too few draws for the requested number of batches")
    batches = x[: b * n_batches].reshape(n_batches, b)
    vals = np.apply_along_axis(stat, 1, batches)
    return float(np.std(vals, ddof=1) / math.sqrt(n_batches))


# ---------------------------------------------------------------------------
# normal-means posterior by quadrature


@dataclass(frozen=True)
class QuadratureOracle:
    """Posterior of theta | y for one coordinate of the normal-means model.

    The DL prior on one coordinate is written as a Laplace(delta) scale
    mixture over delta ~ Ga(a, 1/2): integrating psi ~ Exp(1/2) out of
    N(0, psi delta^2) gives density exp(-|theta|/delta) / (2 delta). The
    delta integral is a trapezoid rule in log(delta) with ``inner_nodes``
    points; the theta integral is Gauss-Legendre with ``outer_nodes`` points
    per panel. Near theta = 0, where the prior density behaves like
    |theta|**(a-1), the panel uses theta = t**(1/a) to remove the
    singularity.
    """

    y: float
    a: float
    outer_nodes: int = 400
    inner_nodes: int = 1500
    span: float = 40.0

    # -- prior ------------------------------------------------------------
    def prior_density(self, theta) -> np.ndarray:
        th = np.abs(np.atleast_1d(np.asarray(theta, dtype=float)))
        a = self.a
        log_c = a * math.log(0.5) - special.gammaln(a)
        out = np.full(th.size, np.inf if a <= 1 else math.exp(log_c) * special.gamma(a - 1) * 2 ** (a - 2))
        pos = th > 0
        if np.any(pos):
            t = th[pos][:, None]
            # trapezoid in u = log(delta), from just below log|theta| to where e^u/2 dominates
            s = np.linspace(0.0, 1.0, self.inner_nodes)[None, :]
            lo = np.log(t) - 6.0
            hi = math.log(2.0 * (60.0 + 10.0 * a))
            u = lo + s * (hi - lo)
            logf = (a - 1.0) * u - t * np.exp(-u) - 0.5 * np.exp(u)
            m = logf.max(axis=1, keepdims=True)
            val = integrate.trapezoid(np.exp(logf - m), u, axis=1)
            out[pos] = 0.5 * np.exp(log_c + m[:, 0]) * val
        return out

    # -- posterior --------------------------------------------------------
    def _unnorm(self, theta: np.ndarray) -> np.ndarray:
        return np.exp(-0.5 * (self.y - theta) ** 2) * self.prior_density(theta)

    def _panels(self, lo: float, hi: float):
        """(nodes, weights) for integrating over [lo, hi]."""
        xg, wg = np.polynomial.legendre.leggauss(self.outer_nodes)
        nodes, weights = [], []

        def affine(l, h):
            return 0.5 * (h - l) * xg + 0.5 * (h + l), 0.5 * (h - l) * wg

        k = max(1.0, 1.0 / self.a)
        for sign, (l, h) in ((-1.0, (max(0.0, -hi), max(0.0, -lo))), (1.0, (max(0.0, lo), max(0.0, hi)))):
            if h <= l:
                continue
            c = min(1.0, h)
            if l < c:
                # theta = t**k on [l, c]
                t, w = affine(l ** (1.0 / k), c ** (1.0 / k))
                nodes.append(sign * t**k)
                weights.append(w * k * t ** (k - 1.0))
            if h > max(l, c):
                t, w = affine(max(l, c), h)
                nodes.append(sign * t)
                weights.append(w)
        return np.concatenate(nodes), np.concatenate(weights)

    @property
    def bounds(self) -> tuple[float, float]:
        return min(self.y, 0.0) - self.span, max(self.y, 0.0) + self.span

    def _moments(self):
        lo, hi = self.bounds
        x, w = self._panels(lo, hi)
        f = self._unnorm(x) * w
        z = f.sum()
        return z, float((f * x).sum() / z)

    def cdf(self, t: float) -> float:
        lo, hi = self.bounds
        z, _ = self._moments_cached()
        if t <= lo:
            return 0.0
        x, w = self._panels(lo, min(t, hi))
        return float((self._unnorm(x) * w).sum() / z)

    def _moments_cached(self):
        cache = self.__dict__.get("_cache")
        if cache is None:
            cache = self._moments()
            object.__setattr__(self, "_cache", cache)
        return cache

    def mean(self) -> float:
        return self._moments_cached()[1]

    def quantile(self, q: float) -> float:
        lo, hi = self.bounds
        return float(optimize.brentq(lambda t: self.cdf(t) - q, lo, hi, xtol=1e-12, rtol=1e-12))

    def median(self) -> float:
        return self.quantile(0.5)


def nm_posterior_oracle(y_i: float, a: float, quantiles=(0.05, 0.25, 0.75, 0.95), **kw) -> dict:
    """Mean, median and quantiles of theta_i | y_i by quadrature."""
    orc = QuadratureOracle(float(y_i), float(a), **kw)
    mean = orc.mean()
    if not math.isfinite(mean):
        raise ArithmeticError("posterior quadrature did not converge")
    return {
        "mean": mean,
        "median": orc.median(),
        "quantiles": {q: orc.quantile(q) for q in quantiles},
    }


# ---------------------------------------------------------------------------
# exact conditional draws and the legacy-scan study


def tau_reference_sample(theta, a: float, rng: RngLike, size: int | None = None):
    """Exact draws of tau | theta as a sum of independent GiG(a-1, 1, 2|theta_i|)."""
    theta = np.asarray(theta, dtype=float)
    gen = as_generator(rng)
    m = 1 if size is None else int(size)
    out = np.zeros(m)
    for t in theta:
        xi = max(2.0 * abs(t), K.XI_FLOOR)
        out += _gig_fill(a - 1.0, 1.0, xi, gen, np.empty(m))
    return float(out[0]) if size is None else out


def exact_local_draws(theta, a: float, n_draws: int, rng: RngLike) -> dict:
    """iid draws of (psi, tau, phi) | theta: delta | theta, then psi | theta, delta."""
    theta = np.ascontiguousarray(theta, dtype=float)
    gen = as_generator(rng)
    n = theta.size
    psi = np.empty((n_draws, n))
    delta = np.empty((n_draws, n))
    counts = new_counts()
    p, d = np.empty(n), np.empty(n)
    for k in range(n_draws):
        K.exact_local_steps(theta, p, d, float(a), 1.0, gen, counts)
        psi[k], delta[k] = p, d
    tau = delta.sum(axis=1)
    return {"psi": psi, "tau": tau, "phi": delta / tau[:, None]}


def legacy_local_draws(theta, a: float, n_draws: int, rng: RngLike, thin: int = 3, burn: int = 10) -> dict:
    """Stationary draws of the legacy local updates with theta frozen.

    With theta fixed, phi is fresh after every scan, tau depends on the
    previous phi and psi on the previous (tau, phi); keeping every third
    scan gives independent draws.
    """
    theta = np.ascontiguousarray(theta, dtype=float)
    gen = as_generator(rng)
    n = theta.size
    counts = new_counts()
    psi, phi = np.ones(n), np.full(n, 1.0 / n)
    tau = 1.0
    out_psi = np.empty((n_draws, n))
    out_phi = np.empty((n_draws, n))
    out_tau = np.empty(n_draws)
    k = 0
    it = 0
    while k < n_draws:
        tau = K.legacy_local_steps(theta, psi, phi, tau, float(a), 1.0, gen, counts)
        it += 1
        if it > burn and (it - burn) % thin == 0:
            out_psi[k], out_phi[k], out_tau[k] = psi, phi, tau
            k += 1
    return {"psi": out_psi, "tau": out_tau, "phi": out_phi}


@dataclass
class Dependence:
    corr: float
    z: float
    pvalue: float


def correlation_test(x, y) -> Dependence:
    """Spearman rank correlation; ``z`` is r sqrt(n - 1), its null SE scale.

    Ranks are used because the exact (tau, phi_1) dependence is non-linear:
    the Pearson correlation is near zero even where the rank correlation is
    far from it.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    res = stats.spearmanr(x, y)
    r = float(res.statistic)
    return Dependence(r, r * math.sqrt(x.size - 1), float(res.pvalue))


@dataclass
class ConditionalScanStudy:
    theta: list
    a: float
    n_draws: int
    ks: dict = field(default_factory=dict)
    exact_dependence: Dependence | None = None
    legacy_dependence: Dependence | None = None
    tau_composition_ks: KsResult | None = None

    def distinguishes(self, alpha: float = 1e-3) -> bool:
        """True if any discrepancy test separates the legacy scan from exact draws."""
        return any(r.rejects(alpha) for r in self.ks.values()) or self.exact_dependence.pvalue < alpha

    def to_dict(self) -> dict:
        return asdict(self)


def _var1(d: dict) -> np.ndarray:
    return d["psi"][:, 0] * (d["tau"] * d["phi"][:, 0]) ** 2


def conditional_scan_study(theta_frozen, a: float, n_draws: int, rng: RngLike) -> ConditionalScanStudy:
    """Compare the legacy local updates with exact draws of (psi, tau, phi) | theta.

    Reports KS tests on the psi_1, tau and phi_1 marginals and on the implied
    prior variance psi_1 (tau phi_1)^2, the (tau, phi_1) rank correlation
    under both, and a KS test of the correct-order composition
    (phi | theta, then tau | theta, phi) against ``tau_reference_sample``.
    """
    gen = as_generator(rng)
    theta = np.asarray(theta_frozen, dtype=float)
    exact = exact_local_draws(theta, a, n_draws, gen)
    legacy = legacy_local_draws(theta, a, n_draws, gen)
    study = ConditionalScanStudy(list(map(float, theta)), float(a), int(n_draws))
    study.ks = {
        "psi_1": ks_two_sample(legacy["psi"][:, 0], exact["psi"][:, 0]),
        "tau": ks_two_sample(legacy["tau"], exact["tau"]),
        "phi_1": ks_two_sample(legacy["phi"][:, 0], exact["phi"][:, 0]),
        "var_1": ks_two_sample(_var1(legacy), _var1(exact)),
    }
    study.exact_dependence = correlation_test(exact["tau"], exact["phi"][:, 0])
    study.legacy_dependence = correlation_test(legacy["tau"], legacy["phi"][:, 0])

    counts = new_counts()
    thc = np.ascontiguousarray(theta)
    composed = np.empty(n_draws)
    phi = np.empty(theta.size)
    for k in range(n_draws):
        K.draw_phi(thc, float(a), 1.0, gen, phi, counts)
        composed[k] = K.draw_tau(thc, phi, float(a), 1.0, gen, counts)
    study.tau_composition_ks = ks_two_sample(composed, tau_reference_sample(theta, a, gen, n_draws))
    return study


# ---------------------------------------------------------------------------
# chain vs oracle on one coordinate


@dataclass
class OracleComparison:
    algorithm: str
    mean: float
    median: float
    mean_mcse: float
    median_mcse: float
    oracle_mean: float
    oracle_median: float

    @property
    def mean_z(self) -> float:
        return (self.mean - self.oracle_mean) / self.mean_mcse

    @property
    def median_z(self) -> float:
        return (self.median - self.oracle_median) / self.median_mcse

    def passes(self, k: float = 3.0) -> bool:
        return abs(self.mean_z) <= k and abs(self.median_z) <= k


def oracle_comparison(y: float, a: float, algorithm: str, kept: int, burnin: int, rng: RngLike,
                      oracle: dict | None = None) -> OracleComparison:
    """Run a one-coordinate chain and compare with the quadrature posterior."""
    oracle = nm_posterior_oracle(y, a) if oracle is None else oracle
    store = run_chain(NmData(np.array([y])), a, algorithm, kept + burnin, burnin, rng)
    x = store.theta[0]
    return OracleComparison(
        algorithm,
        float(np.mean(x)),
        float(np.median(x)),
        batch_means_mcse(x, 50, np.mean),
        batch_means_mcse(x, 50, np.median),
        oracle["mean"],
        oracle["median"],
    )


# ---------------------------------------------------------------------------
# suite behind `dirlap validate`

STUDY_THETA = (0.5, -1.2, 3.0)


def _check(name: str, passed: bool, **detail) -> dict:
    return {"name": name, "passed": bool(passed), **{k: _plain(v) for k, v in detail.items()}}


def _plain(v):
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    if isinstance(v, (KsResult, Dependence)):
        return asdict(v)
    return v


def gig_total_mass(p) -> float:
    """Integral of the normalized GiG density, in log(x) and split at the mode."""
    from .distributions import gig_log_density

    nu, g, xi = p.nu, p.gamma_rate, p.xi
    root = math.sqrt(nu * nu + g * xi)
    mode = (nu + root) / g if nu >= 0 else xi / (root - nu)
    u0 = math.log(mode)
    h0 = float(gig_log_density(mode, p)) + u0

    def f(u):
        x = math.exp(u) if u < 700 else math.inf
        if not 0 < x < math.inf:
            return 0.0
        return math.exp(float(gig_log_density(x, p)) + u - h0)

    parts = [integrate.quad(f, -np.inf, u0, limit=500, epsabs=0, epsrel=1e-11)[0],
             integrate.quad(f, u0, np.inf, limit=500, epsabs=0, epsrel=1e-11)[0]]
    return math.exp(h0) * sum(parts)


def run_validation_suite(seed: int = 0, kept: int = 200_000, n_draws: int = 10_000) -> dict:
    """Oracle and discrepancy checks; returns a JSON-ready pass/fail report."""
    from .distributions import GigParams

    checks = []

    th, d = 1.0, 2.0
    lhs = integrate.quad(lambda p: stats.norm.pdf(th, 0, d * math.sqrt(p)) * 0.5 * math.exp(-p / 2), 0, np.inf,
                         epsabs=1e-13, epsrel=1e-12)[0]
    rhs = math.exp(-th / d) / (2 * d)
    checks.append(_check("laplace_mixture_identity", abs(lhs - rhs) < 1e-8, lhs=lhs, rhs=rhs))

    coarse = QuadratureOracle(4.0, 0.5)
    fine = QuadratureOracle(4.0, 0.5, outer_nodes=2 * coarse.outer_nodes, inner_nodes=2 * coarse.inner_nodes)
    diff = abs(coarse.mean() - fine.mean())
    checks.append(_check("oracle_grid_doubling", diff < 1e-8, mean=coarse.mean(), change=diff))

    worst = 0.0
    for nu in (-99.0, -0.99, -0.5, 0.5, 2.0):
        for g in (0.1, 1.0, 10.0):
            for xi in (1e-8, 0.1, 1.0, 10.0):
                worst = max(worst, abs(gig_total_mass(GigParams(nu, g, xi)) - 1.0))
    checks.append(_check("gig_normalization", worst < 1e-6, max_error=worst))

    oracle = nm_posterior_oracle(4.0, 0.5)
    for k, alg in enumerate(("correct", "original")):
        cmp = oracle_comparison(4.0, 0.5, alg, kept, 5000, RngStream(seed, 10 + k), oracle)
        expect = alg == "correct"
        checks.append(_check(f"n1_oracle_{alg}", cmp.passes(3.0) == expect, expect_match=expect,
                             mean=cmp.mean, median=cmp.median, oracle_mean=cmp.oracle_mean,
                             oracle_median=cmp.oracle_median, mean_z=cmp.mean_z, median_z=cmp.median_z))

    study = conditional_scan_study(STUDY_THETA, 0.5, n_draws, RngStream(seed, 20))
    checks.append(_check("legacy_psi1_marginal_ks", study.ks["psi_1"].rejects(1e-3), ks=study.ks["psi_1"]))
    checks.append(_check("legacy_joint_variance_ks", study.ks["var_1"].rejects(1e-3), ks=study.ks["var_1"]))
    checks.append(_check("exact_tau_phi_dependence", study.exact_dependence.pvalue < 1e-3,
                         dependence=study.exact_dependence))
    checks.append(_check("legacy_tau_phi_independence", abs(study.legacy_dependence.z) <= 4.0,
                         dependence=study.legacy_dependence))
    checks.append(_check("tau_composition_ks", not study.tau_composition_ks.rejects(1e-3),
                         ks=study.tau_composition_ks))

    return {"seed": seed, "passed": all(c["passed"] for c in checks), "checks": checks}
