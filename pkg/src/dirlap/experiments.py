"""Simulation grids: data generation, posterior-median losses and CSV output.

Each replicate simulates one dataset and runs every requested algorithm on
it (paired comparison). Random streams:

* ``seed_fanout(seed, cell, rep).generator(0)`` simulates the data,
* ``.generator(k)`` drives algorithm ``k`` (1 = original, 2 = correct),

so a chain's draws do not depend on which other algorithms were requested.
"""
from __future__ import annotations

import csv
import math
import os
import time
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence, Union

import numpy as np

from . import linreg, normal_means
from .linreg import RegData, VariancePrior
from .normal_means import NmData
from .rng import seed_fanout
from .store import Diagnostics, SampleStore

ALGORITHM_STREAM = {"original": 1, "correct": 2}
BLOCK_LEVELS = (5.0, 6.0, 7.0, 8.0, 10.0)


@dataclass(frozen=True)
class NmScenario:
    n: int
    qn: int
    A: float
    a: float
    reps: int = 20
    iters: int = 20000
    burnin: int = 5000
    seed: int = 0

    model = "normal-means"

    def __post_init__(self) -> None:
        if not 1 <= self.qn <= self.n:
            raise ValueError("need 1 <= qn <= n")
        if not self.iters > self.burnin >= 0:
            raise ValueError("need iters > burnin >= 0")
        if not (self.a > 0 and self.reps >= 1):
            raise ValueError("need a > 0 and reps >= 1")

    @property
    def dim(self) -> int:
        return self.n

    def labels(self) -> dict:
        return {"model": self.model, "n": self.n, "p": "", "qn": self.qn, "A": self.A, "a": self.a, "sigma2": ""}


@dataclass(frozen=True)
class RegScenario:
    n: int
    p: int
    m: int
    sigma2: float
    a: float
    reps: int = 50
    iters: int = 20000
    burnin: int = 5000
    seed: int = 0
    prior: VariancePrior = VariancePrior()

    model = "linreg"

    def __post_init__(self) -> None:
        if self.n < 1 or self.m < 1 or self.p < 5 * self.m + 1:
            raise ValueError("need n >= 1, m >= 1 and room for five blocks of length m")
        if not self.iters > self.burnin >= 0:
            raise ValueError("need iters > burnin >= 0")
        if not (self.a > 0 and self.sigma2 > 0 and self.reps >= 1):
            raise ValueError("need a > 0, sigma2 > 0 and reps >= 1")

    @property
    def dim(self) -> int:
        return self.p

    def labels(self) -> dict:
        return {"model": self.model, "n": self.n, "p": self.p, "qn": 5 * self.m, "A": "", "a": self.a,
                "sigma2": self.sigma2}


Scenario = Union[NmScenario, RegScenario]


# ---------------------------------------------------------------------------
# data


def nm_truth(s: NmScenario) -> np.ndarray:
    theta = np.zeros(s.n)
    theta[: s.qn] = s.A
    return theta


def reg_truth(s: RegScenario) -> np.ndarray:
    """Zeros in the first p/2 coordinates, then blocks of m at 5, 6, 7, 8, 10 sigma."""
    theta = np.zeros(s.p)
    sd = math.sqrt(s.sigma2)
    start = s.p // 2
    for k, level in enumerate(BLOCK_LEVELS):
        theta[start + k * s.m: start + (k + 1) * s.m] = level * sd
    return theta


def gen_normal_means(s: NmScenario, rep_index: int, cell_index: int = 0):
    gen = seed_fanout(s.seed, cell_index, rep_index).generator(0)
    truth = nm_truth(s)
    return NmData(truth + gen.standard_normal(s.n)), truth


def gen_linreg(s: RegScenario, rep_index: int, cell_index: int = 0):
    gen = seed_fanout(s.seed, cell_index, rep_index).generator(0)
    truth = reg_truth(s)
    X = gen.standard_normal((s.n, s.p))
    y = X @ truth + math.sqrt(s.sigma2) * gen.standard_normal(s.n)
    return RegData(X, y), truth


# ---------------------------------------------------------------------------
# estimators and losses


def posterior_median(store: SampleStore) -> np.ndarray:
    """Coordinatewise median; an even count takes the midpoint of the middle pair."""
    if store.n_draws == 0:
        raise ValueError("no retained draws to summarize")
    return np.median(store.theta, axis=1)


def squared_loss(est, truth) -> float:
    est = np.asarray(est, dtype=float)
    truth = np.asarray(truth, dtype=float)
    if est.shape != truth.shape:
        raise ValueError("estimate and truth differ in length")
    return float(np.sum((est - truth) ** 2))


@dataclass
class LossReport:
    """Average losses of one algorithm over the replicates of one cell.

    ``per_coord`` is the average squared error of each coordinate; it sums
    to ``total``. ``replicates`` holds (total, null, non-null) per replicate.
    """

    algorithm: str
    labels: dict
    reps: int
    total: float = math.nan
    null: float = math.nan
    nonnull: float = math.nan
    per_coord: np.ndarray = field(default_factory=lambda: np.empty(0))
    replicates: list = field(default_factory=list)
    diagnostics: Diagnostics = field(default_factory=Diagnostics)
    error: str = ""
    seconds: float = 0.0

    @property
    def ok(self) -> bool:
        return not self.error


def _run_replicate(task):
    scenario, cell, rep, algorithms = task
    t0 = time.perf_counter()
    try:
        if isinstance(scenario, NmScenario):
            data, truth = gen_normal_means(scenario, rep, cell)
        else:
            data, truth = gen_linreg(scenario, rep, cell)
        out = {}
        for alg in algorithms:
            gen = seed_fanout(scenario.seed, cell, rep).generator(ALGORITHM_STREAM[alg])
            if isinstance(scenario, NmScenario):
                store = normal_means.run_chain(data, scenario.a, alg, scenario.iters, scenario.burnin, gen)
            else:
                store = linreg.run_chain(data, scenario.a, alg, scenario.iters, scenario.burnin, gen,
                                         scenario.prior)
            err2 = (posterior_median(store) - truth) ** 2
            out[alg] = (err2, store.diagnostics)
        return cell, rep, truth != 0, out, "", time.perf_counter() - t0
    except Exception:
        return cell, rep, None, None, traceback.format_exc(limit=3), time.perf_counter() - t0


def _aggregate(scenario: Scenario, algorithms, results) -> list[LossReport]:
    results = sorted(results, key=lambda r: r[1])
    errors = [f"replicate {r[1]}: {r[4].strip()}" for r in results if r[4]]
    seconds = sum(r[5] for r in results)
    reports = []
    for alg in algorithms:
        rep_obj = LossReport(alg, scenario.labels(), scenario.reps, seconds=seconds)
        if errors:
            rep_obj.error = errors[0]
            reports.append(rep_obj)
            continue
        signal = results[0][2]
        acc = np.zeros(scenario.dim)
        diag = Diagnostics()
        for r in results:
            err2, d = r[3][alg]
            acc += err2
            diag = diag + d
            nl, nn = float(err2[~signal].sum()), float(err2[signal].sum())
            rep_obj.replicates.append((nl + nn, nl, nn))
        rep_obj.per_coord = acc / len(results)
        rep_obj.null = float(np.sum(rep_obj.per_coord[~signal]))
        rep_obj.nonnull = float(np.sum(rep_obj.per_coord[signal]))
        # defined as the sum so the split is exact
        rep_obj.total = rep_obj.null + rep_obj.nonnull
        rep_obj.diagnostics = diag
        rep_obj.labels = dict(rep_obj.labels, signal=signal)
        reports.append(rep_obj)
    return reports


def run_grid(scenarios: Sequence[Scenario], algorithms: Iterable[str] = ("original", "correct"),
             workers: int = 1) -> list[list[LossReport]]:
    """Run every replicate of every scenario; one list of reports per scenario.

    A replicate that raises marks its whole cell as failed (``error`` set on
    each of the cell's reports); other cells are unaffected. Results do not
    depend on ``workers``.
    """
    algorithms = tuple(algorithms)
    for alg in algorithms:
        if alg not in ALGORITHM_STREAM:
            raise ValueError(f"unknown algorithm {alg!r}")
    tasks = [(s, c, r, algorithms) for c, s in enumerate(scenarios) for r in range(s.reps)]
    if workers > 1:
        with ProcessPoolExecutor(workers) as ex:
            results = list(ex.map(_run_replicate, tasks, chunksize=1))
    else:
        results = [_run_replicate(t) for t in tasks]
    by_cell: dict[int, list] = {c: [] for c in range(len(scenarios))}
    for r in results:
        by_cell[r[0]].append(r)
    return [_aggregate(s, algorithms, by_cell[c]) for c, s in enumerate(scenarios)]


# ---------------------------------------------------------------------------
# CSV output

LABEL_COLUMNS = ["model", "n", "p", "qn", "A", "a", "sigma2"]
REPLICATE_COLUMNS = ["cell", *LABEL_COLUMNS, "algorithm", "replicate", "loss_total", "loss_null", "loss_nonnull"]
CELL_COLUMNS = ["cell", *LABEL_COLUMNS, "algorithm", "reps", "avg_loss_total", "avg_loss_null",
                "avg_loss_nonnull", "xi_clamps", "mu_caps", "status", "error"]
COORD_COLUMNS = ["cell", *LABEL_COLUMNS, "coord", "is_null", "log_avg_loss_original", "log_avg_loss_correct"]


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _write(path: str, columns: list[str], rows: Iterable[dict]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_fmt(row.get(c, "")) for c in columns])


def _log(x: float) -> float:
    return math.log(x) if x > 0 else -math.inf


def write_csvs(out_dir: str, grid: list[list[LossReport]]) -> dict[str, str]:
    """Write replicates.csv, cells.csv and coords.csv; return their paths."""
    os.makedirs(out_dir, exist_ok=True)
    paths = {k: os.path.join(out_dir, f"{k}.csv") for k in ("replicates", "cells", "coords")}
    rep_rows, cell_rows, coord_rows = [], [], []
    for c, reports in enumerate(grid):
        for rep in reports:
            base = {"cell": c, **{k: rep.labels.get(k, "") for k in LABEL_COLUMNS}, "algorithm": rep.algorithm}
            for i, (t, nl, nn) in enumerate(rep.replicates):
                rep_rows.append({**base, "replicate": i, "loss_total": t, "loss_null": nl, "loss_nonnull": nn})
            cell_rows.append({**base, "reps": rep.reps, "avg_loss_total": rep.total, "avg_loss_null": rep.null,
                              "avg_loss_nonnull": rep.nonnull, "xi_clamps": rep.diagnostics.xi_clamps,
                              "mu_caps": rep.diagnostics.mu_caps, "status": "ok" if rep.ok else "error",
                              "error": rep.error.replace("\n", " | ")})
        done = {r.algorithm: r for r in reports if r.ok}
        if done:
            first = next(iter(done.values()))
            signal = first.labels["signal"]
            for j in range(first.per_coord.size):
                row = {"cell": c, **{k: first.labels.get(k, "") for k in LABEL_COLUMNS}, "coord": j + 1,
                       "is_null": not signal[j]}
                for alg, r in done.items():
                    row[f"log_avg_loss_{alg}"] = _log(r.per_coord[j])
                coord_rows.append(row)
    _write(paths["replicates"], REPLICATE_COLUMNS, rep_rows)
    _write(paths["cells"], CELL_COLUMNS, cell_rows)
    _write(paths["coords"], COORD_COLUMNS, coord_rows)
    return paths


# ---------------------------------------------------------------------------
# preset grids

SCALES = {"desk": {"nm_reps": 20, "reg_reps": 50}, "full": {"nm_reps": 100, "reg_reps": 1000}}
NM_FRACTIONS = (0.05, 0.10, 0.20)
NM_AMPLITUDES = (5.0, 6.0, 7.0, 8.0)


def nm_grid(n: int, scale: str = "desk", seed: int = 0, iters: int = 20000, burnin: int = 5000) -> list[NmScenario]:
    """a in {1/n, 1/2} x q_n/n in {0.05, 0.10, 0.20} x A in {5, 6, 7, 8}."""
    reps = SCALES[scale]["nm_reps"]
    return [
        NmScenario(n, int(round(f * n)), A, a, reps, iters, burnin, seed)
        for a in (1.0 / n, 0.5)
        for f in NM_FRACTIONS
        for A in NM_AMPLITUDES
    ]


def reg_grid(scale: str = "desk", seed: int = 0, iters: int = 20000, burnin: int = 5000,
             prior: VariancePrior = VariancePrior()) -> list[RegScenario]:
    """n = 50, p = 100, m = 10, sigma^2 = 1 and a in {1/p, 1/n, 1/2}."""
    n, p = 50, 100
    reps = SCALES[scale]["reg_reps"]
    return [RegScenario(n, p, p // 10, 1.0, a, reps, iters, burnin, seed, prior) for a in (1.0 / p, 1.0 / n, 0.5)]


def table_grid(table: int, scale: str = "desk", seed: int = 0, **kw) -> list[Scenario]:
    if scale not in SCALES:
        raise ValueError(f"unknown scale {scale!r}")
    if table == 1:
        return nm_grid(100, scale, seed, **kw)
    if table == 2:
        return reg_grid(scale, seed, **kw)
    if table == 3:
        return nm_grid(200, scale, seed, **kw)
    raise ValueError(f"unknown table {table!r}")


def with_reps(scenarios: Sequence[Scenario], reps: int) -> list[Scenario]:
    return [replace(s, reps=reps) for s in scenarios]
