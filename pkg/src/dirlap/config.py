"""Run configuration, config files and run manifests.

Config files are plain text, one ``key = value`` per line; ``#`` starts a
comment. Keys are the long CLI flag names (``burnin``, ``qn``, ``s`` ...).
Command-line values override file values, which override defaults.
"""
from __future__ import annotations

import json
import platform
from dataclasses import asdict, dataclass, fields
from fractions import Fraction
from typing import Mapping, Optional

from . import __version__
from .experiments import NmScenario, RegScenario, Scenario, table_grid
from .linreg import VariancePrior

MODELS = ("normal-means", "linreg")
ALGORITHM_CHOICES = ("original", "correct", "both")


class ConfigError(ValueError):
    """Invalid configuration; ``exit_code`` is what the CLI returns."""

    exit_code = 2


class UnknownKeyError(ConfigError):
    exit_code = 2


class RangeError(ConfigError):
    exit_code = 3


class InconsistentError(ConfigError):
    exit_code = 4


@dataclass(frozen=True)
class ExperimentConfig:
    command: str = "run"
    model: str = "normal-means"
    algorithm: str = "both"
    n: Optional[int] = None
    p: Optional[int] = None
    qn: Optional[int] = None
    A: Optional[float] = None
    a: str = "1/n"
    sigma2: float = 1.0
    iters: int = 20000
    burnin: int = 5000
    reps: int = 20
    seed: int = 0
    s: float = 0.1
    r: float = 0.1
    table: Optional[int] = None
    scale: str = "desk"
    out: str = "dirlap-out"
    workers: int = 1

    @property
    def algorithms(self) -> tuple[str, ...]:
        return ("original", "correct") if self.algorithm == "both" else (self.algorithm,)

    def a_value(self) -> float:
        return resolve_a(self.a, self.model, self.n, self.p)

    def scenarios(self) -> list[Scenario]:
        if self.command == "reproduce":
            kw = {"iters": self.iters, "burnin": self.burnin}
            if self.table == 2:
                kw["prior"] = VariancePrior(self.s, self.r)
            return table_grid(self.table, self.scale, self.seed, **kw)
        if self.model == "normal-means":
            return [NmScenario(self.n, self.qn, self.A, self.a_value(), self.reps, self.iters, self.burnin,
                               self.seed)]
        return [RegScenario(self.n, self.p, self.p // 10, self.sigma2, self.a_value(), self.reps, self.iters,
                            self.burnin, self.seed, VariancePrior(self.s, self.r))]

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: Mapping) -> "ExperimentConfig":
        return cls(**dict(d))


_FIELDS = {f.name: f for f in fields(ExperimentConfig)}
_INT_KEYS = {"n", "p", "qn", "iters", "burnin", "reps", "seed", "table", "workers"}
_FLOAT_KEYS = {"A", "sigma2", "s", "r"}


def resolve_a(literal: str, model: str, n: Optional[int], p: Optional[int]) -> float:
    """'1/n', '1/p', 'k/m' or a decimal, against the cell's own n or p."""
    lit = str(literal).strip()
    if lit == "1/n":
        return 1.0 / n
    if lit == "1/p":
        if model != "linreg":
            raise InconsistentError("a = 1/p is only meaningful for the linreg model")
        return 1.0 / p
    try:
        val = float(Fraction(lit))
    except (ValueError, ZeroDivisionError):
        raise RangeError(f"cannot parse hyperparameter a = {literal!r}") from None
    if not val > 0:
        raise RangeError("hyperparameter a must be positive")
    return val


def read_config_file(path: str) -> dict:
    out = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key = value")
            key, value = (t.strip() for t in line.split("=", 1))
            out[key.replace("-", "_")] = value
    return out


def _coerce(key: str, value):
    if key not in _FIELDS:
        raise UnknownKeyError(f"unknown configuration key {key!r}")
    if value is None:
        return None
    try:
        if key in _INT_KEYS:
            return int(value)
        if key in _FLOAT_KEYS:
            return float(value)
    except (TypeError, ValueError):
        raise RangeError(f"{key} = {value!r} is not a number") from None
    return str(value)


def resolve_config(args: Mapping, config_file: Optional[str] = None) -> ExperimentConfig:
    """Merge defaults, the config file and ``args`` (None values are unset), then validate."""
    merged: dict = {}
    if config_file:
        for k, v in read_config_file(config_file).items():
            merged[k] = _coerce(k, v)
    for k, v in args.items():
        if v is not None:
            merged[k] = _coerce(k, v)
    command = merged.get("command", "run")
    if command == "reproduce":
        merged.setdefault("out", f"table{merged.get('table')}-{merged.get('scale', 'desk')}")
        if merged.get("table") == 2:
            merged["model"] = "linreg"
    elif merged.get("model", "normal-means") == "normal-means":
        merged.setdefault("n", 100)
        merged.setdefault("qn", 5)
        merged.setdefault("A", 7.0)
    else:
        merged.setdefault("n", 50)
        merged.setdefault("p", 100)
        merged.setdefault("a", "1/p")
        merged.setdefault("reps", 50)
    cfg = ExperimentConfig(**merged)
    validate(cfg)
    return cfg


def validate(cfg: ExperimentConfig) -> None:
    if cfg.command not in ("run", "reproduce"):
        raise ConfigError(f"unknown command {cfg.command!r}")
    if cfg.algorithm not in ALGORITHM_CHOICES:
        raise RangeError(f"algorithm must be one of {ALGORITHM_CHOICES}")
    if not cfg.iters > cfg.burnin >= 0:
        raise InconsistentError("need iters > burnin >= 0")
    if cfg.reps < 1 or cfg.workers < 1:
        raise RangeError("reps and workers must be at least 1")
    if not 0 <= cfg.seed < 2**64:
        raise RangeError("seed must be an unsigned 64-bit integer")
    if not (cfg.s > 0 and cfg.r > 0 and cfg.sigma2 > 0):
        raise RangeError("s, r and sigma2 must be positive")
    if cfg.command == "reproduce":
        if cfg.table not in (1, 2, 3):
            raise RangeError("table must be 1, 2 or 3")
        if cfg.scale not in ("desk", "full"):
            raise RangeError("scale must be desk or full")
        return
    if cfg.model not in MODELS:
        raise RangeError(f"model must be one of {MODELS}")
    if cfg.n is None or cfg.n < 1:
        raise RangeError("n must be a positive integer")
    if cfg.model == "normal-means":
        if cfg.p is not None:
            raise InconsistentError("p is not used by the normal-means model")
        if cfg.qn is None or cfg.qn < 1:
            raise RangeError("qn must be a positive integer")
        if cfg.qn > cfg.n:
            raise InconsistentError(f"qn = {cfg.qn} exceeds n = {cfg.n}")
        if cfg.A is None:
            raise RangeError("A is required for the normal-means model")
    else:
        if cfg.p is None or cfg.p < 10 or cfg.p % 10:
            raise RangeError("p must be a positive multiple of 10 for the block design")
        if cfg.qn is not None and cfg.qn != cfg.p // 2:
            raise InconsistentError(f"the block design has qn = p/2 = {cfg.p // 2} non-zero coefficients")
    cfg.a_value()


def versions() -> dict:
    import numba
    import numpy
    import scipy

    return {"dirlap": __version__, "python": platform.python_version(), "numpy": numpy.__version__,
            "scipy": scipy.__version__, "numba": numba.__version__}


@dataclass
class RunManifest:
    config: dict
    seed: int
    versions: dict
    outputs: dict
    cells: list
    timings: dict

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "RunManifest":
        return cls(**json.loads(text))

    def experiment_config(self) -> ExperimentConfig:
        return ExperimentConfig.from_dict(self.config)
