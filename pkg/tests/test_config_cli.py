import csv
import json
import os

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dirlap.cli import main
from dirlap.config import (
    ExperimentConfig,
    InconsistentError,
    RangeError,
    RunManifest,
    UnknownKeyError,
    read_config_file,
    resolve_a,
    resolve_config,
)


def test_a_literals():
    cfg = resolve_config({"model": "normal-means", "n": 100, "a": "1/n"})
    assert cfg.a_value() == 0.01
    assert resolve_a("1/2", "normal-means", 10, None) == 0.5
    assert resolve_a("0.5", "linreg", 10, 20) == 0.5
    assert resolve_a("1/p", "linreg", 50, 100) == 0.01


def test_errors_have_distinct_codes():
    with pytest.raises(InconsistentError) as e1:
        resolve_config({"model": "normal-means", "a": "1/p"})
    assert "linreg" in str(e1.value)
    with pytest.raises(InconsistentError) as e2:
        resolve_config({"n": 5, "qn": 7})
    assert "exceeds" in str(e2.value)
    with pytest.raises(RangeError):
        resolve_config({"iters": "many"})
    with pytest.raises(RangeError):
        resolve_config({"a": "-1"})
    with pytest.raises(UnknownKeyError):
        resolve_config({"colour": "red"})
    codes = {UnknownKeyError.exit_code, RangeError.exit_code, InconsistentError.exit_code}
    assert len(codes) == 3 and 0 not in codes


def test_defaults():
    cfg = resolve_config({})
    assert (cfg.iters, cfg.burnin, cfg.s, cfg.r) == (20000, 5000, 0.1, 0.1)
    reg = resolve_config({"model": "linreg"})
    assert (reg.n, reg.p, reg.a) == (50, 100, "1/p")


def test_reproduce_instantiates_table_grid():
    cfg = resolve_config({"command": "reproduce", "table": 1, "scale": "desk"})
    cells = cfg.scenarios()
    assert len(cells) == 24 and all(s.reps == 20 for s in cells)
    assert resolve_config({"command": "reproduce", "table": 2}).scenarios()[0].prior.s == 0.1


def test_config_file_and_precedence(tmp_path):
    f = tmp_path / "run.cfg"
    f.write_text("# cell\nn = 40\nqn=4  # signals\nA = 6.5\na = 1/2\nseed=11\n", encoding="utf-8")
    raw = read_config_file(str(f))
    assert raw["qn"] == "4"
    cfg = resolve_config({"seed": 12}, str(f))
    assert (cfg.n, cfg.qn, cfg.A, cfg.a_value(), cfg.seed) == (40, 4, 6.5, 0.5, 12)
    f.write_text("n 40\n", encoding="utf-8")
    with pytest.raises(Exception):
        resolve_config({}, str(f))


configs = st.builds(
    dict,
    n=st.integers(1, 500),
    A=st.floats(0, 20, allow_nan=False),
    a=st.sampled_from(["1/n", "0.5", "1/2", "0.03"]),
    seed=st.integers(0, 2**64 - 1),
    iters=st.integers(2, 10**6),
    algorithm=st.sampled_from(["original", "correct", "both"]),
)


@settings(max_examples=60, deadline=None)
@given(configs)
def test_config_round_trip(d):
    d["qn"] = max(1, d["n"] // 3)
    d["burnin"] = d["iters"] // 2
    cfg = resolve_config(d)
    again = resolve_config({k: v for k, v in cfg.to_dict().items()})
    assert again == cfg
    man = RunManifest(cfg.to_dict(), cfg.seed, {}, {}, [], {})
    assert RunManifest.from_json(man.to_json()).experiment_config() == cfg


def test_cli_run_writes_csvs_and_manifest(tmp_path):
    out = tmp_path / "o"
    rc = main(["run", "--model", "normal-means", "--algorithm", "both", "--n", "10", "--qn", "2", "--A", "6",
               "--a", "1/n", "--iters", "400", "--burnin", "100", "--reps", "2", "--seed", "1", "--out", str(out)])
    assert rc == 0
    man = RunManifest.from_json((out / "manifest.json").read_text(encoding="utf-8"))
    assert man.experiment_config() == resolve_config(
        {"command": "run", "model": "normal-means", "algorithm": "both", "n": 10, "qn": 2, "A": 6.0, "a": "1/n",
         "iters": 400, "burnin": 100, "reps": 2, "seed": 1, "out": str(out)})
    assert {"numpy", "scipy", "numba", "dirlap"} <= set(man.versions)
    cells = {c["cell"] for c in man.cells}
    for name in ("replicates", "cells", "coords"):
        path = man.outputs[name]
        assert os.path.exists(path)
        with open(path, encoding="utf-8") as fh:
            assert all(int(r["cell"]) in cells for r in csv.DictReader(fh))


def test_cli_linreg_run(tmp_path):
    rc = main(["run", "--model", "linreg", "--n", "10", "--p", "20", "--a", "1/p", "--iters", "300",
               "--burnin", "100", "--reps", "1", "--algorithm", "correct", "--out", str(tmp_path)])
    assert rc == 0
    with open(tmp_path / "cells.csv", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 1 and rows[0]["algorithm"] == "correct" and float(rows[0]["a"]) == 0.05


def test_cli_error_codes(capsys):
    assert main(["run", "--model", "normal-means", "--a", "1/p"]) == InconsistentError.exit_code
    assert main(["run", "--n", "5", "--qn", "7"]) == InconsistentError.exit_code
    assert main(["run", "--model", "linreg", "--p", "15"]) == RangeError.exit_code
    with pytest.raises(SystemExit) as e:
        main(["run", "--bogus", "1"])
    assert e.value.code == 2
    err = capsys.readouterr().err
    assert "exceeds" in err and "1/p" in err


def test_cli_validate_writes_json(tmp_path):
    path = tmp_path / "v.json"
    rc = main(["validate", "--seed", "2", "--draws", "20000", "--out", str(path)])
    rep = json.loads(path.read_text(encoding="utf-8"))
    assert rc == (0 if rep["passed"] else 1)
    assert all({"name", "passed"} <= set(c) for c in rep["checks"])


def test_manifest_json_is_stable():
    cfg = ExperimentConfig()
    m = RunManifest(cfg.to_dict(), 0, {"dirlap": "x"}, {"cells": "c.csv"}, [{"cell": 0}], {"total_seconds": 1.0})
    assert RunManifest.from_json(m.to_json()) == m
