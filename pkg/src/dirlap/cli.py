"""Command-line entry point: ``dirlap run | reproduce | validate``."""
from __future__ import annotations

import argparse
import json
import os
import sys
import time
from typing import Optional, Sequence

from .config import ALGORITHM_CHOICES, MODELS, ConfigError, ExperimentConfig, RunManifest, resolve_config, versions
from .experiments import run_grid, write_csvs


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="dirlap", description="Dirichlet-Laplace Gibbs samplers and simulation grids.")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="key = value configuration file")
        p.add_argument("--seed", type=int)
        p.add_argument("--iters", type=int)
        p.add_argument("--burnin", type=int)
        p.add_argument("--s", type=float, help="inverse-gamma shape for sigma^2 (linreg)")
        p.add_argument("--r", type=float, help="inverse-gamma rate for sigma^2 (linreg)")
        p.add_argument("--workers", type=int, help="worker processes")
        p.add_argument("--out", help="output directory")

    run = sub.add_parser("run", help="run one simulation cell")
    run.add_argument("--model", choices=MODELS)
    run.add_argument("--algorithm", choices=ALGORITHM_CHOICES)
    run.add_argument("--n", type=int)
    run.add_argument("--p", type=int)
    run.add_argument("--qn", type=int)
    run.add_argument("--A", type=float)
    run.add_argument("--a", help="1/n, 1/p, a fraction or a decimal")
    run.add_argument("--sigma2", type=float)
    run.add_argument("--reps", type=int)
    common(run)

    rep = sub.add_parser("reproduce", help="run a preset table grid")
    rep.add_argument("--table", type=int, required=True)
    rep.add_argument("--scale", choices=("desk", "full"))
    common(rep)

    val = sub.add_parser("validate", help="run the oracle and discrepancy checks")
    val.add_argument("--seed", type=int, default=0)
    val.add_argument("--draws", type=int, default=200_000, help="retained draws for the n = 1 chains")
    val.add_argument("--out", help="write the JSON report here instead of stdout")
    return ap


def _execute(cfg: ExperimentConfig) -> int:
    scenarios = cfg.scenarios()
    t0 = time.perf_counter()
    grid = run_grid(scenarios, cfg.algorithms, cfg.workers)
    elapsed = time.perf_counter() - t0
    paths = write_csvs(cfg.out, grid)
    cells = []
    for c, reports in enumerate(grid):
        labels = {k: v for k, v in reports[0].labels.items() if k != "signal"}
        cells.append({"cell": c, "labels": labels, "seconds": reports[0].seconds,
                      "status": {r.algorithm: ("ok" if r.ok else "error") for r in reports},
                      "outputs": paths})
    manifest = RunManifest(cfg.to_dict(), cfg.seed, versions(), paths, cells, {"total_seconds": elapsed})
    with open(os.path.join(cfg.out, "manifest.json"), "w", encoding="utf-8") as fh:
        fh.write(manifest.to_json() + "\n")
    failed = [c["cell"] for c in cells if "error" in c["status"].values()]
    if failed:
        print(f"cells failed: {failed}; see cells.csv", file=sys.stderr)
        return 5
    return 0


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = vars(_parser().parse_args(argv))
    command = args.pop("command")
    if command == "validate":
        from .validation import run_validation_suite

        report = run_validation_suite(args["seed"], kept=args["draws"])
        text = json.dumps(report, indent=2)
        if args["out"]:
            with open(args["out"], "w", encoding="utf-8") as fh:
                fh.write(text + "\n")
        else:
            print(text)
        return 0 if report["passed"] else 1
    config_file = args.pop("config")
    try:
        cfg = resolve_config({"command": command, **args}, config_file)
    except ConfigError as exc:
        print(f"dirlap: error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"dirlap: error: {exc}", file=sys.stderr)
        return 2
    return _execute(cfg)


if __name__ == "__main__":
    raise SystemExit(main())
