"""Command-line entry point: ``asir <experiment> [--config PATH] [--seed N] [--out DIR] [--threads N]``.

Exit codes: 0 success, 1 configuration error (nothing written), 2 runtime
error (partial outputs removed).
"""

from __future__ import annotations

import argparse
import logging
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

from . import __version__
from .calibrate import LogisticFit, estimate_gamma_band, fit_logistic, fit_logistic_points
from .config import EXPERIMENTS, RunConfig, parse_config, resolve
from .episodes import (
    ConfigurationError,
    OutcomePolicy,
    cohort_divergence,
    run_episodes,
    run_suppression,
)
from .model import Regime, classify_regime, critical_gamma, evaluate_transition, forced_transition_time
from .output import (
    COHORTS_HEADER,
    GRID_HEADER,
    PHASE_HEADER,
    SWEEP_HEADER,
    TRAJECTORY_HEADER,
    cohort_rows,
    dump_json,
    fit_record,
    grid_rows,
    phase_rows,
    read_sweep_csv,
    sweep_rows,
    to_csv,
    trajectory_rows,
)
from .sensitivity import check_sigmoid_invariance, count_compounding, run_grid
from .stochastic import SweepResult, gamma_sweep

log = logging.getLogger("asir")


@dataclass
class RunOutput:
    files: dict[str, str] = field(default_factory=dict)
    results: dict[str, Any] = field(default_factory=dict)
    lines: list[str] = field(default_factory=list)


def _sweep(cfg: RunConfig, threads: int) -> SweepResult:
    return gamma_sweep(
        cfg.state,
        cfg["sweep.gamma_from"],
        cfg["sweep.gamma_to"],
        cfg["sweep.steps"],
        cfg.noise,
        cfg["run.n_trials"],
        cfg.seed,
        threads=threads,
    )


def run_exp1(cfg: RunConfig, threads: int) -> RunOutput:
    sweep = _sweep(cfg, threads)
    return RunOutput(
        files={"sweep.csv": to_csv(SWEEP_HEADER, sweep_rows(sweep))},
        results={"critical_gamma": critical_gamma(cfg.state)},
    )


def run_exp2(cfg: RunConfig, threads: int) -> RunOutput:
    suppression = run_suppression(cfg.state, cfg.feedback, cfg.horizon)
    # Silence compounds psi alone until the condition fires; every firing succeeds.
    natural = run_episodes(
        cfg.state,
        cfg.feedback,
        OutcomePolicy.condition_driven(1.0, when_not_fired="suppress"),
        cfg.horizon,
        cfg.seed,
    )
    text = to_csv(
        TRAJECTORY_HEADER,
        [*trajectory_rows("suppression", suppression), *trajectory_rows("natural", natural)],
    )
    return RunOutput(
        files={"trajectory.csv": text},
        results={
            "suppression_final_psi": suppression.final.psi,
            "natural_first_fired": natural.first_fired(),
            "forced_transition_time": forced_transition_time(cfg.state, cfg.feedback),
            "regime": classify_regime(cfg.feedback).value,
        },
    )


def run_exp3(cfg: RunConfig, threads: int) -> RunOutput:
    runs = {
        "success_path": run_episodes(cfg.state, cfg.feedback, OutcomePolicy.scripted(cfg.success_script), cfg.horizon),
        "failure_path": run_episodes(cfg.state, cfg.feedback, OutcomePolicy.scripted(cfg.failure_script), cfg.horizon),
    }
    rows = [row for name, traj in runs.items() for row in trajectory_rows(name, traj)]
    return RunOutput(
        files={"trajectory.csv": to_csv(TRAJECTORY_HEADER, rows)},
        results={f"{name}_final": vars(traj.final) for name, traj in runs.items()},
    )


def run_exp4(cfg: RunConfig, threads: int) -> RunOutput:
    runs = {
        "recovery": run_episodes(cfg.state, cfg.feedback, OutcomePolicy.scripted(cfg.success_script), cfg.horizon),
        "trauma": run_episodes(cfg.state, cfg.feedback, OutcomePolicy.scripted(cfg.failure_script), cfg.horizon),
    }
    phase = [row for name, traj in runs.items() for row in phase_rows(name, traj, cfg.zones)]
    traj_rows = [row for name, traj in runs.items() for row in trajectory_rows(name, traj)]
    final_zones = {}
    for row in phase:
        final_zones[row[1]] = row[4].value
    return RunOutput(
        files={
            "phase.csv": to_csv(PHASE_HEADER, phase),
            "trajectory.csv": to_csv(TRAJECTORY_HEADER, traj_rows),
        },
        results={"final_zone": final_zones},
    )


def run_sweep_grid(cfg: RunConfig, threads: int) -> RunOutput:
    results = run_grid(
        cfg.grid,
        cfg.state,
        cfg.noise,
        cfg["run.n_trials"],
        cfg.horizon,
        cfg.seed,
        gamma_range=(cfg["sweep.gamma_from"], cfg["sweep.gamma_to"]),
        sweep_steps=cfg["sweep.steps"],
        cohort_state=cfg.cohort_state,
        n_agents=cfg["cohort.n_agents"],
        success_prob=cfg["cohort.success_prob"],
        split_after=cfg["cohort.split_after"],
        shared_sweep_seed=cfg["grid.shared_sweep_seed"],
        threads=threads,
    )
    inv = check_sigmoid_invariance(results, tolerance=0.05)
    return RunOutput(
        files={"grid.csv": to_csv(GRID_HEADER, grid_rows(results))},
        results={
            "cells": len(results),
            "compounding": count_compounding(cfg.grid),
            "regime_agreement": all(r.regime_agrees for r in results),
            "sigmoid_max_deviation": inv.max_deviation,
            "sigmoid_invariance_passed": inv.passed,
        },
    )


def _fit_and_band(cfg: RunConfig, fit: LogisticFit) -> tuple[float, float] | None:
    if not fit.converged:
        return None
    return estimate_gamma_band(fit, cfg["fit.band_low"], cfg["fit.band_high"])


def run_fit(cfg: RunConfig, threads: int) -> RunOutput:
    out = RunOutput()
    if cfg["fit.input"]:
        gammas, p_hat, n = read_sweep_csv(Path(cfg["fit.input"]))
        fit = fit_logistic_points(gammas, p_hat, n)
    else:
        sweep = _sweep(cfg, threads)
        out.files["sweep.csv"] = to_csv(SWEEP_HEADER, sweep_rows(sweep))
        fit = fit_logistic(sweep)
    record = fit_record(fit, _fit_and_band(cfg, fit))
    out.files["fit.json"] = dump_json(record)
    out.results = record
    return out


def run_predict(cfg: RunConfig, threads: int) -> RunOutput:
    out = RunOutput()
    checks: dict[str, dict[str, Any]] = {}

    sweep = _sweep(cfg, threads)
    fit = fit_logistic(sweep)
    band = _fit_and_band(cfg, fit)
    crit = critical_gamma(cfg.state)
    span = cfg["sweep.gamma_to"] - cfg["sweep.gamma_from"]
    p1 = (
        band is not None
        and crit is not None
        and abs(fit.midpoint - crit) <= 0.1
        and cfg["sweep.gamma_from"] < band[0] <= band[1] < cfg["sweep.gamma_to"]
        and band[1] - band[0] < span / 2
    )
    checks["gamma_band"] = {"passed": p1, "fit": fit_record(fit, band), "critical_gamma": crit}

    t_forced = forced_transition_time(cfg.state, cfg.feedback)
    regime = classify_regime(cfg.feedback)
    if regime is Regime.COMPOUNDING:
        first = None
        if t_forced is not None:
            states = run_suppression(cfg.state, cfg.feedback, t_forced).states
            fired = [evaluate_transition(s).fired for s in states]
            first = fired.index(True) if True in fired else None
        p2: bool | None = t_forced is not None and first == t_forced
    else:
        p2 = None
    checks["forced_transition"] = {"passed": p2, "time": t_forced, "regime": regime.value}

    stats = cohort_divergence(
        cfg.cohort_state,
        cfg.feedback,
        cfg["cohort.success_prob"],
        cfg["cohort.n_agents"],
        cfg.horizon,
        cfg["cohort.split_after"],
        cfg.seed.child(3),
        cfg["policy.when_not_fired"],
    )
    p3 = (
        stats.early_success.n_agents > 0
        and stats.early_failure.n_agents > 0
        and stats.lambda_gap > 0
        and stats.psi_gap > 0
    )
    checks["path_dependence"] = {"passed": p3, "lambda_gap": stats.lambda_gap, "psi_gap": stats.psi_gap}
    out.files["cohorts.csv"] = to_csv(COHORTS_HEADER, cohort_rows(stats))
    out.files["sweep.csv"] = to_csv(SWEEP_HEADER, sweep_rows(sweep))
    out.files["predictions.json"] = dump_json(checks)
    out.results = {name: c["passed"] for name, c in checks.items()}
    for name, c in checks.items():
        verdict = "N/A" if c["passed"] is None else ("PASS" if c["passed"] else "FAIL")
        out.lines.append(f"{verdict} {name}")
    return out


RUNNERS: dict[str, Callable[[RunConfig, int], RunOutput]] = {
    "exp1": run_exp1,
    "exp2": run_exp2,
    "exp3": run_exp3,
    "exp4": run_exp4,
    "sweep-grid": run_sweep_grid,
    "fit": run_fit,
    "predict": run_predict,
}


def run_experiment(cfg: RunConfig, out_dir: Path, threads: int = 1) -> tuple[RunOutput, list[Path]]:
    """Run ``cfg`` and write its files plus ``summary.json`` into ``out_dir``.

    Everything is computed before the first byte is written; if writing
    fails, files written so far are removed.
    """
    start = time.perf_counter()
    result = RUNNERS[cfg.experiment](cfg, threads)
    summary = {
        "artifact": "asir",
        "version": __version__,
        "experiment": cfg.experiment,
        "master_seed": cfg["run.seed"],
        "threads": threads,
        "config": cfg.effective(),
        "outputs": sorted(result.files) + ["summary.json"],
        "results": result.results,
        "wall_clock_seconds": time.perf_counter() - start,
    }
    files = dict(result.files)
    files["summary.json"] = dump_json(summary)

    created_dir = not out_dir.exists()
    written: list[Path] = []
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        for name, text in files.items():
            path = out_dir / name
            with open(path, "w", newline="") as fh:
                fh.write(text)
            written.append(path)
    except BaseException:
        _cleanup(written, out_dir if created_dir else None)
        raise
    return result, written


def _cleanup(paths: list[Path], directory: Path | None) -> None:
    for p in paths:
        p.unlink(missing_ok=True)
    if directory is not None:
        try:
            directory.rmdir()
        except OSError:
            pass


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="asir", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="experiment", required=True, metavar="EXPERIMENT")
    for name in EXPERIMENTS:
        p = sub.add_parser(name)
        p.add_argument("--config", type=Path, help="key = value config file or a summary.json")
        p.add_argument("--seed", type=int, help="master seed (overrides run.seed)")
        p.add_argument("--out", type=Path, help="output directory (overrides run.output_dir)")
        p.add_argument("--threads", type=int, default=1, help="worker threads; never changes results")
    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    args = build_parser().parse_args(argv)

    try:
        if args.threads < 1:
            raise ConfigurationError("--threads must be >= 1")
        if args.config is not None:
            try:
                text = args.config.read_text()
            except OSError as exc:
                raise ConfigurationError(f"cannot read config: {exc}") from None
            cfg = parse_config(text, args.experiment)
        else:
            cfg = resolve({}, args.experiment)
        overrides: dict[str, Any] = {}
        if args.seed is not None:
            overrides["run.seed"] = args.seed
        if args.out is not None:
            overrides["run.output_dir"] = str(args.out)
        if overrides:
            cfg = cfg.with_overrides(**overrides)
    except ConfigurationError as exc:
        print(f"asir: config error: {exc}", file=sys.stderr)
        return 1

    try:
        result, written = run_experiment(cfg, Path(cfg["run.output_dir"]), args.threads)
    except Exception as exc:
        log.debug("run failed", exc_info=True)
        print(f"asir: runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2

    for line in result.lines:
        print(line)
    for path in written:
        print(f"wrote {path}", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
