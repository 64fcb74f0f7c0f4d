"""CSV rows and JSON summaries; the only place output bytes are formatted."""

from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path
from typing import Any, Iterable

from .calibrate import LogisticFit
from .episodes import CohortStats, Trajectory, ZoneConfig, classify_zone, phase_trajectory
from .model import evaluate_transition
from .sensitivity import GridCellResult
from .stochastic import SweepResult

SWEEP_HEADER = ("gamma", "n_trials", "n_fired", "p_hat", "ci_low", "ci_high")
TRAJECTORY_HEADER = (
    "t", "scenario", "lambda", "gamma", "psi", "theta", "phi",
    "facilitation", "inhibition", "margin", "fired", "outcome",
)
PHASE_HEADER = ("t", "scenario", "lambda", "psi", "zone")
GRID_HEADER = (
    "alpha", "beta", "delta", "kappa", "regime", "suppression_growth",
    "fit_midpoint", "fit_steepness", "divergence_lambda_gap",
)
COHORTS_HEADER = (
    "cohort", "n_agents", "mean_final_lambda", "sd_final_lambda", "mean_final_psi", "sd_final_psi",
)


def fmt(value: Any) -> str:
    """Shortest round-trippable text; booleans as 1/0, None as empty."""
    if value is None:
        return ""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        return repr(value)
    if hasattr(value, "value"):
        return str(value.value)
    return str(value)


def to_csv(header: Iterable[str], rows: Iterable[Iterable[Any]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(v) for v in row])
    return buf.getvalue()


def sweep_rows(sweep: SweepResult):
    for g, e in zip(sweep.gamma_grid, sweep.estimates):
        yield (g, e.n_trials, e.n_fired, e.p_hat, e.ci_low, e.ci_high)


def trajectory_rows(scenario: str, trajectory: Trajectory):
    """One row per time point, t = 0..horizon; ``outcome`` is what was applied leaving t."""
    outcomes = [s.outcome for s in trajectory.steps] + [None]
    for t, (state, outcome) in enumerate(zip(trajectory.states, outcomes)):
        r = evaluate_transition(state)
        yield (
            t, scenario, state.lam, state.gamma, state.psi, state.theta, state.phi,
            r.facilitation, r.inhibition, r.margin, r.fired,
            None if outcome is None else int(outcome),
        )


def phase_rows(scenario: str, trajectory: Trajectory, zones: ZoneConfig):
    for t, point in enumerate(phase_trajectory(trajectory)):
        yield (t, scenario, point[0], point[1], classify_zone(point, zones))


def grid_rows(results: list[GridCellResult]):
    for r in results:
        p = r.params
        yield (
            p.alpha, p.beta, p.delta, p.kappa, r.regime, r.suppression_growth,
            r.fit.midpoint, r.fit.steepness, r.divergence.lambda_gap,
        )


def cohort_rows(stats: CohortStats):
    for name, c in stats.cohorts.items():
        yield (name, c.n_agents, c.mean_final_lambda, c.sd_final_lambda, c.mean_final_psi, c.sd_final_psi)


def fit_record(fit: LogisticFit, band: tuple[float, float] | None) -> dict[str, Any]:
    return {
        "midpoint": fit.midpoint,
        "steepness": fit.steepness,
        "residual": fit.residual,
        "converged": fit.converged,
        "diagnostic": fit.diagnostic,
        "band": list(band) if band is not None else None,
    }


def read_sweep_csv(path: Path) -> tuple[list[float], list[float], list[int]]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != SWEEP_HEADER:
            raise ValueError(f"{path}: expected header {','.join(SWEEP_HEADER)}")
        rows = list(reader)
    return (
        [float(r["gamma"]) for r in rows],
        [float(r["p_hat"]) for r in rows],
        [int(r["n_trials"]) for r in rows],
    )


def dump_json(obj: Any) -> str:
    def default(o):
        if hasattr(o, "value"):
            return o.value
        raise TypeError(type(o).__name__)

    return json.dumps(_nan_to_none(obj), indent=2, default=default) + "\n"


def _nan_to_none(obj: Any) -> Any:
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, dict):
        return {k: _nan_to_none(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_nan_to_none(v) for v in obj]
    return obj
