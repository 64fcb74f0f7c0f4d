"""Sweep of the (alpha, beta, delta) feedback grid."""

from __future__ import annotations

import itertools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import setups
from .calibrate import LogisticFit, fit_logistic
from .episodes import CohortStats, ConfigurationError, cohort_divergence, run_suppression
from .model import FeedbackParams, ModelState, Regime, classify_regime
from .rng import SeedSpec
from .stochastic import NoiseSpec, SweepResult, gamma_sweep, wilson_interval


@dataclass(frozen=True)
class ParamGrid:
    alphas: tuple[float, ...] = setups.GRID_ALPHAS
    betas: tuple[float, ...] = setups.GRID_BETAS
    deltas: tuple[float, ...] = setups.GRID_DELTAS
    kappa: float = setups.GRID_KAPPA
    base_feedback: FeedbackParams = field(default_factory=FeedbackParams)

    def __post_init__(self) -> None:
        for name in ("alphas", "betas", "deltas"):
            values = tuple(float(v) for v in getattr(self, name))
            if not values:
                raise ConfigurationError(f"grid.{name} must not be empty")
            object.__setattr__(self, name, values)
        # Validate every combination up front.
        self.cells()

    def cells(self) -> list[FeedbackParams]:
        """Feedback parameters for every combination, in lexicographic (alpha, beta, delta) order."""
        return [
            self.base_feedback.replace(alpha=a, beta=b, delta=d, kappa=self.kappa)
            for a, b, d in itertools.product(self.alphas, self.betas, self.deltas)
        ]

    def __len__(self) -> int:
        return len(self.alphas) * len(self.betas) * len(self.deltas)


@dataclass(frozen=True)
class GridCellResult:
    index: int
    params: FeedbackParams
    regime: Regime
    sweep: SweepResult
    fit: LogisticFit
    divergence: CohortStats
    suppression_growth: bool
    # "growing", "constant" or "decaying" under perpetual failure
    suppression_trend: str

    @property
    def regime_agrees(self) -> bool:
        expected = {
            Regime.COMPOUNDING: "growing",
            Regime.BOUNDARY: "constant",
            Regime.DECAYING: "decaying",
        }[self.regime]
        return self.suppression_trend == expected


class GridCellError(RuntimeError):
    def __init__(self, index: int, params: FeedbackParams, cause: Exception):
        super().__init__(
            f"grid cell {index} (alpha={params.alpha}, beta={params.beta}, "
            f"delta={params.delta}) failed: {cause}"
        )
        self.index = index
        self.params = params


def count_compounding(grid: ParamGrid) -> int:
    return sum(classify_regime(p) is Regime.COMPOUNDING for p in grid.cells())


def _trend(psi: np.ndarray) -> str:
    d = np.diff(psi)
    if np.all(d > 0):
        return "growing"
    if np.all(d == 0):
        return "constant"
    if np.all(d < 0):
        return "decaying"
    return "mixed"


def run_grid(
    grid: ParamGrid,
    base_state: ModelState,
    noise: NoiseSpec,
    n_trials: int,
    horizon: int,
    seed: SeedSpec,
    *,
    gamma_range: tuple[float, float] = setups.EXP1_GAMMA_RANGE,
    sweep_steps: int = setups.EXP1_STEPS,
    suppression_state: ModelState = setups.EXP2_STATE,
    cohort_state: ModelState = setups.COHORT_STATE,
    n_agents: int = setups.COHORT_AGENTS,
    success_prob: float = setups.COHORT_SUCCESS_PROB,
    split_after: int = setups.COHORT_SPLIT_AFTER,
    shared_sweep_seed: bool = False,
    threads: int = 1,
) -> list[GridCellResult]:
    """Gamma sweep, suppression check and cohort split for every grid cell.

    Sweep seeds come from (seed, cell index), or are all ``seed`` itself with
    ``shared_sweep_seed``. Cohort seeds come from the (beta, delta) pair only,
    so cells that differ in alpha alone see the same draws.
    """
    if suppression_state.psi <= 0:
        raise ConfigurationError("suppression_state.psi must be > 0 to show a trend")
    sweep_parent, cohort_parent = seed.child(1), seed.child(2)
    bd_index = {bd: i for i, bd in enumerate(itertools.product(grid.betas, grid.deltas))}

    def run_cell(item: tuple[int, FeedbackParams]) -> GridCellResult:
        idx, params = item
        try:
            sweep = gamma_sweep(
                base_state,
                *gamma_range,
                sweep_steps,
                noise,
                n_trials,
                sweep_parent if shared_sweep_seed else sweep_parent.child(idx),
            )
            supp = run_suppression(suppression_state, params, horizon)
            psi = np.array([s.psi for s in supp.states])
            div = cohort_divergence(
                cohort_state,
                params,
                success_prob,
                n_agents,
                horizon,
                split_after,
                cohort_parent.child(bd_index[(params.beta, params.delta)]),
            )
            return GridCellResult(
                index=idx,
                params=params,
                regime=classify_regime(params),
                sweep=sweep,
                fit=fit_logistic(sweep),
                divergence=div,
                suppression_growth=bool(psi[-1] > psi[0]),
                suppression_trend=_trend(psi),
            )
        except Exception as exc:
            raise GridCellError(idx, params, exc) from exc

    items = list(enumerate(grid.cells()))
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(run_cell, items))
    return [run_cell(it) for it in items]


_FAMILY_ALPHA = 0.05


def _half_widths(sweep: SweepResult, confidence: float) -> np.ndarray:
    bounds = np.array([wilson_interval(e.n_fired, e.n_trials, confidence) for e in sweep.estimates])
    return (bounds[:, 1] - bounds[:, 0]) / 2


@dataclass(frozen=True)
class InvarianceReport:
    passed: bool
    max_deviation: float
    monotone: bool
    within_sampling_bound: bool


def check_sigmoid_invariance(results: list[GridCellResult], tolerance: float) -> InvarianceReport:
    """Compare every cell's gamma sweep against the first.

    Cells sharing a sweep seed must agree exactly. Otherwise each pointwise
    gap must stay under the sum of the two Wilson half-widths, taken at a
    confidence that holds 95% jointly over the grid points (Bonferroni).
    Every curve must also be non-decreasing up to ``tolerance`` per adjacent
    pair.
    """
    if not results:
        return InvarianceReport(True, 0.0, True, True)
    ref = results[0].sweep
    for r in results[1:]:
        s = r.sweep
        if (s.base_state, s.noise, s.gamma_grid) != (ref.base_state, ref.noise, ref.gamma_grid) or not np.array_equal(
            s.n_trials, ref.n_trials
        ):
            raise ConfigurationError(f"cell {r.index} was run with a different sweep configuration")

    ref_p = ref.p_hat
    level = 1 - _FAMILY_ALPHA / len(ref.estimates)
    ref_hw = _half_widths(ref, level)
    max_dev = 0.0
    bounded = True
    monotone = True
    for r in results:
        p = r.sweep.p_hat
        dev = np.abs(p - ref_p)
        max_dev = max(max_dev, float(dev.max()))
        if r.sweep.seed != ref.seed:
            bounded &= bool(np.all(dev <= _half_widths(r.sweep, level) + ref_hw))
        elif np.any(dev != 0):
            bounded = False
        monotone &= bool(np.all(np.diff(p) >= -tolerance))
    return InvarianceReport(monotone and bounded, max_dev, monotone, bounded)


def divergence_scaling(results: list[GridCellResult]) -> dict[tuple[float, float], list[tuple[float, float]]]:
    """(alpha, lambda gap) pairs for each (beta, delta), sorted by alpha."""
    out: dict[tuple[float, float], list[tuple[float, float]]] = {}
    for r in results:
        key = (r.params.beta, r.params.delta)
        out.setdefault(key, []).append((r.params.alpha, r.divergence.lambda_gap))
    return {k: sorted(v) for k, v in out.items()}
