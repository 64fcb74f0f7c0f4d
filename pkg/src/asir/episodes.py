"""Multi-step trajectories: suppression runs, episode sequences, phase plane, cohorts."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .model import (
    FeedbackParams,
    ModelError,
    ModelState,
    Outcome,
    StateOverflowError,
    TransitionReport,
    apply_feedback,
    check_finite_arrays,
    evaluate_transition,
    facilitation,
    feedback_update,
    growth_factor,
)
from .rng import SeedSpec, uniforms

NON_FIRED_MODES = ("failure", "hold", "suppress")


class ConfigurationError(ValueError):
    pass


@dataclass(frozen=True)
class OutcomePolicy:
    """How each episode's outcome is decided.

    ``scripted`` applies ``script[t]`` unconditionally. ``condition`` draws a
    success with probability ``success_prob`` whenever the transition fires;
    on non-fired steps ``when_not_fired`` picks one of:

    * ``"failure"``: apply the full failure update (silence compounds),
    * ``"hold"``: leave the state unchanged,
    * ``"suppress"``: compound psi only, holding everything else.
    """

    mode: str
    script: tuple[Outcome, ...] | None = None
    success_prob: float | None = None
    when_not_fired: str = "failure"

    def __post_init__(self) -> None:
        if self.mode == "scripted":
            if self.script is None or self.success_prob is not None:
                raise ConfigurationError("scripted policy needs a script and no success_prob")
            object.__setattr__(self, "script", tuple(Outcome(int(o)) for o in self.script))
        elif self.mode == "condition":
            if self.script is not None or self.success_prob is None:
                raise ConfigurationError("condition-driven policy needs success_prob and no script")
            p = float(self.success_prob)
            if not 0.0 <= p <= 1.0:
                raise ConfigurationError(f"success_prob must be in [0,1], got {p!r}")
            object.__setattr__(self, "success_prob", p)
        else:
            raise ConfigurationError(f"unknown policy mode {self.mode!r}")
        if self.when_not_fired not in NON_FIRED_MODES:
            raise ConfigurationError(f"when_not_fired must be one of {NON_FIRED_MODES}")

    @classmethod
    def scripted(cls, script) -> OutcomePolicy:
        return cls("scripted", script=tuple(script))

    @classmethod
    def condition_driven(cls, success_prob: float, when_not_fired: str = "failure") -> OutcomePolicy:
        return cls("condition", success_prob=success_prob, when_not_fired=when_not_fired)

    @property
    def update_when_not_fired(self) -> bool:
        return self.when_not_fired == "failure"


@dataclass(frozen=True)
class Step:
    t: int
    state_before: ModelState
    report: TransitionReport
    outcome: Outcome | None
    state_after: ModelState
    # "feedback" (outcome applied), "hold" (unchanged) or "suppress" (psi only)
    kind: str


@dataclass(frozen=True)
class Trajectory:
    initial: ModelState
    steps: tuple[Step, ...]
    params: FeedbackParams
    policy: OutcomePolicy | None = None

    @property
    def states(self) -> list[ModelState]:
        return [self.initial] + [s.state_after for s in self.steps]

    @property
    def final(self) -> ModelState:
        return self.steps[-1].state_after if self.steps else self.initial

    def first_fired(self) -> int | None:
        for s in self.steps:
            if s.report.fired:
                return s.t
        return None


def _check_horizon(horizon: int) -> int:
    if isinstance(horizon, bool) or int(horizon) != horizon or horizon < 0:
        raise ValueError(f"horizon must be a non-negative integer, got {horizon!r}")
    return int(horizon)


def _suppress(state: ModelState, params: FeedbackParams) -> ModelState:
    psi = state.psi * growth_factor(params)
    if not math.isfinite(psi):
        raise StateOverflowError("psi", psi)
    return state.replace(psi=psi)


def run_suppression(initial: ModelState, params: FeedbackParams, horizon: int) -> Trajectory:
    """Perpetual silence: psi compounds by ``beta + delta`` each step, nothing else moves."""
    horizon = _check_horizon(horizon)
    steps = []
    state = initial
    for t in range(horizon):
        after = _suppress(state, params)
        steps.append(Step(t, state, evaluate_transition(state), None, after, "suppress"))
        state = after
    return Trajectory(initial, tuple(steps), params)


def run_episodes(
    initial: ModelState,
    params: FeedbackParams,
    policy: OutcomePolicy,
    horizon: int,
    seed: SeedSpec | None = None,
    index: int = 0,
) -> Trajectory:
    """Evaluate, decide the outcome, apply feedback; repeat ``horizon`` times.

    Condition-driven draws come from ``seed`` at counter ``index`` (one slot
    per step), so agent ``index`` of :func:`cohort_divergence` replays here.
    """
    horizon = _check_horizon(horizon)
    if policy.mode == "scripted" and len(policy.script) < horizon:
        raise ConfigurationError(
            f"script has {len(policy.script)} outcomes but horizon is {horizon}"
        )
    if policy.mode == "condition" and seed is None:
        raise ConfigurationError("condition-driven episodes need a seed")

    steps = []
    state = initial
    for t in range(horizon):
        report = evaluate_transition(state)
        if policy.mode == "scripted":
            outcome = policy.script[t]
        elif report.fired:
            u = uniforms(seed, np.array([index]), t)[0]
            outcome = Outcome.SUCCESS if u < policy.success_prob else Outcome.FAILURE
        elif policy.when_not_fired == "failure":
            outcome = Outcome.FAILURE
        else:
            outcome = None

        if outcome is not None:
            after, kind = apply_feedback(state, params, outcome), "feedback"
        elif policy.when_not_fired == "suppress":
            after, kind = _suppress(state, params), "suppress"
        else:
            after, kind = state, "hold"
        steps.append(Step(t, state, report, outcome, after, kind))
        state = after
    return Trajectory(initial, tuple(steps), params, policy)


def periodic_script(horizon: int, majority: Outcome, every: int = 5) -> tuple[Outcome, ...]:
    """``majority`` everywhere except every ``every``-th episode (1-based).

    For 15 episodes this gives the 12/15 and 3/15 paths with the minority
    outcome at episodes 5, 10 and 15.
    """
    minority = Outcome(1 - int(majority))
    return tuple(minority if (t + 1) % every == 0 else majority for t in range(horizon))


def phase_trajectory(trajectory: Trajectory) -> list[tuple[float, float]]:
    return [(s.lam, s.psi) for s in trajectory.states]


class ZoneLabel(str, enum.Enum):
    HEALTHY = "Healthy"
    TRAUMA = "Trauma"
    TRANSITIONAL = "Transitional"


@dataclass(frozen=True)
class ZoneConfig:
    healthy_lambda_min: float
    healthy_psi_max: float
    trauma_lambda_max: float
    trauma_psi_min: float

    def __post_init__(self) -> None:
        if (
            self.healthy_lambda_min <= self.trauma_lambda_max
            and self.trauma_psi_min <= self.healthy_psi_max
        ):
            raise ConfigurationError("healthy and trauma zones overlap")

    @classmethod
    def relative_to(cls, initial: ModelState) -> ZoneConfig:
        return cls(
            healthy_lambda_min=initial.lam,
            healthy_psi_max=initial.psi / 2,
            trauma_lambda_max=initial.lam,
            trauma_psi_min=2 * initial.psi,
        )


def classify_zone(point: tuple[float, float], zones: ZoneConfig) -> ZoneLabel:
    lam, psi = point
    if lam >= zones.healthy_lambda_min and psi <= zones.healthy_psi_max:
        return ZoneLabel.HEALTHY
    if lam <= zones.trauma_lambda_max and psi >= zones.trauma_psi_min:
        return ZoneLabel.TRAUMA
    return ZoneLabel.TRANSITIONAL


@dataclass(frozen=True)
class CohortSummary:
    n_agents: int
    mean_final_lambda: float
    sd_final_lambda: float
    mean_final_psi: float
    sd_final_psi: float

    @classmethod
    def of(cls, lam: np.ndarray, psi: np.ndarray) -> CohortSummary:
        if len(lam) == 0:
            nan = float("nan")
            return cls(0, nan, nan, nan, nan)
        # population sd (ddof=0) so single-agent cohorts still report 0
        return cls(
            len(lam), float(lam.mean()), float(lam.std()), float(psi.mean()), float(psi.std())
        )


@dataclass(frozen=True)
class CohortStats:
    early_success: CohortSummary
    early_failure: CohortSummary
    split_after: int
    horizon: int
    final_lambda: np.ndarray = field(repr=False, compare=False)
    final_psi: np.ndarray = field(repr=False, compare=False)
    early_majority: np.ndarray = field(repr=False, compare=False)

    @property
    def cohorts(self) -> dict[str, CohortSummary]:
        return {"early_success": self.early_success, "early_failure": self.early_failure}

    @property
    def lambda_gap(self) -> float:
        """Early-success minus early-failure mean final lambda (nan if a cohort is empty)."""
        return self.early_success.mean_final_lambda - self.early_failure.mean_final_lambda

    @property
    def psi_gap(self) -> float:
        return self.early_failure.mean_final_psi - self.early_success.mean_final_psi


def cohort_divergence(
    base: ModelState,
    params: FeedbackParams,
    success_prob: float,
    n_agents: int,
    horizon: int,
    split_after: int,
    seed: SeedSpec,
    when_not_fired: str = "failure",
) -> CohortStats:
    """Simulate independent condition-driven agents and split them by early luck.

    An agent is in the early-success cohort when strictly more than half of
    its first ``split_after`` episodes were successes. Agent ``i`` uses the
    same draws as ``run_episodes(..., seed=seed, index=i)``.
    """
    policy = OutcomePolicy.condition_driven(success_prob, when_not_fired)
    if n_agents < 1:
        raise ValueError("n_agents must be positive")
    horizon = _check_horizon(horizon)
    if not 1 <= split_after <= horizon:
        raise ValueError("split_after must be in [1, horizon]")

    agents = np.arange(n_agents, dtype=np.uint64)
    lam, gamma, psi, theta, phi = (np.full(n_agents, v) for v in base.as_tuple())
    early = np.zeros(n_agents, dtype=np.int64)
    rate = growth_factor(params)
    for t in range(horizon):
        fired = facilitation(lam, gamma, psi) > theta + phi
        success = fired & (uniforms(seed, agents, t) < policy.success_prob)
        s1 = success.astype(np.int64)
        new = feedback_update(lam, gamma, psi, theta, phi, params, s1)
        if when_not_fired == "failure":
            lam, gamma, psi, theta, phi = new
        else:
            lam, gamma, psi, theta, phi = (np.where(fired, a, b) for a, b in zip(new, (lam, gamma, psi, theta, phi)))
            if when_not_fired == "suppress":
                psi = np.where(fired, psi, psi * rate)
        check_finite_arrays(lam=lam, gamma=gamma, psi=psi, theta=theta, phi=phi)
        if t < split_after:
            early += s1
    majority = 2 * early > split_after
    return CohortStats(
        early_success=CohortSummary.of(lam[majority], psi[majority]),
        early_failure=CohortSummary.of(lam[~majority], psi[~majority]),
        split_after=split_after,
        horizon=horizon,
        final_lambda=lam,
        final_psi=psi,
        early_majority=majority,
    )


def validate_trajectory(trajectory: Trajectory) -> None:
    """Raise if the chaining or recorded reports are inconsistent."""
    prev = trajectory.initial
    for s in trajectory.steps:
        if s.state_before != prev:
            raise ModelError(f"step {s.t} does not chain from the previous state")
        if s.report != evaluate_transition(s.state_before):
            raise ModelError(f"step {s.t} report is stale")
        if s.kind == "feedback":
            expected = apply_feedback(s.state_before, trajectory.params, s.outcome)
        elif s.kind == "suppress":
            expected = _suppress(s.state_before, trajectory.params)
        else:
            expected = s.state_before
        if s.state_after != expected:
            raise ModelError(f"step {s.t} state_after does not follow from its update")
        prev = s.state_after
