"""State, parameters, transition condition and feedback updates."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, fields, replace
from fractions import Fraction

import numpy as np

NONNEGATIVE_FIELDS = ("lam", "psi", "theta", "phi")
STATE_FIELDS = ("lam", "gamma", "psi", "theta", "phi")


class ModelError(ValueError):
    """Invalid input to a model operation; ``field`` names the offending value."""

    def __init__(self, message: str, field: str | None = None):
        super().__init__(message)
        self.field = field


class StateOverflowError(OverflowError):
    """A state update produced a non-finite value."""

    def __init__(self, field: str, value: float):
        super().__init__(f"non-finite {field} after update: {value!r}")
        self.field = field
        self.value = value


def _check_finite(name: str, value: float) -> None:
    if not math.isfinite(value):
        raise ModelError(f"{name} must be finite, got {value!r}", name)


@dataclass(frozen=True)
class ModelState:
    """The five time-varying variables at one instant.

    ``lam`` is openness (``lambda`` is a Python keyword).
    """

    lam: float
    gamma: float
    psi: float
    theta: float
    phi: float

    def __post_init__(self) -> None:
        for f in fields(self):
            v = float(getattr(self, f.name))
            object.__setattr__(self, f.name, v)
            _check_finite(f.name, v)
        for name in NONNEGATIVE_FIELDS:
            if getattr(self, name) < 0:
                raise ModelError(f"{name} must be >= 0, got {getattr(self, name)!r}", name)

    def replace(self, **changes: float) -> ModelState:
        return replace(self, **changes)

    def as_tuple(self) -> tuple[float, float, float, float, float]:
        return (self.lam, self.gamma, self.psi, self.theta, self.phi)


@dataclass(frozen=True)
class FeedbackParams:
    alpha: float = 0.3
    beta: float = 0.5
    delta: float = 1.0
    kappa: float = 0.4
    # Not given by the model's authors; small relative to theta/phi scales.
    theta_adj: float = 0.2
    phi_adj: float = 0.2

    def __post_init__(self) -> None:
        for f in fields(self):
            v = float(getattr(self, f.name))
            object.__setattr__(self, f.name, v)
            _check_finite(f.name, v)
        if not 0.0 < self.beta < 1.0:
            raise ModelError(f"beta must be in (0,1), got {self.beta!r}", "beta")
        if not self.delta > 0.0:
            raise ModelError(f"delta must be > 0, got {self.delta!r}", "delta")
        for name in ("alpha", "kappa", "theta_adj", "phi_adj"):
            if getattr(self, name) < 0:
                raise ModelError(f"{name} must be >= 0, got {getattr(self, name)!r}", name)

    def replace(self, **changes: float) -> FeedbackParams:
        return replace(self, **changes)


class Outcome(enum.IntEnum):
    FAILURE = 0
    SUCCESS = 1


@dataclass(frozen=True)
class TransitionReport:
    facilitation: float
    inhibition: float
    margin: float
    fired: bool


class Regime(str, enum.Enum):
    COMPOUNDING = "Compounding"
    BOUNDARY = "Boundary"
    DECAYING = "Decaying"


def facilitation(lam, gamma, psi):
    return lam * (1.0 + gamma) + psi


def evaluate_transition(state: ModelState) -> TransitionReport:
    """Facilitation ``lam*(1+gamma) + psi`` against inhibition ``theta + phi``.

    Fires only on strict excess; a zero margin does not fire.
    """
    for name in STATE_FIELDS:
        _check_finite(name, getattr(state, name))
    fac = facilitation(state.lam, state.gamma, state.psi)
    inh = state.theta + state.phi
    margin = fac - inh
    return TransitionReport(fac, inh, margin, fac > inh)


def feedback_update(lam, gamma, psi, theta, phi, params: FeedbackParams, s1):
    """Vectorized feedback update; ``s1`` is 0/1 (scalar or array).

    Returns the clamped ``(lam, gamma, psi, theta, phi)``. Works on floats
    and numpy arrays alike.
    """
    sign = 2 * s1 - 1
    lam2 = np.maximum(lam + params.alpha * sign, 0.0)
    psi2 = np.maximum(psi * (params.beta + (1 - s1) * params.delta), 0.0)
    gamma2 = gamma + params.kappa * (s1 - 0.5)
    theta2 = np.maximum(theta - params.theta_adj * sign, 0.0)
    phi2 = np.maximum(phi - params.phi_adj * sign, 0.0)
    return lam2, gamma2, psi2, theta2, phi2


def check_finite_arrays(**arrays) -> None:
    for name, arr in arrays.items():
        bad = ~np.isfinite(arr)
        if np.any(bad):
            raise StateOverflowError(name, float(np.asarray(arr)[bad].flat[0]))


def apply_feedback(state: ModelState, params: FeedbackParams, outcome: Outcome | int) -> ModelState:
    s1 = int(outcome)
    if s1 not in (0, 1):
        raise ModelError(f"outcome must be 0 or 1, got {outcome!r}")
    new = feedback_update(*state.as_tuple(), params, s1)
    for name, v in zip(STATE_FIELDS, new):
        if not math.isfinite(v):
            raise StateOverflowError(name, float(v))
    return ModelState(*(float(v) for v in new))


def critical_gamma(state: ModelState) -> float | None:
    """Gamma at which the margin is exactly zero, or None when ``lam == 0``."""
    if state.lam == 0:
        return None
    return (state.theta + state.phi - state.psi) / state.lam - 1.0


def growth_factor(params: FeedbackParams) -> float:
    """Multiplier applied to psi on every failure step."""
    return params.beta + params.delta


def classify_regime(params: FeedbackParams) -> Regime:
    # Exact decimal comparison: 0.3 + 0.7 must land on the boundary.
    total = Fraction(repr(params.beta)) + Fraction(repr(params.delta))
    if total > 1:
        return Regime.COMPOUNDING
    if total == 1:
        return Regime.BOUNDARY
    return Regime.DECAYING


_MAX_SETTLE_STEPS = 1_000_000


def _fires_after(state: ModelState, rate: float, steps: int) -> bool:
    psi = state.psi
    for _ in range(steps):
        psi = psi * rate
    return evaluate_transition(state.replace(psi=psi)).fired


def forced_transition_time(state: ModelState, params: FeedbackParams) -> int | None:
    """Consecutive failure steps (psi compounding alone) until the transition fires.

    Returns 0 if it fires already and None if it never will.
    """
    if evaluate_transition(state).fired:
        return 0
    rate = growth_factor(params)
    if state.psi == 0 or classify_regime(params) is not Regime.COMPOUNDING or rate <= 1.0:
        return None
    deficit = state.theta + state.phi - facilitation(state.lam, state.gamma, 0.0)
    # deficit >= psi > 0 up to rounding, since the condition does not fire yet.
    if deficit <= state.psi:
        guess = 1
    else:
        guess = math.floor((math.log(deficit) - math.log(state.psi)) / math.log(rate)) + 1
    if guess > _MAX_SETTLE_STEPS:
        return guess
    # The log estimate can be off by one against float rounding of the
    # iterated product; settle it on the same arithmetic the simulation uses.
    t = guess
    while t > 1 and _fires_after(state, rate, t - 1):
        t -= 1
    while not _fires_after(state, rate, t):
        t += 1
    return t
