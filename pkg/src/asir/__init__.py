"""Threshold model of truth disclosure with outcome feedback.

A disclosure fires when ``lam*(1+gamma) + psi > theta + phi``; each outcome
then nudges openness, relational gravity, pressure, threshold and cost.
"""

__version__ = "0.1.0"

from .model import (  # noqa: E402
    FeedbackParams,
    ModelState,
    Outcome,
    Regime,
    TransitionReport,
    apply_feedback,
    classify_regime,
    critical_gamma,
    evaluate_transition,
    forced_transition_time,
)
from .rng import SeedSpec  # noqa: E402
from .stochastic import NoiseSpec, estimate_transition_probability, gamma_sweep, perturb  # noqa: E402

__all__ = [
    "FeedbackParams",
    "ModelState",
    "NoiseSpec",
    "Outcome",
    "Regime",
    "SeedSpec",
    "TransitionReport",
    "apply_feedback",
    "classify_regime",
    "critical_gamma",
    "estimate_transition_probability",
    "evaluate_transition",
    "forced_transition_time",
    "gamma_sweep",
    "perturb",
]
