"""Flat ``section.key = value`` run configuration.

Every key has a documented default; the resolved values are echoed in full
into each run summary, and a summary's ``config`` block parses back into
the same run.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Any, Callable

from . import setups
from .episodes import ConfigurationError, OutcomePolicy, ZoneConfig, periodic_script, NON_FIRED_MODES
from .model import FeedbackParams, ModelError, ModelState, Outcome
from .rng import MASK64, SeedSpec
from .sensitivity import ParamGrid
from .stochastic import NoiseSpec

EXPERIMENTS = ("exp1", "exp2", "exp3", "exp4", "sweep-grid", "fit", "predict")


class ConfigParseError(ConfigurationError):
    def __init__(self, message: str, line: int | None = None):
        super().__init__(f"line {line}: {message}" if line is not None else message)
        self.line = line


class ConfigValidationError(ConfigurationError):
    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


def _state_default(field: str) -> Callable[[str], float]:
    def default(experiment: str) -> float:
        state = {
            "exp1": setups.EXP1_STATE,
            "fit": setups.EXP1_STATE,
            "sweep-grid": setups.EXP1_STATE,
            "predict": setups.EXP1_STATE,
            "exp4": setups.EXP4_STATE,
        }.get(experiment, setups.EXP2_STATE)
        return getattr(state, field)

    return default


def _horizon_default(experiment: str) -> int:
    return setups.EXP2_HORIZON if experiment == "exp2" else setups.EXP3_HORIZON


_P = setups.DEFAULT_FEEDBACK
_N = setups.DEFAULT_NOISE

# key -> (kind, default); a callable default is resolved per experiment.
SCHEMA: dict[str, tuple[str, Any]] = {
    "run.experiment": ("experiment", None),
    "run.seed": ("u64", 0),
    "run.stream": ("u64", 0),
    "run.horizon": ("nonneg_int", _horizon_default),
    "run.n_trials": ("pos_int", setups.EXP1_TRIALS),
    "run.output_dir": ("str", "asir-out"),
    "state.lambda": ("float", _state_default("lam")),
    "state.gamma": ("float", _state_default("gamma")),
    "state.psi": ("float", _state_default("psi")),
    "state.theta": ("float", _state_default("theta")),
    "state.phi": ("float", _state_default("phi")),
    "feedback.alpha": ("float", _P.alpha),
    "feedback.beta": ("float", _P.beta),
    "feedback.delta": ("float", _P.delta),
    "feedback.kappa": ("float", _P.kappa),
    "feedback.theta_adj": ("float", _P.theta_adj),
    "feedback.phi_adj": ("float", _P.phi_adj),
    "noise.sigma_lambda": ("float", _N.sigma_lambda),
    "noise.sigma_gamma": ("float", _N.sigma_gamma),
    "noise.sigma_psi": ("float", _N.sigma_psi),
    "noise.sigma_theta": ("float", _N.sigma_theta),
    "noise.sigma_phi": ("float", _N.sigma_phi),
    "noise.clamp_nonnegative": ("bool", _N.clamp_nonnegative),
    "sweep.gamma_from": ("float", setups.EXP1_GAMMA_RANGE[0]),
    "sweep.gamma_to": ("float", setups.EXP1_GAMMA_RANGE[1]),
    "sweep.steps": ("pos_int", setups.EXP1_STEPS),
    # Empty means the default 12/15-style path for the run's horizon.
    "script.success_path": ("outcomes", None),
    "script.failure_path": ("outcomes", None),
    "policy.when_not_fired": ("not_fired", "failure"),
    "cohort.lambda": ("float", setups.COHORT_STATE.lam),
    "cohort.gamma": ("float", setups.COHORT_STATE.gamma),
    "cohort.psi": ("float", setups.COHORT_STATE.psi),
    "cohort.theta": ("float", setups.COHORT_STATE.theta),
    "cohort.phi": ("float", setups.COHORT_STATE.phi),
    "cohort.success_prob": ("float", setups.COHORT_SUCCESS_PROB),
    "cohort.n_agents": ("pos_int", setups.COHORT_AGENTS),
    "cohort.split_after": ("pos_int", setups.COHORT_SPLIT_AFTER),
    # Zone thresholds default to multiples of the initial state, resolved at parse time.
    "zones.healthy_lambda_min": ("float", None),
    "zones.healthy_psi_max": ("float", None),
    "zones.trauma_lambda_max": ("float", None),
    "zones.trauma_psi_min": ("float", None),
    "grid.alphas": ("floats", list(setups.GRID_ALPHAS)),
    "grid.betas": ("floats", list(setups.GRID_BETAS)),
    "grid.deltas": ("floats", list(setups.GRID_DELTAS)),
    "grid.kappa": ("float", setups.GRID_KAPPA),
    "grid.shared_sweep_seed": ("bool", False),
    "fit.band_low": ("float", 0.1),
    "fit.band_high": ("float", 0.9),
    "fit.input": ("str", ""),
}


def _coerce(key: str, kind: str, raw: Any) -> Any:
    """Turn a config-file string or a JSON value into the key's canonical type."""
    text = raw.strip() if isinstance(raw, str) else None
    try:
        if kind == "float":
            if isinstance(raw, bool):
                raise ValueError
            v = float(text if text is not None else raw)
            if not math.isfinite(v):
                raise ConfigValidationError(key, f"must be finite, got {raw!r}")
            return v
        if kind in ("u64", "pos_int", "nonneg_int"):
            if isinstance(raw, bool) or isinstance(raw, float):
                raise ValueError
            v = int(text if text is not None else raw)
            lo = 1 if kind == "pos_int" else 0
            hi = MASK64 if kind == "u64" else None
            if v < lo or (hi is not None and v > hi):
                bound = f"[{lo}, {hi}]" if hi is not None else f">= {lo}"
                raise ConfigValidationError(key, f"must be an integer {bound}, got {v}")
            return v
        if kind == "bool":
            if isinstance(raw, bool):
                return raw
            if text is not None and text.lower() in ("true", "false"):
                return text.lower() == "true"
            raise ValueError
        if kind == "str":
            if not isinstance(raw, str):
                raise ValueError
            return text
        if kind == "experiment":
            if raw not in EXPERIMENTS:
                raise ConfigValidationError(key, f"must be one of {', '.join(EXPERIMENTS)}")
            return text
        if kind == "not_fired":
            if raw not in NON_FIRED_MODES:
                raise ConfigValidationError(key, f"must be one of {', '.join(NON_FIRED_MODES)}")
            return text
        if kind == "floats":
            items = [s for s in text.split(",")] if text is not None else list(raw)
            return [_coerce(key, "float", s) for s in items if not (isinstance(s, str) and not s.strip())]
        if kind == "outcomes":
            if raw is None:
                return None
            if text is not None:
                items = [s.strip() for s in text.split(",")] if "," in text else list(text)
            else:
                items = list(raw)
            out = []
            for s in items:
                if s in (0, 1, "0", "1") and not isinstance(s, bool):
                    out.append(int(s))
                else:
                    raise ConfigValidationError(key, f"outcomes must be 0 or 1, got {s!r}")
            return out
    except ConfigValidationError:
        raise
    except (ValueError, TypeError):
        raise ConfigValidationError(key, f"cannot read {raw!r} as {kind}") from None
    raise AssertionError(kind)


def parse_text(text: str) -> dict[str, str]:
    """Split a config document into raw ``key -> value`` strings."""
    values: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigParseError(f"expected 'key = value', got {line.strip()!r}", lineno)
        key, value = (s.strip() for s in stripped.split("=", 1))
        if not key:
            raise ConfigParseError("missing key", lineno)
        if key not in SCHEMA:
            raise ConfigParseError(f"unknown key {key!r}", lineno)
        if key in values:
            raise ConfigParseError(f"duplicate key {key!r}", lineno)
        values[key] = value
    return values


@dataclass(frozen=True)
class RunConfig:
    """A fully resolved and validated run configuration."""

    experiment: str
    values: dict[str, Any]
    state: ModelState
    feedback: FeedbackParams
    noise: NoiseSpec
    zones: ZoneConfig
    grid: ParamGrid
    cohort_state: ModelState
    success_script: tuple[Outcome, ...]
    failure_script: tuple[Outcome, ...]

    def __getitem__(self, key: str) -> Any:
        return self.values[key]

    @property
    def seed(self) -> SeedSpec:
        return SeedSpec(self["run.seed"], self["run.stream"])

    @property
    def horizon(self) -> int:
        return self["run.horizon"]

    def effective(self) -> dict[str, Any]:
        """Every resolved value, JSON-ready, in schema order."""
        return {k: self.values[k] for k in SCHEMA}

    def with_overrides(self, **overrides: Any) -> RunConfig:
        values = dict(self.values)
        values.update(overrides)
        return resolve(values, self.experiment)


def _build(key_prefix: str, cls, mapping: dict[str, str], values: dict[str, Any]):
    kwargs = {attr: values[key] for attr, key in mapping.items()}
    try:
        return cls(**kwargs)
    except ModelError as exc:
        field = {attr: key for attr, key in mapping.items()}.get(exc.field, key_prefix)
        raise ConfigValidationError(field, str(exc)) from None


_STATE_KEYS = {"lam": "lambda", "gamma": "gamma", "psi": "psi", "theta": "theta", "phi": "phi"}


def resolve(raw: dict[str, Any], experiment: str) -> RunConfig:
    """Apply defaults, coerce types, and validate every value before any run starts."""
    if experiment not in EXPERIMENTS:
        raise ConfigValidationError("run.experiment", f"must be one of {', '.join(EXPERIMENTS)}")
    unknown = sorted(set(raw) - set(SCHEMA))
    if unknown:
        raise ConfigValidationError(unknown[0], "unknown key")
    declared = raw.get("run.experiment")
    if declared is not None and declared != experiment:
        raise ConfigValidationError(
            "run.experiment", f"config is for {declared!r} but {experiment!r} was requested"
        )

    values: dict[str, Any] = {}
    for key, (kind, default) in SCHEMA.items():
        if key in raw and raw[key] is not None and raw[key] != "":
            values[key] = _coerce(key, kind, raw[key])
        elif callable(default):
            values[key] = default(experiment)
        else:
            values[key] = list(default) if isinstance(default, list) else default
    values["run.experiment"] = experiment

    state = _build("state", ModelState, {a: f"state.{k}" for a, k in _STATE_KEYS.items()}, values)
    cohort_state = _build("cohort", ModelState, {a: f"cohort.{k}" for a, k in _STATE_KEYS.items()}, values)
    feedback = _build(
        "feedback",
        FeedbackParams,
        {n: f"feedback.{n}" for n in ("alpha", "beta", "delta", "kappa", "theta_adj", "phi_adj")},
        values,
    )
    noise_map = {n: f"noise.{n}" for n in ("sigma_lambda", "sigma_gamma", "sigma_psi", "sigma_theta", "sigma_phi")}
    noise_map["clamp_nonnegative"] = "noise.clamp_nonnegative"
    noise = _build("noise", NoiseSpec, noise_map, values)

    if not values["sweep.gamma_from"] < values["sweep.gamma_to"]:
        raise ConfigValidationError("sweep.gamma_to", "must be greater than sweep.gamma_from")
    if values["sweep.steps"] < 2:
        raise ConfigValidationError("sweep.steps", "must be >= 2")
    if not 0.0 <= values["cohort.success_prob"] <= 1.0:
        raise ConfigValidationError("cohort.success_prob", "must be in [0,1]")
    if not values["cohort.split_after"] <= values["run.horizon"]:
        raise ConfigValidationError("cohort.split_after", "must be <= run.horizon")
    if not 0.0 < values["fit.band_low"] <= values["fit.band_high"] < 1.0:
        raise ConfigValidationError("fit.band_high", "need 0 < fit.band_low <= fit.band_high < 1")

    horizon = values["run.horizon"]
    scripts = {}
    for key, majority in (("script.success_path", Outcome.SUCCESS), ("script.failure_path", Outcome.FAILURE)):
        if values[key] is None:
            values[key] = [int(o) for o in periodic_script(horizon, majority)]
        if len(values[key]) < horizon:
            raise ConfigValidationError(
                key, f"has {len(values[key])} outcomes but run.horizon is {horizon}"
            )
        scripts[key] = tuple(Outcome(o) for o in values[key])
        OutcomePolicy.scripted(scripts[key])

    zone_defaults = ZoneConfig.relative_to(state)
    for name in ("healthy_lambda_min", "healthy_psi_max", "trauma_lambda_max", "trauma_psi_min"):
        if values[f"zones.{name}"] is None:
            values[f"zones.{name}"] = getattr(zone_defaults, name)
    try:
        zones = ZoneConfig(**{n: values[f"zones.{n}"] for n in ("healthy_lambda_min", "healthy_psi_max", "trauma_lambda_max", "trauma_psi_min")})
    except ConfigurationError as exc:
        raise ConfigValidationError("zones", str(exc)) from None

    try:
        grid = ParamGrid(
            tuple(values["grid.alphas"]),
            tuple(values["grid.betas"]),
            tuple(values["grid.deltas"]),
            values["grid.kappa"],
            feedback,
        )
    except ModelError as exc:
        raise ConfigValidationError(f"grid.{exc.field}s" if exc.field in ("alpha", "beta", "delta") else "grid", str(exc)) from None
    except ConfigurationError as exc:
        raise ConfigValidationError("grid", str(exc)) from None

    return RunConfig(
        experiment=experiment,
        values=values,
        state=state,
        feedback=feedback,
        noise=noise,
        zones=zones,
        grid=grid,
        cohort_state=cohort_state,
        success_script=scripts["script.success_path"],
        failure_script=scripts["script.failure_path"],
    )


def parse_config(text: str, experiment: str) -> RunConfig:
    """Parse a config document, or a run summary's JSON, into a validated RunConfig."""
    if text.lstrip().startswith("{"):
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigParseError(exc.msg, exc.lineno) from None
        raw = doc.get("config", doc) if isinstance(doc, dict) else None
        if not isinstance(raw, dict):
            raise ConfigParseError("JSON config must be an object")
        return resolve(raw, experiment)
    return resolve(parse_text(text), experiment)
