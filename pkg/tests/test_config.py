import json

import pytest

from asir import setups
from asir.config import (
    SCHEMA,
    ConfigParseError,
    ConfigValidationError,
    parse_config,
    parse_text,
    resolve,
)
from asir.model import Outcome


def test_minimal_exp1_fills_defaults():
    cfg = parse_config(
        "state.lambda = 3\nstate.gamma = 0\nstate.psi = 1\nstate.theta = 5\nstate.phi = 4\n"
        "run.n_trials = 2000\nrun.seed = 7\n",
        "exp1",
    )
    assert cfg.state == setups.EXP1_STATE
    assert (cfg["sweep.gamma_from"], cfg["sweep.gamma_to"], cfg["sweep.steps"]) == (-1.0, 5.0, 61)
    assert cfg.noise == setups.DEFAULT_NOISE
    assert cfg.seed.master_seed == 7


def test_every_schema_key_is_echoed():
    cfg = resolve({}, "exp3")
    eff = cfg.effective()
    assert list(eff) == list(SCHEMA)
    assert all(v is not None for v in eff.values())


def test_beta_out_of_range_names_key_and_interval():
    with pytest.raises(ConfigValidationError) as exc:
        parse_config("feedback.beta = 1.2\n", "exp2")
    assert exc.value.key == "feedback.beta"
    assert "(0,1)" in str(exc.value).replace(" ", "")


def test_short_script_rejected():
    with pytest.raises(ConfigValidationError) as exc:
        parse_config("run.horizon = 6\nscript.success_path = 1,1,0\n", "exp3")
    assert exc.value.key == "script.success_path"


def test_scripts_accept_compact_form():
    cfg = parse_config("run.horizon = 4\nscript.success_path = 1101\n", "exp3")
    assert cfg.success_script == (Outcome.SUCCESS, Outcome.SUCCESS, Outcome.FAILURE, Outcome.SUCCESS)


@pytest.mark.parametrize(
    "text,line",
    [
        ("run.seed = 1\nnonsense\n", 2),
        ("# comment\n\nrun.bogus = 3\n", 3),
        ("run.seed = 1\nrun.seed = 2\n", 2),
        (" = 4\n", 1),
    ],
)
def test_parse_errors_report_line(text, line):
    with pytest.raises(ConfigParseError) as exc:
        parse_text(text)
    assert exc.value.line == line
    assert f"line {line}" in str(exc.value)


@pytest.mark.parametrize(
    "text,key",
    [
        ("run.seed = -1", "run.seed"),
        ("run.n_trials = 0", "run.n_trials"),
        ("state.psi = -2", "state.psi"),
        ("state.gamma = nan", "state.gamma"),
        ("noise.sigma_psi = -0.3", "noise.sigma_psi"),
        ("noise.clamp_nonnegative = maybe", "noise.clamp_nonnegative"),
        ("sweep.steps = 1", "sweep.steps"),
        ("sweep.gamma_from = 5\nsweep.gamma_to = 1", "sweep.gamma_to"),
        ("policy.when_not_fired = skip", "policy.when_not_fired"),
        ("cohort.success_prob = 1.5", "cohort.success_prob"),
        ("grid.betas = 0.5, 1.5", "grid.betas"),
        ("script.failure_path = 0,2,0", "script.failure_path"),
    ],
)
def test_validation_errors_name_key(text, key):
    with pytest.raises(ConfigValidationError) as exc:
        parse_config(text + "\n", "exp3")
    assert exc.value.key == key


def test_inline_comments_and_whitespace():
    cfg = parse_config("  feedback.alpha=0.5   # stronger learning\n", "exp3")
    assert cfg.feedback.alpha == 0.5


def test_declared_experiment_must_match():
    with pytest.raises(ConfigValidationError):
        parse_config("run.experiment = exp2\n", "exp1")


def test_json_summary_round_trip():
    cfg = parse_config("feedback.delta = 1.5\nrun.seed = 99\nrun.horizon = 9\n", "exp3")
    doc = json.dumps({"config": cfg.effective(), "results": {}})
    again = parse_config(doc, "exp3")
    assert again.effective() == cfg.effective()
    assert again == cfg


def test_json_errors():
    with pytest.raises(ConfigParseError):
        parse_config("{not json", "exp1")
    with pytest.raises(ConfigValidationError):
        parse_config(json.dumps({"config": {"run.whatever": 1}}), "exp1")


def test_overrides_revalidate():
    cfg = resolve({}, "exp1")
    assert cfg.with_overrides(**{"run.seed": 5}).seed.master_seed == 5
    with pytest.raises(ConfigValidationError):
        cfg.with_overrides(**{"run.seed": -5})


def test_zone_defaults_follow_state():
    cfg = parse_config("state.lambda = 4\nstate.psi = 6\n", "exp4")
    z = cfg.zones
    assert (z.healthy_lambda_min, z.healthy_psi_max, z.trauma_lambda_max, z.trauma_psi_min) == (4, 3, 4, 12)
