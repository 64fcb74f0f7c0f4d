import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from asir.calibrate import LogisticFit, estimate_gamma_band, fit_logistic, fit_logistic_points, logistic
from asir.model import ModelState
from asir.rng import SeedSpec
from asir.stochastic import NoiseSpec, gamma_sweep
from oracles import synthetic_logistic_data

EXP1 = ModelState(3, 0, 1, 5, 4)


def test_synthetic_recovery_known_curve():
    g, p = synthetic_logistic_data(2.0, 3.0, 2000, seed=0)
    fit = fit_logistic_points(g, p, np.full(len(g), 2000))
    assert fit.converged
    assert 1.9 <= fit.midpoint <= 2.1
    assert 2.4 <= fit.steepness <= 3.6


def test_synthetic_suite_recovers_midpoints():
    rng = np.random.default_rng(123)
    hits = 0
    for i in range(20):
        g0, k = rng.uniform(-0.5, 3.5), rng.uniform(1.0, 8.0)
        g, p = synthetic_logistic_data(g0, k, 2000, seed=i)
        fit = fit_logistic_points(g, p, np.full(len(g), 2000))
        hits += fit.converged and abs(fit.midpoint - g0) <= 0.1
    assert hits >= 19


def test_noise_free_recovery_is_tight():
    g = np.linspace(-1, 5, 61)
    fit = fit_logistic_points(g, logistic(g, 1.3, 4.2))
    assert fit.midpoint == pytest.approx(1.3, abs=1e-6)
    assert fit.steepness == pytest.approx(4.2, abs=1e-5)
    assert fit.residual < 1e-12


def test_degenerate_sweeps_do_not_converge():
    g = np.linspace(-1, 5, 61)
    for p in (np.zeros(61), np.ones(61), np.full(61, 0.5)):
        fit = fit_logistic_points(g, p)
        assert not fit.converged and fit.diagnostic
    assert not fit_logistic_points(g[:4], [0, 0.1, 0.9, 1]).converged


def test_step_function_hits_steepness_bound():
    g = np.linspace(-1, 5, 61)
    fit = fit_logistic_points(g, (g > 5 / 3).astype(float))
    assert not fit.converged


def test_experiment_one_midpoint_and_determinism():
    sweep = gamma_sweep(EXP1, -1, 5, 61, NoiseSpec(), 2000, SeedSpec(0))
    fit = fit_logistic(sweep)
    assert fit.converged
    assert abs(fit.midpoint - 5 / 3) <= 0.1
    assert fit_logistic(sweep) == fit


def test_experiment_one_band_at_high_precision():
    # At n=2000 the lower 10% edge sits within sampling noise of 1.0, so the
    # containment is checked on a high-precision sweep.
    sweep = gamma_sweep(EXP1, -1, 5, 61, NoiseSpec(), 200_000, SeedSpec(0), threads=4)
    lo, hi = estimate_gamma_band(fit_logistic(sweep), 0.1, 0.9)
    assert 1.0 <= lo < hi <= 2.5


def test_band_midpoint_identity():
    fit = LogisticFit(5 / 3, 7.0, 0.0, True)
    assert estimate_gamma_band(fit, 0.5, 0.5) == (5 / 3, 5 / 3)


def test_band_quartiles():
    lo, hi = estimate_gamma_band(LogisticFit(2.0, 3.0, 0.0, True), 0.25, 0.75)
    assert lo == pytest.approx(2 - math.log(3) / 3)
    assert hi == pytest.approx(2 + math.log(3) / 3)
    assert (round(lo, 3), round(hi, 3)) == (1.634, 2.366)


@given(st.floats(-3, 6), st.floats(0.1, 50), st.floats(0.001, 0.999))
def test_band_inverts_curve(mid, k, p):
    fit = LogisticFit(mid, k, 0.0, True)
    lo, hi = estimate_gamma_band(fit, p, p)
    assert lo == hi
    assert float(logistic(lo, mid, k)) == pytest.approx(p, rel=1e-9, abs=1e-12)


@pytest.mark.parametrize("band", [(0.9, 0.1), (0.0, 0.5), (0.5, 1.0)])
def test_band_rejects_bad_levels(band):
    with pytest.raises(ValueError):
        estimate_gamma_band(LogisticFit(0, 1, 0, True), *band)


def test_band_rejects_unconverged_fit():
    with pytest.raises(ValueError):
        estimate_gamma_band(LogisticFit(math.nan, math.nan, math.nan, False, "no"), 0.1, 0.9)
