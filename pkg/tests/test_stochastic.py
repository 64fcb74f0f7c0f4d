import math

import numpy as np
import pytest

from asir.model import ModelState, critical_gamma
from asir.rng import SeedSpec, normals, uniforms
from asir.stochastic import (
    NoiseSpec,
    estimate_transition_probability,
    gamma_sweep,
    perturb,
    perturb_arrays,
    wilson_interval,
)
from oracles import brute_force_probability, margin_moments, rectified_gaussian, wilson

EXP1 = ModelState(3, 0, 1, 5, 4)
DEFAULT_NOISE = NoiseSpec()
ZERO = NoiseSpec(0, 0, 0, 0, 0)


def _noise_tuple(n: NoiseSpec):
    return (n.sigma_lambda, n.sigma_gamma, n.sigma_psi, n.sigma_theta, n.sigma_phi, n.clamp_nonnegative)


# --- seeding contract -------------------------------------------------------


def test_uniforms_in_open_interval():
    u = uniforms(SeedSpec(3), np.arange(200_000), 0)
    assert u.min() > 0 and u.max() < 1
    assert abs(u.mean() - 0.5) < 0.005


def test_draws_independent_of_chunking():
    s = SeedSpec(11, 2)
    whole = normals(s, np.arange(1000), 4)
    parts = np.concatenate([normals(s, np.arange(a, a + 100), 4) for a in range(0, 1000, 100)])
    shuffled = np.random.default_rng(0).permutation(1000)
    assert np.array_equal(whole, parts)
    assert np.array_equal(whole[shuffled], normals(s, shuffled, 4))


def test_streams_differ():
    a = normals(SeedSpec(1, 0), np.arange(5000), 0)
    b = normals(SeedSpec(1, 1), np.arange(5000), 0)
    c = normals(SeedSpec(1, 0), np.arange(5000), 1)
    assert abs(np.corrcoef(a, b)[0, 1]) < 0.05
    assert abs(np.corrcoef(a, c)[0, 1]) < 0.05


def test_seed_validation():
    with pytest.raises(ValueError):
        SeedSpec(-1)
    with pytest.raises(ValueError):
        SeedSpec(2**64)
    with pytest.raises(TypeError):
        SeedSpec(1.5)


# --- perturb ------------------------------------------------------------------


def test_zero_noise_is_identity():
    assert perturb(EXP1, ZERO, SeedSpec(5), 17) == EXP1


def test_perturb_deterministic():
    a = perturb(EXP1, DEFAULT_NOISE, SeedSpec(5), 17)
    b = perturb(EXP1, DEFAULT_NOISE, SeedSpec(5), 17)
    assert a == b
    assert a != perturb(EXP1, DEFAULT_NOISE, SeedSpec(5), 18)


def test_gamma_never_clamped():
    d = perturb_arrays(ModelState(0, -1, 0, 0, 0), NoiseSpec(1, 1, 1, 1, 1), SeedSpec(0), np.arange(1000))
    assert d["gamma"].min() < -2
    for k in ("lam", "psi", "theta", "phi"):
        assert d[k].min() == 0.0


def test_rectified_pressure_matches_analytic():
    n = 100_000
    noise = NoiseSpec(0, 0, 0.3, 0, 0, clamp_nonnegative=True)
    d = perturb_arrays(ModelState(1, 0, 1, 1, 1), noise, SeedSpec(42), np.arange(n))
    mean, frac = rectified_gaussian(1.0, 0.3)
    assert abs(d["psi"].mean() - mean) <= 0.01 * mean
    clamped = int(np.count_nonzero(d["psi"] == 0))
    lo, hi = wilson(clamped, n, 2.576)
    assert lo <= frac <= hi
    assert frac == pytest.approx(4.3e-4, rel=0.01)


def test_unclamped_perturb_can_go_negative():
    noise = NoiseSpec(5, 0, 0, 0, 0, clamp_nonnegative=False)
    vals = [perturb(ModelState(0.1, 0, 1, 1, 1), noise, SeedSpec(1), i).lam for i in range(50)]
    assert min(vals) < 0


# --- estimate_transition_probability ----------------------------------------


def test_wilson_matches_oracle():
    for k, n in [(0, 10), (3, 10), (10, 10), (1000, 2000), (1, 100000)]:
        lo, hi = wilson_interval(k, n)
        olo, ohi = wilson(k, n, 1.959963984540054)
        assert lo == pytest.approx(max(olo, 0), abs=1e-12)
        assert hi == pytest.approx(min(ohi, 1), abs=1e-12)
        assert lo <= k / n <= hi


def test_low_gamma_near_zero():
    mean, sd = margin_moments(EXP1.replace(gamma=-1).as_tuple(), _noise_tuple(DEFAULT_NOISE))
    assert (mean, round(sd, 2)) == (-8, 0.88)
    est = estimate_transition_probability(EXP1.replace(gamma=-1), DEFAULT_NOISE, 2000, SeedSpec(0))
    assert est.p_hat < 0.01


def test_crossing_near_half():
    g = critical_gamma(EXP1)
    est = estimate_transition_probability(EXP1.replace(gamma=g), DEFAULT_NOISE, 20_000, SeedSpec(0))
    assert 0.46 <= est.p_hat <= 0.54
    oracle = brute_force_probability(EXP1.replace(gamma=g).as_tuple(), _noise_tuple(DEFAULT_NOISE), 20_000, 7)
    assert 0.46 <= oracle <= 0.54


def test_high_gamma_almost_always():
    est = estimate_transition_probability(EXP1.replace(gamma=3.5), DEFAULT_NOISE, 2000, SeedSpec(0))
    assert est.p_hat > 0.95


def test_zero_noise_indicator():
    est = estimate_transition_probability(ModelState(3, 2, 1, 5, 4), ZERO, 500, SeedSpec(0))
    assert est.p_hat == 1.0 and est.n_fired == 500


def test_thread_count_does_not_change_estimate():
    s = EXP1.replace(gamma=1.6)
    base = estimate_transition_probability(s, DEFAULT_NOISE, 300_000, SeedSpec(9))
    for threads in (2, 3, 8):
        assert estimate_transition_probability(s, DEFAULT_NOISE, 300_000, SeedSpec(9), threads=threads) == base


@pytest.mark.parametrize("n", [0, -3, 2.5])
def test_bad_trial_count(n):
    with pytest.raises(ValueError):
        estimate_transition_probability(EXP1, DEFAULT_NOISE, n, SeedSpec(0))


def test_estimate_converges_on_oracle():
    s = EXP1.replace(gamma=1.2)
    oracle = brute_force_probability(s.as_tuple(), _noise_tuple(DEFAULT_NOISE), 200_000, 3)
    errs = [
        abs(estimate_transition_probability(s, DEFAULT_NOISE, n, SeedSpec(1)).p_hat - oracle)
        for n in (1_000, 100_000)
    ]
    assert errs[1] < max(errs[0], 0.01)


# --- gamma_sweep -------------------------------------------------------------


def test_sweep_two_steps_hits_endpoints():
    r = gamma_sweep(EXP1, -1, 5, 2, DEFAULT_NOISE, 100, SeedSpec(0))
    assert r.gamma_grid == (-1.0, 5.0)
    assert len(r.estimates) == 2


def test_zero_noise_sweep_is_step_at_critical_gamma():
    r = gamma_sweep(EXP1, -1, 5, 61, ZERO, 10, SeedSpec(0))
    g = np.array(r.gamma_grid)
    assert np.array_equal(r.p_hat, (g > critical_gamma(EXP1)).astype(float))
    jump = int(np.argmax(r.p_hat))
    assert g[jump - 1] < 5 / 3 < g[jump]


def test_sweep_is_sigmoid_and_monotone_within_ci():
    r = gamma_sweep(EXP1, -1, 5, 61, DEFAULT_NOISE, 2000, SeedSpec(4))
    p = r.p_hat
    hw = np.array([e.half_width for e in r.estimates])
    assert np.all(np.diff(p) >= -(hw[:-1] + hw[1:]))
    assert p[0] < 0.01 and p[-1] > 0.99
    assert np.all(np.diff(r.gamma_grid) > 0)


def test_sweep_thread_invariant():
    a = gamma_sweep(EXP1, -1, 5, 13, DEFAULT_NOISE, 2000, SeedSpec(4))
    b = gamma_sweep(EXP1, -1, 5, 13, DEFAULT_NOISE, 2000, SeedSpec(4), threads=4)
    assert a == b


@pytest.mark.parametrize("args", [(5, -1, 10), (-1, 5, 1)])
def test_sweep_rejects_bad_grid(args):
    with pytest.raises(ValueError):
        gamma_sweep(EXP1, *args, DEFAULT_NOISE, 10, SeedSpec(0))


def test_noise_validation():
    with pytest.raises(ValueError):
        NoiseSpec(sigma_psi=-0.1)
    with pytest.raises(ValueError):
        NoiseSpec(sigma_gamma=math.inf)
