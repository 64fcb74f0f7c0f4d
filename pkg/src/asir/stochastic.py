"""Gaussian perturbation, Monte Carlo transition probability, and gamma sweeps."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, fields
from statistics import NormalDist

import numpy as np

from .model import ModelError, ModelState, facilitation
from .rng import SeedSpec, normals

# One counter slot per state variable, in field order.
_SLOTS = {"lam": 0, "gamma": 1, "psi": 2, "theta": 3, "phi": 4}
_CHUNK = 1 << 16


@dataclass(frozen=True)
class NoiseSpec:
    sigma_lambda: float = 0.5
    sigma_gamma: float = 0.2
    sigma_psi: float = 0.3
    sigma_theta: float = 0.4
    sigma_phi: float = 0.4
    clamp_nonnegative: bool = True

    def __post_init__(self) -> None:
        for f in fields(self):
            if f.name == "clamp_nonnegative":
                continue
            v = float(getattr(self, f.name))
            if not math.isfinite(v) or v < 0:
                raise ModelError(f"{f.name} must be finite and >= 0, got {v!r}", f.name)
            object.__setattr__(self, f.name, v)
        object.__setattr__(self, "clamp_nonnegative", bool(self.clamp_nonnegative))

    def sigma(self, name: str) -> float:
        return getattr(self, "sigma_lambda" if name == "lam" else f"sigma_{name}")


@dataclass(frozen=True)
class ProbabilityEstimate:
    n_trials: int
    n_fired: int
    p_hat: float
    ci_low: float
    ci_high: float

    @property
    def half_width(self) -> float:
        return (self.ci_high - self.ci_low) / 2


@dataclass(frozen=True)
class SweepResult:
    gamma_grid: tuple[float, ...]
    estimates: tuple[ProbabilityEstimate, ...]
    base_state: ModelState
    noise: NoiseSpec
    seed: SeedSpec

    @property
    def p_hat(self) -> np.ndarray:
        return np.array([e.p_hat for e in self.estimates])

    @property
    def n_trials(self) -> np.ndarray:
        return np.array([e.n_trials for e in self.estimates])


def wilson_interval(n_fired: int, n_trials: int, confidence: float = 0.95) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if n_trials <= 0:
        raise ValueError("n_trials must be positive")
    z = NormalDist().inv_cdf(0.5 + confidence / 2)
    p = n_fired / n_trials
    z2n = z * z / n_trials
    centre = (p + z2n / 2) / (1 + z2n)
    half = z * math.sqrt(p * (1 - p) / n_trials + z2n / (4 * n_trials)) / (1 + z2n)
    return max(0.0, min(centre - half, p)), min(1.0, max(centre + half, p))


def make_estimate(n_fired: int, n_trials: int) -> ProbabilityEstimate:
    lo, hi = wilson_interval(n_fired, n_trials)
    return ProbabilityEstimate(n_trials, n_fired, n_fired / n_trials, lo, hi)


def perturb_arrays(state: ModelState, noise: NoiseSpec, seed: SeedSpec, index: np.ndarray) -> dict[str, np.ndarray]:
    """Perturbed copies of ``state`` for every trial index, keyed by field name."""
    out = {}
    for name, slot in _SLOTS.items():
        value = getattr(state, name)
        sigma = noise.sigma(name)
        if sigma == 0:
            arr = np.full(len(index), value)
        else:
            arr = value + sigma * normals(seed, index, slot)
        if noise.clamp_nonnegative and name != "gamma":
            arr = np.maximum(arr, 0.0)
        out[name] = arr
    return out


def perturb(state: ModelState, noise: NoiseSpec, seed: SeedSpec, trial_index: int) -> ModelState:
    draws = perturb_arrays(state, noise, seed, np.array([trial_index]))
    if noise.clamp_nonnegative:
        return ModelState(**{k: float(v[0]) for k, v in draws.items()})
    # Unclamped draws may go negative; skip the domain check on purpose.
    out = object.__new__(ModelState)
    for k, v in draws.items():
        object.__setattr__(out, k, float(v[0]))
    return out


def _count_fired(state: ModelState, noise: NoiseSpec, seed: SeedSpec, start: int, stop: int) -> int:
    d = perturb_arrays(state, noise, seed, np.arange(start, stop, dtype=np.uint64))
    fac = facilitation(d["lam"], d["gamma"], d["psi"])
    return int(np.count_nonzero(fac > d["theta"] + d["phi"]))


def estimate_transition_probability(
    state: ModelState,
    noise: NoiseSpec,
    n_trials: int,
    seed: SeedSpec,
    threads: int = 1,
) -> ProbabilityEstimate:
    """Fraction of perturbed copies of ``state`` for which the transition fires.

    Trial ``i`` always sees the same draws, so the count does not depend on
    ``threads`` or chunking.
    """
    if isinstance(n_trials, bool) or int(n_trials) != n_trials or n_trials < 1:
        raise ValueError(f"n_trials must be a positive integer, got {n_trials!r}")
    n_trials = int(n_trials)
    bounds = [(a, min(a + _CHUNK, n_trials)) for a in range(0, n_trials, _CHUNK)]
    if threads > 1 and len(bounds) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            counts = list(pool.map(lambda b: _count_fired(state, noise, seed, *b), bounds))
    else:
        counts = [_count_fired(state, noise, seed, a, b) for a, b in bounds]
    return make_estimate(sum(counts), n_trials)


def gamma_grid(gamma_from: float, gamma_to: float, steps: int) -> np.ndarray:
    if not gamma_from < gamma_to:
        raise ValueError("gamma_from must be < gamma_to")
    if steps < 2:
        raise ValueError("steps must be >= 2")
    return np.linspace(gamma_from, gamma_to, int(steps))


def gamma_sweep(
    base: ModelState,
    gamma_from: float,
    gamma_to: float,
    steps: int,
    noise: NoiseSpec,
    n_trials: int,
    seed: SeedSpec,
    threads: int = 1,
) -> SweepResult:
    """Transition probability at evenly spaced gamma values, endpoints included.

    Each grid point replaces the base gamma and perturbs around it on its own
    derived stream.
    """
    grid = gamma_grid(gamma_from, gamma_to, steps)

    def point(i: int) -> ProbabilityEstimate:
        return estimate_transition_probability(
            base.replace(gamma=float(grid[i])), noise, n_trials, seed.child(i)
        )

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            estimates = list(pool.map(point, range(len(grid))))
    else:
        estimates = [point(i) for i in range(len(grid))]
    return SweepResult(tuple(float(g) for g in grid), tuple(estimates), base, noise, seed)
