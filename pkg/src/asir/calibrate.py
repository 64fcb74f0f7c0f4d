"""Logistic fits to sweep data and the steep gamma band they imply."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import least_squares
from scipy.special import expit

from .stochastic import SweepResult

STEEPNESS_BOUNDS = (0.1, 50.0)
_COARSE_MIDPOINTS = 121
_COARSE_STEEPNESS = 100


@dataclass(frozen=True)
class LogisticFit:
    midpoint: float
    steepness: float
    residual: float
    converged: bool
    diagnostic: str = ""


def logistic(gamma, midpoint: float, steepness: float):
    return expit(steepness * (np.asarray(gamma, dtype=float) - midpoint))


def _weighted_mse(p: np.ndarray, w: np.ndarray, fitted: np.ndarray) -> np.ndarray:
    return ((p - fitted) ** 2 * w).sum(axis=-1) / w.sum()


def fit_logistic_points(gamma, p_hat, weights=None) -> LogisticFit:
    """Fit ``1/(1+exp(-k(g-g0)))`` by weighted least squares.

    A coarse grid over ``g0`` (the data range) and ``k`` (log-spaced over
    :data:`STEEPNESS_BOUNDS`) seeds a bounded trust-region refinement.
    """
    g = np.asarray(gamma, dtype=float)
    p = np.asarray(p_hat, dtype=float)
    w = np.ones_like(g) if weights is None else np.asarray(weights, dtype=float)
    nan = float("nan")
    if len(g) < 5:
        return LogisticFit(nan, nan, nan, False, "need at least 5 points")
    if not (p.min() < 0.25 and p.max() > 0.75):
        return LogisticFit(nan, nan, nan, False, "estimates do not span [0.25, 0.75]")

    lo, hi = float(g.min()), float(g.max())
    mids = np.linspace(lo, hi, _COARSE_MIDPOINTS)
    ks = np.geomspace(*STEEPNESS_BOUNDS, _COARSE_STEEPNESS)
    M, K = np.meshgrid(mids, ks, indexing="ij")
    coarse = _weighted_mse(p, w, expit(K[..., None] * (g - M[..., None])))
    i, j = np.unravel_index(np.argmin(coarse), coarse.shape)
    x0 = np.array([mids[i], ks[j]])

    sw = np.sqrt(w)
    res = least_squares(
        lambda x: sw * (expit(x[1] * (g - x[0])) - p),
        x0,
        bounds=([lo, STEEPNESS_BOUNDS[0]], [hi, STEEPNESS_BOUNDS[1]]),
        method="trf",
        xtol=1e-12,
        ftol=1e-12,
        gtol=1e-12,
    )
    mid, k = (float(v) for v in res.x)
    resid = float(_weighted_mse(p, w, logistic(g, mid, k)))
    on_bound = k >= STEEPNESS_BOUNDS[1] * (1 - 1e-9) or k <= STEEPNESS_BOUNDS[0] * (1 + 1e-9)
    if not res.success:
        return LogisticFit(mid, k, resid, False, f"refinement failed: {res.message}")
    if on_bound:
        return LogisticFit(mid, k, resid, False, "steepness at search bound")
    return LogisticFit(mid, k, resid, True)


def fit_logistic(sweep: SweepResult) -> LogisticFit:
    """Fit a sweep's (gamma, p_hat) pairs weighted by trial counts."""
    return fit_logistic_points(sweep.gamma_grid, sweep.p_hat, sweep.n_trials)


def logit_inverse(fit: LogisticFit, p: float) -> float:
    return fit.midpoint + math.log(p / (1 - p)) / fit.steepness


def estimate_gamma_band(fit: LogisticFit, low: float = 0.1, high: float = 0.9) -> tuple[float, float]:
    """Gamma interval over which the fitted probability climbs from ``low`` to ``high``."""
    if not fit.converged:
        raise ValueError(f"fit did not converge: {fit.diagnostic}")
    if not 0.0 < low <= high < 1.0:
        raise ValueError(f"need 0 < low <= high < 1, got ({low}, {high})")
    return logit_inverse(fit, low), logit_inverse(fit, high)
