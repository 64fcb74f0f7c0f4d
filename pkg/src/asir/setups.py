"""Reference setups for the four experiments and the sensitivity grid.

Uncommented values are the standard reference setups. Anything filled in
locally carries a comment saying why.
"""

from .model import FeedbackParams, ModelState
from .stochastic import NoiseSpec

# Relational-gravity sweep; gamma is replaced by each grid value.
EXP1_STATE = ModelState(lam=3.0, gamma=0.0, psi=1.0, theta=5.0, phi=4.0)
EXP1_GAMMA_RANGE = (-1.0, 5.0)
EXP1_STEPS = 61
EXP1_TRIALS = 2000

# Pressure accumulation; also the default start for the 15-episode paths.
EXP2_STATE = ModelState(lam=2.0, gamma=1.0, psi=2.0, theta=5.0, phi=5.0)
EXP2_HORIZON = 11

EXP3_HORIZON = 15

# Only lambda and psi are given for the phase portrait; the rest follow EXP2_STATE.
EXP4_STATE = ModelState(lam=2.0, gamma=1.0, psi=4.0, theta=5.0, phi=5.0)

# Cohort split. EXP2_STATE cannot fire within three episodes, so no agent
# could ever land in the early-success cohort; start where the transition
# fires instead (the gamma-sweep state at gamma = 2).
COHORT_STATE = ModelState(lam=3.0, gamma=2.0, psi=1.0, theta=5.0, phi=4.0)
COHORT_AGENTS = 2000
COHORT_SUCCESS_PROB = 0.5
COHORT_SPLIT_AFTER = 3

DEFAULT_NOISE = NoiseSpec()
DEFAULT_FEEDBACK = FeedbackParams(alpha=0.3, beta=0.5, delta=1.0, kappa=0.4)

GRID_ALPHAS = (0.1, 0.3, 0.5, 0.7)
GRID_BETAS = (0.1, 0.3, 0.5, 0.7)
GRID_DELTAS = (0.5, 1.0, 1.5)
GRID_KAPPA = 0.4
