"""Counter-based random draws.

Every draw is a pure function of ``(master_seed, stream_id, index, slot)``:
``index`` counts trials or agents, ``slot`` counts variables or steps.
Trials can be evaluated in any order, chunking or thread count and still
see the same numbers. The mixer is the SplitMix64 finalizer applied to the
keyed index, then again with the slot folded in.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri

MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_GOLDEN2 = 0xD1B54A32D192ED03
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB
_TWO_NEG_53 = 2.0**-53


def _mix_int(z: int) -> int:
    z &= MASK64
    z = ((z ^ (z >> 30)) * _M1) & MASK64
    z = ((z ^ (z >> 27)) * _M2) & MASK64
    return z ^ (z >> 31)


def _mix(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * np.uint64(_M1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_M2)
    return z ^ (z >> np.uint64(31))


@dataclass(frozen=True)
class SeedSpec:
    master_seed: int
    stream_id: int = 0

    def __post_init__(self) -> None:
        for name in ("master_seed", "stream_id"):
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, (int, np.integer)):
                raise TypeError(f"{name} must be an integer, got {v!r}")
            if not 0 <= int(v) <= MASK64:
                raise ValueError(f"{name} must fit in an unsigned 64-bit integer, got {v!r}")
            object.__setattr__(self, name, int(v))

    @property
    def key(self) -> int:
        return _mix_int(_mix_int(self.master_seed + _GOLDEN) ^ (self.stream_id * _GOLDEN))

    def child(self, stream_id: int) -> SeedSpec:
        """A decorrelated stream for a sub-task, keyed by this stream and ``stream_id``."""
        return SeedSpec(self.master_seed, _mix_int(self.key ^ _mix_int(stream_id + 1)))


def uniforms(seed: SeedSpec, index: np.ndarray, slot: int) -> np.ndarray:
    """Uniform draws in the open interval (0, 1) for each counter ``index``."""
    idx = np.asarray(index, dtype=np.uint64)
    salt = np.uint64(((slot + 1) * _GOLDEN2) & MASK64)
    with np.errstate(over="ignore"):
        z = _mix(idx * np.uint64(_GOLDEN) ^ np.uint64(seed.key))
        z = _mix(z + salt)
    return ((z >> np.uint64(11)).astype(np.float64) + 0.5) * _TWO_NEG_53


def normals(seed: SeedSpec, index: np.ndarray, slot: int) -> np.ndarray:
    """Standard normal draws by inverse CDF of :func:`uniforms`."""
    return ndtri(uniforms(seed, index, slot))
