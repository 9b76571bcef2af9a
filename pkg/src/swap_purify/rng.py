"""Stateless counter-based uniforms.

Every random number is a pure function of an integer key such as
``(seed, replica, level, call)``. Any call in an attempt tree can therefore be
regenerated on its own, and replicas can run in any order or in parallel
without changing their draws. The mixer is the SplitMix64 finalizer, chained
over the key words and vectorized over numpy ``uint64`` arrays.
"""
from __future__ import annotations

import numpy as np

_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_MASK64 = (1 << 64) - 1


def _mix(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def _words(w) -> np.ndarray:
    arr = np.asarray(w)
    if arr.dtype == np.uint64:
        return arr
    if np.any(arr < 0):
        raise ValueError("key words must be non-negative")
    return arr.astype(np.uint64)


def hash_words(*words) -> np.ndarray:
    """64-bit hash of a key; words broadcast against each other."""
    with np.errstate(over="ignore"):
        h = np.zeros(np.broadcast_shapes(*(np.shape(w) for w in words)), dtype=np.uint64)
        for w in words:
            h = _mix(h ^ _mix(_words(w) + _GAMMA))
    return h


def uniform(*words) -> np.ndarray:
    """Uniform doubles in the open interval (0, 1), one per broadcast key."""
    h = hash_words(*words)
    return ((h >> np.uint64(11)).astype(np.float64) + 0.5) * (1.0 / 9007199254740992.0)


def derive_seed(*words) -> int:
    """Collapse a key into a single 64-bit seed (for per-point sub-streams)."""
    return int(hash_words(*words))


def validate_seed(seed) -> int:
    seed = int(seed)
    if not 0 <= seed <= _MASK64:
        raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed}")
    return seed


def geometric(u: np.ndarray, p: float) -> np.ndarray:
    """Inverse-CDF draw of the number of trials up to the first success.

    Support is ``{1, 2, ...}`` with ``P(G > m) = (1 - p)**m``.
    """
    if not 0 < p <= 1:
        raise ValueError(f"success probability must lie in (0, 1], got {p!r}")
    u = np.asarray(u, dtype=float)
    if p == 1.0:
        return np.ones(u.shape, dtype=np.int64)
    return (np.floor(np.log(u) / np.log1p(-p)) + 1).astype(np.int64)
