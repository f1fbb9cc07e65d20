"""Deterministic seed derivation and sampling primitives.

Every random decision in the toolkit flows through a named stream derived
from a single 64-bit master seed, so any result is reproducible from
(parameters, master_seed) alone and independent of scheduling.

The derivation function is the SplitMix64 finalizer:

    child_seed(parent, index) = mix64((parent + (index + 1) * GOLDEN) mod 2**64)

with GOLDEN = 0x9E3779B97F4A7C15 and mix64 the xor-shift-multiply finalizer
(constants 0xBF58476D1CE4E5B9 and 0x94D049BB133111EB). This is frozen: two
machines running the same plan must derive identical child seeds.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15

# Stream tags for per-trial substreams. Keys, error patterns and decoder
# tie-breaks never share a stream, so changing one consumer cannot shift
# the randomness seen by another.
STREAM_KEY = 1
STREAM_ERROR = 2
STREAM_TIEBREAK = 3


def mix64(z: int) -> int:
    """SplitMix64 finalizer: bijective 64-bit mixing of ``z``."""
    z &= _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (z ^ (z >> 31)) & _MASK64


def child_seed(parent: int, index: int) -> int:
    """Derive the 64-bit seed of child stream ``index`` from ``parent``."""
    if index < 0:
        raise ValueError("stream index must be non-negative")
    return mix64((parent + (index + 1) * _GOLDEN) & _MASK64)


def make_rng(seed: int) -> np.random.Generator:
    """PCG64 generator for a derived 64-bit seed."""
    return np.random.Generator(np.random.PCG64(seed))


def sample_distinct(rng: np.random.Generator, n: int, k: int) -> np.ndarray:
    """Sample ``k`` distinct values from ``{0..n-1}``, uniformly, sorted.

    Partial Fisher-Yates over an index pool: draw j_i uniform in [i, n) and
    swap, keeping the first ``k`` entries. Rejection-free, so the number of
    generator draws depends only on (n, k).
    """
    if not 0 <= k <= n:
        raise ValueError(f"cannot sample {k} distinct values from {n}")
    if k == 0:
        return np.empty(0, dtype=np.int64)
    pool = np.arange(n, dtype=np.int64)
    draws = rng.integers(low=np.arange(k), high=n)
    for i in range(k):
        j = draws[i]
        pool[i], pool[j] = pool[j], pool[i]
    out = pool[:k]
    out.sort()
    return out
