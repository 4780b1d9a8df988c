"""Deterministic 64-bit mixing for seed derivation and counter-based fields.

A "counter-based" random field maps (seed, coordinates) straight to a
variate with no generator state, so values can be queried lazily, in any
order, from any process, and always agree.
"""

from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB
_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3


def splitmix64(x: int) -> int:
    """One splitmix64 avalanche step on a 64-bit integer."""
    z = (x + _GOLDEN) & MASK64
    z = ((z ^ (z >> 30)) * _MIX1) & MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & MASK64
    return (z ^ (z >> 31)) & MASK64


def _splitmix64_array(x: np.ndarray) -> np.ndarray:
    with np.errstate(over="ignore"):
        z = x + np.uint64(_GOLDEN)
        z = (z ^ (z >> np.uint64(30))) * np.uint64(_MIX1)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(_MIX2)
        return z ^ (z >> np.uint64(31))


def fnv1a64(data: bytes) -> int:
    """FNV-1a hash of a byte string, used to fold purpose tags into seeds."""
    h = _FNV_OFFSET
    for b in data:
        h = ((h ^ b) * _FNV_PRIME) & MASK64
    return h


def derive_seed(master_seed: int, index: int, tag: str) -> int:
    """Pure (master seed, index, purpose tag) -> 64-bit seed.

    No global RNG state is involved, so parallel workers can derive their
    own seeds independently and reproducibly.
    """
    s = splitmix64(master_seed & MASK64)
    s = splitmix64(s ^ (index & MASK64))
    return splitmix64(s ^ fnv1a64(tag.encode("utf-8")))


def cell_uniform(seed: int, ix, iy) -> np.ndarray:
    """Uniform [0, 1) variate(s) keyed by (seed, integer cell index).

    ``ix``/``iy`` may be scalars or integer arrays; negative indices are
    folded in via their two's-complement bit pattern.
    """
    ix = np.asarray(ix, dtype=np.int64).view(np.uint64)
    iy = np.asarray(iy, dtype=np.int64).view(np.uint64)
    base = np.uint64(splitmix64(seed & MASK64))
    h = _splitmix64_array(base ^ ix)
    h = _splitmix64_array(h ^ iy)
    return (h >> np.uint64(11)) * 2.0**-53
