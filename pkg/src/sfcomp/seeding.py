"""Deterministic 64-bit seed mixing and counter-based uniforms.

Every random draw in this package comes from the splitmix64 finalizer
applied to (seed, counter) pairs, so results are bit-identical across
platforms and numpy versions. The mixing constants are the standard
splitmix64 ones:

    GOLDEN = 0x9E3779B97F4A7C15
    MIX1   = 0xBF58476D1CE4E5B9
    MIX2   = 0x94D049BB133111EB
"""

from __future__ import annotations

import numpy as np

_MASK = np.uint64(0xFFFFFFFFFFFFFFFF)
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)

# 2^-53, so mixed bits >> 11 land in [0, 1)
_INV_2_53 = float(2.0**-53)


def _finalize(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * _MIX1
    z = (z ^ (z >> np.uint64(27))) * _MIX2
    return z ^ (z >> np.uint64(31))


def mix64(seed: int, index: int) -> int:
    """Derive a child seed from (seed, index); splitmix64 stream element."""
    with np.errstate(over="ignore"):
        z = (np.uint64(seed & 0xFFFFFFFFFFFFFFFF)
             + _GOLDEN * np.uint64((index + 1) & 0xFFFFFFFFFFFFFFFF)) & _MASK
        return int(_finalize(z))


def child_seed(seed: int, *indices: int) -> int:
    """Fold a path of indices into one derived seed."""
    out = seed & 0xFFFFFFFFFFFFFFFF
    for i in indices:
        out = mix64(out, i)
    return out


def uniforms(seed: int, start: int, count: int) -> np.ndarray:
    """`count` uniforms in [0,1) at counters start..start+count-1 of the seed's stream."""
    with np.errstate(over="ignore"):
        counters = np.arange(start, start + count, dtype=np.uint64)
        z = (np.uint64(seed & 0xFFFFFFFFFFFFFFFF) + _GOLDEN * (counters + np.uint64(1))) & _MASK
        return (_finalize(z) >> np.uint64(11)).astype(np.float64) * _INV_2_53
