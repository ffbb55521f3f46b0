"""Stateless derivation of per-replication seeds.

``derive_seed(base, i)`` is the SplitMix64 output function applied to
``base + (i + 1) * GOLDEN_GAMMA`` (all arithmetic modulo 2**64)::

    z = base + (i + 1) * 0x9E3779B97F4A7C15
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB
    z =  z ^ (z >> 31)

Every step is a bijection on 64-bit words, so for a fixed base distinct
indices give distinct seeds, and for a fixed index distinct bases do too.
Each replication then owns ``numpy.random.Generator(PCG64(seed))``.
"""

from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN_GAMMA = 0x9E3779B97F4A7C15
MIX1 = 0xBF58476D1CE4E5B9
MIX2 = 0x94D049BB133111EB


def derive_seed(base: int, index: int) -> int:
    z = (int(base) + (int(index) + 1) * GOLDEN_GAMMA) & MASK64
    z = ((z ^ (z >> 30)) * MIX1) & MASK64
    z = ((z ^ (z >> 27)) * MIX2) & MASK64
    return z ^ (z >> 31)


def replication_rng(base: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(derive_seed(base, index)))
