"""Seed derivation and normal variates.

Child seeds come from the SplitMix64 finalizer; normals are the inverse
normal CDF applied to a Philox (counter-based) uniform stream, so a seed
maps to the same variates regardless of thread count or call order.
"""
from __future__ import annotations

import numpy as np
from scipy.special import ndtri

MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def splitmix64(x: int) -> int:
    x = (x + _GOLDEN) & MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & MASK64
    return x ^ (x >> 31)


def mix(base_seed: int, *indices: int) -> int:
    """Derive a 64-bit child seed from a base seed and a tuple of indices."""
    h = splitmix64(base_seed & MASK64)
    for i in indices:
        h = splitmix64(h ^ (i & MASK64))
    return h


def uniforms(seed: int, size: int) -> np.ndarray:
    """Open-interval uniforms (k + 1/2) 2^-53 from the Philox stream keyed by ``seed``."""
    bg = np.random.Philox(key=seed & MASK64)
    raw = bg.random_raw(size)
    return ((raw >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53


def standard_normals(seed: int, size: int) -> np.ndarray:
    return ndtri(uniforms(seed, size))
