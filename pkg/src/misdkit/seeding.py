"""Deterministic seed derivation.

All randomness in the package flows from a single master seed expanded into
named substreams, so any run can be reproduced from its config alone.  The
expansion is a splitmix64 walk over the master seed and FNV-1a hashes of the
stream labels:

    state = splitmix64(master)
    for each label: state = splitmix64(state XOR fnv1a64(str(label)))

The final state seeds ``numpy.random.default_rng``.  The scheme uses only
64-bit integer arithmetic and is straightforward to port.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1


def splitmix64(x: int) -> int:
    """One splitmix64 step (Steele et al. mixing constants)."""
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (z ^ (z >> 31)) & _MASK64


def fnv1a64(text: str) -> int:
    h = 0xCBF29CE484222325
    for byte in text.encode("utf-8"):
        h = ((h ^ byte) * 0x100000001B3) & _MASK64
    return h


def seed_stream(master: int, *labels) -> int:
    """Derive a 64-bit seed for the substream named by ``labels``."""
    state = splitmix64(int(master) & _MASK64)
    for label in labels:
        state = splitmix64(state ^ fnv1a64(str(label)))
    return state


def rng_for(master: int, *labels) -> np.random.Generator:
    """A ``numpy`` generator seeded from the named substream."""
    return np.random.default_rng(seed_stream(master, *labels))
