"""Counter-addressable seeds for disorder ensembles.

Each realization gets its own generator whose seed depends only on
``(base_seed, index)``, so realizations can be produced in any order and on
any worker and still come out identical.
"""

from __future__ import annotations

import numpy as np

_MASK = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15


def _mix64(z: int) -> int:
    # splitmix64 finalizer; a bijection on 64-bit integers
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9 & _MASK
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB & _MASK
    return z ^ (z >> 31)


def realization_seed(base_seed: int, index: int) -> int:
    """Return the 64-bit seed of realization ``index`` in the ensemble ``base_seed``.

    The map ``index -> seed`` is injective for a fixed base seed (an odd-stride
    counter followed by a bijective mixer) and is part of the output format:
    changing it changes every published ensemble.
    """
    if index < 0:
        raise ValueError(f"realization index must be >= 0, got {index}")
    if not 0 <= base_seed <= _MASK:
        raise ValueError(f"base_seed must be an unsigned 64-bit integer, got {base_seed}")
    return _mix64((base_seed + (index + 1) * _GAMMA) & _MASK)


def realization_rng(base_seed: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(realization_seed(base_seed, index)))
