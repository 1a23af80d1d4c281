"""Seedable, splittable random streams.

Every stochastic operation in the toolkit draws from a substream keyed by
(master seed, integer key path), so adding users/trials/realizations never
reshuffles the draws of earlier ones.
"""

from __future__ import annotations

import numpy as np


def substream(seed: int, *key: int) -> np.random.Generator:
    """Independent PCG64 generator for the given (seed, key...) path."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.PCG64(ss))


def derive_seed(seed: int, *key: int) -> int:
    """Stable integer seed derived from a (seed, key...) path."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in key))
    return int(ss.generate_state(1, dtype=np.uint64)[0])
