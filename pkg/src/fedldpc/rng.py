"""Keyed random streams.

Every random draw in the simulator comes from a Philox generator whose key is
derived from ``(seed, *keys)``.  Philox is counter-based, so draw ``i`` of a
stream depends only on the key and ``i``; the order in which streams are
created or consumed never matters.
"""

from __future__ import annotations

import numpy as np

# Purpose tags keep streams for different jobs apart even when the other
# key components collide.
CHANNEL = 1
BIT_FLIP = 2
MINIBATCH = 3
INFO_WORDS = 4
DATASET = 5
MODEL_INIT = 6
UNCODED = 7


def stream(seed: int, *keys: int) -> np.random.Generator:
    """Return an independent generator for ``(seed, *keys)``."""
    if seed < 0 or any(k < 0 for k in keys):
        raise ValueError("seed and stream keys must be non-negative")
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in keys))
    return np.random.Generator(np.random.Philox(ss))
