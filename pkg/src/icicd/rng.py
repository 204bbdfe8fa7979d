"""Counter-based random streams.

A stream is fully determined by ``(seed, index)``, so a realization (or a
fixed-size batch of realizations) draws the same numbers no matter which
worker evaluates it or in which order.
"""
import numpy as np


def stream(seed: int, index: int = 0, *extra: int) -> np.random.Generator:
    key = np.random.SeedSequence([int(seed) & 0xFFFFFFFF, int(index), *map(int, extra)])
    return np.random.Generator(np.random.Philox(key))
