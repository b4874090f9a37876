"""Reproducible random streams.

Every stochastic routine in the package draws from a counter-based Philox
generator keyed by (seed, stream). Same (seed, stream) means bit-identical
draws across runs and platforms; replicas of an experiment get consecutive
stream ids.
"""

import numpy as np


def make_rng(seed: int, stream: int = 0) -> np.random.Generator:
    """Return the Philox generator for a (seed, stream) pair.

    seed and stream are taken modulo 2**64.
    """
    key = np.array([seed % (1 << 64), stream % (1 << 64)], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))
