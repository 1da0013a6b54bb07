"""Named, splittable random streams.

Every random quantity is drawn from a stream identified by
``(seed, purpose, *key)``, so a draw depends only on its key and never on
how many other draws happened before it. ``purpose`` is one of the
integer tags below.
"""

from __future__ import annotations

import numpy as np

# stream purposes
SIM_PATH = 1
SIM_COUNTS = 2
SIM_NOISE = 3
INIT_AUX = 10
SEGMENTS = 11
PARAMS = 12
WARMUP = 13
REPLICATE = 20


def stream(seed: int, purpose: int, *key: int) -> np.random.Generator:
    """Independent PCG64 generator for ``(seed, purpose, *key)``."""
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(purpose), *map(int, key)))
    return np.random.Generator(np.random.PCG64(ss))


def as_generator(rng) -> np.random.Generator:
    """Accept a Generator or an integer seed."""
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)
