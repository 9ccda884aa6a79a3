"""Named, counted random streams derived from one integer seed."""
from __future__ import annotations

import zlib

import numpy as np


def stream(seed: int, name: str, *counters: int) -> np.random.Generator:
    """Independent generator for (seed, name, counters); no ambient entropy."""
    key = (zlib.crc32(name.encode()),) + tuple(int(c) for c in counters)
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=key))
