"""Counter-based random streams.

Every random draw in the package comes from a Philox generator keyed by a
tuple of non-negative integers, e.g. ``(experiment_seed, STREAM_QUERY,
trial_index, attempt)``.  A trial's randomness therefore depends only on its
key, never on how many draws happened before it or on which worker ran it.
"""

from __future__ import annotations

import zlib
from typing import Union

import numpy as np

SeedLike = Union[int, np.random.Generator, tuple, list, None]

# stream tags keep independent consumers from sharing keys
STREAM_CORPUS = 1
STREAM_QUERY = 2
STREAM_ERASURE = 3
STREAM_BOUNDS = 4
STREAM_QMC = 5
STREAM_EMBEDDING = 6
STREAM_SCORES = 7


def tag(name: str) -> int:
    """Stable 32-bit integer for a string label."""
    return zlib.crc32(name.encode("utf-8"))


def keyed_generator(*key: int) -> np.random.Generator:
    """Philox generator determined entirely by ``key``."""
    words = [int(k) for k in key]
    if any(w < 0 for w in words):
        raise ValueError(f"seed key components must be non-negative, got {key}")
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(words)))


def as_generator(seed: SeedLike) -> np.random.Generator:
    """Accept an int, a key tuple, an existing generator or None."""
    if isinstance(seed, np.random.Generator):
        return seed
    if seed is None:
        return np.random.Generator(np.random.Philox())
    if isinstance(seed, (tuple, list)):
        return keyed_generator(*seed)
    return keyed_generator(int(seed))
