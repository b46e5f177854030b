"""Seed derivation for reproducible, reorderable random streams.

Every stochastic call site gets its own stream keyed by
``(master seed, purpose tag, index...)``. Streams are built on numpy's
PCG64 bit generator fed by a ``SeedSequence``, both of which are specified
bit-for-bit and therefore portable across platforms.
"""

from __future__ import annotations

import zlib
from typing import Sequence, Union

import numpy as np

SeedLike = Union[int, Sequence[int], np.random.SeedSequence]


def tag_id(tag: str) -> int:
    """Stable 32-bit integer for a purpose tag."""
    return zlib.crc32(tag.encode("utf-8"))


def derive_seed(master: int, tag: str, *indices: int) -> tuple[int, ...]:
    """Entropy tuple for the stream identified by (master, tag, indices)."""
    if master < 0 or any(i < 0 for i in indices):
        raise ValueError("seeds and stream indices must be non-negative")
    return (int(master), tag_id(tag), *(int(i) for i in indices))


def make_rng(seed: SeedLike) -> np.random.Generator:
    if isinstance(seed, np.random.SeedSequence):
        ss = seed
    elif isinstance(seed, (int, np.integer)):
        if seed < 0:
            raise ValueError("seed must be non-negative")
        ss = np.random.SeedSequence(int(seed))
    else:
        ss = np.random.SeedSequence([int(s) for s in seed])
    return np.random.Generator(np.random.PCG64(ss))
