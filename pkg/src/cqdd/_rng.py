"""Keyed random streams.

Every random draw in the package comes from a generator keyed by
(master seed, purpose tag, indices...), so results never depend on the
order in which samples, steps or classes are evaluated.
"""
import zlib

import numpy as np


def tag_key(tag: str) -> int:
    return zlib.crc32(tag.encode("utf-8"))


def stream(seed: int, tag: str, *indices: int) -> np.random.Generator:
    """Return an independent generator for ``(seed, tag, *indices)``."""
    key = (tag_key(tag),) + tuple(int(i) for i in indices)
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=key))


def child_seed(seed: int, tag: str, *indices: int) -> int:
    """Derive a 63-bit integer seed, for APIs that want a plain int."""
    return int(stream(seed, tag, *indices).integers(0, 2**63 - 1))
