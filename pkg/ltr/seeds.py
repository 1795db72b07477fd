"""Deterministic seed derivation.

Every random stream in a run descends from the single top-level ``seed`` of the
experiment config. A stream is named by a path such as ``("mask", 3)`` and its
seed is a BLAKE2b digest of the base seed and that path, so streams never
depend on Python's salted ``hash`` or on call order.
"""

import hashlib

import numpy as np


def derive_seed(seed: int, *path: int | str) -> int:
    """Return a 63-bit seed for the stream named by ``path`` under ``seed``."""
    h = hashlib.blake2b(digest_size=8)
    h.update(str(int(seed)).encode())
    for part in path:
        h.update(b"/")
        h.update(str(part).encode())
    return int.from_bytes(h.digest(), "big") >> 1


def make_rng(seed: int | np.random.Generator) -> np.random.Generator:
    """Accept either a seed or an existing generator."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)
