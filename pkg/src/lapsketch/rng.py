"""Seed derivation.

Every randomized subsystem draws from its own stream, keyed by the master seed
and a tuple of tags.  The key is hashed with BLAKE2b (8-byte digest) so the
streams are stable across Python versions and platforms:

    derive_seed(seed, "lap", level, round, component)
"""
from __future__ import annotations

import hashlib

import numpy as np


def derive_seed(seed: int, *tags: object) -> int:
    """Return a 64-bit seed for the stream identified by ``(seed, *tags)``."""
    key = ":".join([str(int(seed))] + [str(t) for t in tags]).encode()
    return int.from_bytes(hashlib.blake2b(key, digest_size=8).digest(), "little")


def generator(seed: int, *tags: object) -> np.random.Generator:
    if not tags:
        return np.random.default_rng(int(seed) & 0xFFFFFFFFFFFFFFFF)
    return np.random.default_rng(derive_seed(seed, *tags))
