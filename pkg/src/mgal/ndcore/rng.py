"""Seeded random streams.

All randomness is threaded explicitly. Child streams are derived from a
root seed plus string keys so that independent consumers (split, weight
init, SBM sampling) never share state.
"""
from __future__ import annotations

import zlib

import numpy as np


def make_rng(seed: int, *keys: str) -> np.random.Generator:
    words = [int(seed) & 0xFFFFFFFFFFFFFFFF]
    words.extend(zlib.crc32(k.encode()) for k in keys)
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(words)))
