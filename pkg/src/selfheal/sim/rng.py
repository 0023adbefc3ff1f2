"""Named, reproducible random substreams derived from one trial seed."""

from __future__ import annotations

import hashlib
import random

import numpy as np


def _derive(seed: int, label: str) -> int:
    h = hashlib.blake2b(f"{seed}:{label}".encode(), digest_size=16)
    return int.from_bytes(h.digest(), "little")


def rng_stream(seed: int, label: str) -> random.Random:
    """Independent ``random.Random`` for one purpose (``label``) of a trial."""
    return random.Random(_derive(seed, label))


def np_stream(seed: int, label: str) -> np.random.Generator:
    return np.random.default_rng(_derive(seed, label))


def derive_seed(seed: int, label: str) -> int:
    """64-bit child seed, e.g. for per-trial seeds inside a grid."""
    return _derive(seed, label) & ((1 << 64) - 1)
