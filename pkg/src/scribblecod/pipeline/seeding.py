"""Deterministic randomness helpers."""

from __future__ import annotations

import random
import zlib

import numpy as np
import torch


def seed_everything(seed: int) -> None:
    random.seed(seed)
    np.random.seed(seed % 2**32)
    torch.manual_seed(seed)


def stream_rng(seed: int, *keys: int | str) -> np.random.Generator:
    """Named random stream, independent of global state and call history.

    The same (seed, keys) always yields the same generator, so per-epoch
    streams replay identically after a resume.
    """
    entropy = [seed] + [
        zlib.crc32(k.encode()) if isinstance(k, str) else int(k) for k in keys
    ]
    if any(e < 0 for e in entropy):
        raise ValueError(f"stream keys must be non-negative, got {entropy}")
    return np.random.default_rng(np.random.SeedSequence(entropy))
