"""Shared exceptions and random-stream helpers."""

from __future__ import annotations

import numpy as np

DEFAULT_SEED = 20160628


class DomainError(ValueError):
    """Raised when an argument lies outside an operation's domain of validity."""


def stream(seed: int, *key: int) -> np.random.Generator:
    """Counter-based random stream derived from ``seed`` and an integer key.

    Streams for distinct keys are independent, so work split into indexed
    pieces is reproducible regardless of the order the pieces run in.
    """
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))
