"""Deterministic named random substreams.

Every stochastic component draws from a stream addressed by a path of names
and indices below a root seed, e.g. ``root(seed).child("iter", 7)``.  Streams
are backed by the counter-based Philox generator keyed through
``numpy.random.SeedSequence``, so results do not depend on the order in which
streams are consumed and remain reproducible under concurrency or resume.
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass

import numpy as np


def _encode(part: int | str) -> int:
    if isinstance(part, (int, np.integer)):
        value = int(part)
        if value < 0:
            raise ValueError(f"stream path integers must be nonnegative, got {value}")
        return value
    if isinstance(part, str):
        return zlib.crc32(part.encode("utf-8"))
    raise TypeError(f"stream path parts must be int or str, got {type(part).__name__}")


@dataclass(frozen=True)
class Stream:
    """An addressable random stream; ``child`` derives independent substreams."""

    entropy: tuple[int, ...]

    def child(self, *parts: int | str) -> "Stream":
        return Stream(self.entropy + tuple(_encode(p) for p in parts))

    def generator(self) -> np.random.Generator:
        seq = np.random.SeedSequence(list(self.entropy))
        return np.random.Generator(np.random.Philox(seq))


def root(seed: int, *parts: int | str) -> Stream:
    """Stream rooted at an experiment seed, optionally pre-scoped by names."""
    if seed < 0:
        raise ValueError("seed must be nonnegative")
    return Stream((int(seed),)).child(*parts) if parts else Stream((int(seed),))
