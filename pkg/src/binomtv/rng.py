"""Seedable, splittable random bit source (Philox counter-based generator).

``split(i)`` derives an independent child stream from the seed and the path of
split indices, so parallel workers get reproducible, non-overlapping streams.
"""
from __future__ import annotations

import os

import numpy as np

SEED_ENV = "BINSAMP_SEED"
_BATCH = 256
_MASK64 = (1 << 64) - 1


class Rng:
    def __init__(self, seed: int = 0, path: tuple = ()):
        if not 0 <= seed <= _MASK64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        self.seed = seed
        self.path = tuple(path)
        self._bg = np.random.Philox(np.random.SeedSequence(seed, spawn_key=self.path))
        self._words: list[int] = []
        self._bitbuf = 0
        self._bitcount = 0
        self.words_used = 0

    def split(self, i: int) -> "Rng":
        return Rng(self.seed, self.path + (i,))

    def next64(self) -> int:
        if not self._words:
            self._words = self._bg.random_raw(_BATCH).tolist()
            self._words.reverse()
        self.words_used += 1
        return self._words.pop()

    def bits(self, k: int) -> int:
        """Uniform integer in [0, 2**k)."""
        if k <= 64:
            return self.next64() >> (64 - k)
        out = 0
        n = 0
        while n < k:
            out = (out << 64) | self.next64()
            n += 64
        return out >> (n - k)

    def coin(self) -> int:
        """One fair bit, drawn from a cached 64-bit word."""
        if not self._bitcount:
            self._bitbuf = self.next64()
            self._bitcount = 64
        self._bitcount -= 1
        return (self._bitbuf >> self._bitcount) & 1

    def randbelow(self, n: int) -> int:
        """Uniform integer in [0, n) by rejection."""
        if n <= 0:
            raise ValueError("n must be positive")
        k = n.bit_length()
        while True:
            r = self.bits(k)
            if r < n:
                return r

    def random(self) -> float:
        return self.bits(53) / (1 << 53)


def resolve_seed(seed: int | None = None) -> int:
    """Explicit seed, else $BINSAMP_SEED, else 0."""
    if seed is not None:
        return seed
    env = os.environ.get(SEED_ENV)
    if env is None or not env.strip():
        return 0
    try:
        value = int(env.strip(), 10)
    except ValueError:
        raise ValueError(f"{SEED_ENV} must be a decimal integer, got {env!r}") from None
    if not 0 <= value <= _MASK64:
        raise ValueError(f"{SEED_ENV} must fit in 64 bits")
    return value


def default_rng(seed: int | None = None) -> Rng:
    return Rng(resolve_seed(seed))
