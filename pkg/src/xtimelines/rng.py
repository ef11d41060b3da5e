"""Seedable, portable random generator for reproducible experiments.

Document splits must be reproducible bit-for-bit across platforms,
interpreter versions, and reimplementations in other languages, so the
generator algorithm is fixed here rather than borrowed from a runtime
library whose shuffling may change between releases.

The stream is splitmix64: state advances by the 64-bit golden-gamma
constant and each output is the finalizer

    z  = state
    z ^= z >> 30;  z *= 0xBF58476D1CE4E5B9
    z ^= z >> 27;  z *= 0x94D049BB133111EB
    return z ^ (z >> 31)

with all arithmetic modulo 2**64. Bounded draws use rejection sampling,
and sampling without replacement is a partial Fisher-Yates shuffle.
"""

from __future__ import annotations

_MASK = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15


class SplitMix64:
    def __init__(self, seed: int):
        self.state = seed & _MASK

    def next_u64(self) -> int:
        self.state = (self.state + _GAMMA) & _MASK
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
        return z ^ (z >> 31)

    def randrange(self, n: int) -> int:
        """Uniform draw from [0, n); rejection keeps it unbiased."""
        if n <= 0:
            raise ValueError(f"randrange bound must be positive, got {n}")
        limit = _MASK + 1 - ((_MASK + 1) % n)
        while True:
            x = self.next_u64()
            if x < limit:
                return x % n

    def sample(self, seq, k: int) -> list:
        """k items without replacement, by partial Fisher-Yates shuffle."""
        items = list(seq)
        if not 0 <= k <= len(items):
            raise ValueError(f"cannot sample {k} of {len(items)} items")
        for i in range(k):
            j = i + self.randrange(len(items) - i)
            items[i], items[j] = items[j], items[i]
        return items[:k]

    def shuffle(self, seq) -> list:
        items = list(seq)
        return self.sample(items, len(items))
