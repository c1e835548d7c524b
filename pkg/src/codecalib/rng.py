"""Small, fully specified pseudo-random generator.

All randomness in the package (fold assignment, synthetic corpora) flows
through :class:`LinearRng` so that a given seed yields the same stream on
any platform and in any language that follows the recipe below.

Recipe (all arithmetic modulo 2**64, ``>>`` is a logical shift):

``mix64(z)``::

    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB
    return z ^ (z >> 31)

Seeding: ``state = mix64(seed + 0x9E3779B97F4A7C15)`` (the splitmix64 step).

Each draw advances a 64-bit linear congruential generator and returns the
mixed state::

    state = state * 6364136223846793005 + 1442695040888963407
    return mix64(state)

``random()`` is ``(next_u64() >> 11) * 2**-53``. ``below(n)`` rejects draws
``>= 2**64 - (2**64 % n)`` and returns ``x % n``. ``shuffle`` is a
Fisher-Yates pass from the last index down to 1, swapping ``i`` with
``below(i + 1)``.
"""

from __future__ import annotations

from typing import MutableSequence

MASK64 = (1 << 64) - 1
GOLDEN_GAMMA = 0x9E3779B97F4A7C15
LCG_MULTIPLIER = 6364136223846793005
LCG_INCREMENT = 1442695040888963407


def mix64(z: int) -> int:
    z &= MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


class LinearRng:
    """64-bit LCG with splitmix-style seeding and output mixing."""

    def __init__(self, seed: int = 0):
        self.seed = seed
        self._state = mix64((seed + GOLDEN_GAMMA) & MASK64)

    def next_u64(self) -> int:
        self._state = (self._state * LCG_MULTIPLIER + LCG_INCREMENT) & MASK64
        return mix64(self._state)

    def random(self) -> float:
        """Uniform double in [0, 1) with 53 bits of resolution."""
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))

    def uniform(self, lo: float, hi: float) -> float:
        return lo + (hi - lo) * self.random()

    def below(self, n: int) -> int:
        """Unbiased integer in [0, n)."""
        if n <= 0:
            raise ValueError("below() requires n >= 1")
        limit = (1 << 64) - ((1 << 64) % n)
        while True:
            x = self.next_u64()
            if x < limit:
                return x % n

    def bernoulli(self, p: float) -> bool:
        return self.random() < p

    def shuffle(self, items: MutableSequence) -> None:
        for i in range(len(items) - 1, 0, -1):
            j = self.below(i + 1)
            items[i], items[j] = items[j], items[i]
