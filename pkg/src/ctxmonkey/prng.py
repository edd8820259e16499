"""Platform-independent 64-bit PRNG used for every seeded draw.

Seeds are mixed with SplitMix64 and the stream is xorshift64*
(Vigna 2016: shifts 12/25/27, multiplier 0x2545F4914F6CDD1D). Everything is
plain integer arithmetic masked to 64 bits, so sequences are identical on
every interpreter and OS.
"""

from __future__ import annotations

import zlib
from typing import Sequence, TypeVar

MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15

T = TypeVar("T")


def splitmix64(x: int) -> int:
    """One SplitMix64 finalization step (input is advanced by the golden gamma)."""
    z = (x + _GOLDEN) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def derive_seed(seed: int, *parts: int | str) -> int:
    """Hash a root seed with a path of integer/string components.

    Strings are folded in through CRC-32 of their UTF-8 bytes.
    """
    h = splitmix64(seed & MASK64)
    for part in parts:
        if isinstance(part, str):
            part = zlib.crc32(part.encode("utf-8"))
        h = splitmix64(h ^ splitmix64(part & MASK64))
    return h


class XorShift64Star:
    def __init__(self, seed: int):
        state = splitmix64(seed & MASK64)
        # xorshift state must never be zero
        self.state = state or _GOLDEN

    def next_u64(self) -> int:
        x = self.state
        x ^= x >> 12
        x ^= (x << 25) & MASK64
        x ^= x >> 27
        self.state = x
        return (x * 0x2545F4914F6CDD1D) & MASK64

    def randint(self, lo: int, hi: int) -> int:
        """Uniform integer in [lo, hi] by rejection sampling (no modulo bias)."""
        if lo > hi:
            raise ValueError(f"empty range [{lo}, {hi}]")
        span = hi - lo + 1
        limit = (1 << 64) - ((1 << 64) % span)
        while True:
            r = self.next_u64()
            if r < limit:
                return lo + r % span

    def choice(self, items: Sequence[T]) -> T:
        if not items:
            raise ValueError("choice from empty sequence")
        return items[self.randint(0, len(items) - 1)]
