"""Deterministic 64-bit RNG used on every randomness path that must be
reproducible across processes and language runtimes.

The generator is splitmix64. Seeds for sub-streams are derived by folding
integer key parts through the splitmix64 finalizer, so results never depend
on evaluation order or thread schedule. External evaluators re-implement
exactly this scheme (see docs/protocol.md).
"""

from __future__ import annotations

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15

# Seeds that cross a process boundary are capped at 53 bits so they survive
# a JSON round-trip through IEEE-754 doubles.
SEED53_MASK = (1 << 53) - 1


def mix64(z: int) -> int:
    """splitmix64 finalizer: a 64-bit bijective mix."""
    z &= _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def hash_seed(*parts: int) -> int:
    """Fold integer key parts into a 64-bit sub-stream seed."""
    h = _GOLDEN
    for p in parts:
        h = mix64((h + (p & _MASK64)) & _MASK64)
    return h


def eval_seed(*parts: int) -> int:
    """Like hash_seed but capped to 53 bits; use for seeds that get serialized."""
    return hash_seed(*parts) & SEED53_MASK


class SplitMix64:
    """Sequential splitmix64 stream."""

    __slots__ = ("state",)

    def __init__(self, seed: int):
        self.state = seed & _MASK64

    def next_u64(self) -> int:
        self.state = (self.state + _GOLDEN) & _MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        return z ^ (z >> 31)

    def random(self) -> float:
        """Uniform float in [0, 1) with 53 bits of precision."""
        return (self.next_u64() >> 11) * 2.0**-53

    def randbelow(self, n: int) -> int:
        """Uniform integer in [0, n). Modulo bias is negligible for n << 2^64."""
        if n <= 0:
            raise ValueError("randbelow requires n > 0")
        return self.next_u64() % n
