"""Deterministic 64-bit PRNG primitives shared by every component.

Everything random in this package flows through splitmix64: the Monte-Carlo
drivers, the adversarial stream samplers, and the per-node sampling schedules
in the grid simulator. The native kernel implements the exact same sequence
of operations in C, so a given seed produces bit-identical results on either
backend. Keep this module tiny and frozen; changing any constant here changes
every recorded result.
"""

from __future__ import annotations

__all__ = [
    "MASK64",
    "GAMMA",
    "SplitMix64",
    "mix",
    "sample_sorted",
]

MASK64 = (1 << 64) - 1
GAMMA = 0x9E3779B97F4A7C15
_MIX_INIT = 0x243F6A8885A308D3  # pi fractional bits, arbitrary non-zero


def _avalanche(z: int) -> int:
    """Finalizer from splitmix64 (Steele et al.): full 64-bit avalanche."""
    z &= MASK64
    z ^= z >> 30
    z = (z * 0xBF58476D1CE4E5B9) & MASK64
    z ^= z >> 27
    z = (z * 0x94D049BB133111EB) & MASK64
    z ^= z >> 31
    return z


class SplitMix64:
    """Minimal splitmix64 stream with rejection-free-on-powers bounded draws."""

    __slots__ = ("_state",)

    def __init__(self, seed: int):
        self._state = seed & MASK64

    def next_u64(self) -> int:
        self._state = (self._state + GAMMA) & MASK64
        return _avalanche(self._state)

    def bounded(self, k: int) -> int:
        """Uniform draw from [0, k) via modulo rejection (unbiased)."""
        if k <= 0:
            raise ValueError("bounded() needs k >= 1")
        if k & (k - 1) == 0:  # power of two: low bits of splitmix are fine
            return self.next_u64() & (k - 1)
        limit = (1 << 64) - ((1 << 64) % k)
        while True:
            u = self.next_u64()
            if u < limit:
                return u % k


def mix(*parts: int) -> int:
    """Hash a tuple of ints into a 64-bit sub-seed (order sensitive)."""
    acc = _MIX_INIT
    for p in parts:
        acc = _avalanche(((acc ^ (p & MASK64)) + GAMMA) & MASK64)
    return acc


def sample_sorted(rng: SplitMix64, count: int, n: int) -> list[int]:
    """Draw ``count`` distinct positions from [0, n), returned ascending.

    Sparse partial Fisher-Yates: O(count) time and memory regardless of n.
    The draw order is part of the cross-backend contract.
    """
    if count < 0 or count > n:
        raise ValueError(f"cannot sample {count} distinct values from [0, {n})")
    swapped: dict[int, int] = {}
    out = []
    for i in range(count):
        j = i + rng.bounded(n - i)
        vj = swapped.get(j, j)
        vi = swapped.get(i, i)
        out.append(vj)
        swapped[j] = vi
    out.sort()
    return out
