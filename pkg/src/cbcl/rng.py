"""Portable seeded randomness built on SplitMix64.

Every stochastic component in this package (synthetic data, shot splits,
epoch shuffles, simulation trials) draws from this generator rather than
an opaque platform RNG, so a fixed seed reproduces identical bit streams
on any machine and in any faithful reimplementation.

Algorithm (SplitMix64, Steele/Lea/Flood constants):

    state   <- (state + 0x9E3779B97F4A7C15) mod 2^64
    z       <- state
    z       <- (z xor (z >> 30)) * 0xBF58476D1CE4E5B9   mod 2^64
    z       <- (z xor (z >> 27)) * 0x94D049BB133111EB   mod 2^64
    output  <- z xor (z >> 31)

Derived draws are fixed too:

- float64 in [0, 1): ``(u64 >> 11) * 2**-53``
- standard normals: Box-Muller on consecutive uniform pairs (u1, u2),
  ``r = sqrt(-2*ln(1 - u1))``, outputs ``r*cos(2*pi*u2), r*sin(2*pi*u2)``;
  for an odd request the trailing sine value is discarded
- bounded integers: rejection sampling, ``u64 % n`` accepted only when
  ``u64 < (2**64 // n) * n``
- permutations: Fisher-Yates from the top index down
"""

from __future__ import annotations

import numpy as np

MASK64 = 0xFFFFFFFFFFFFFFFF
GOLDEN_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB

_U64_TO_UNIT = 2.0**-53


def mix64(z: int) -> int:
    """The SplitMix64 finalizer on a single 64-bit value."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * _MIX1) & MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & MASK64
    return z ^ (z >> 31)


def derive_seed(base: int, *indices: int) -> int:
    """Derive an independent child seed from a base seed and integer indices.

    Chains the SplitMix64 finalizer over (base, k0, k1, ...) so distinct
    index tuples give decorrelated streams. Used for per-run, per-increment
    and per-trial seeding.
    """
    state = base & MASK64
    for k in indices:
        state = mix64((state + GOLDEN_GAMMA * ((k & MASK64) + 1)) & MASK64)
    return state


class SplitMix64:
    """Stateful SplitMix64 stream with the derived draws documented above."""

    def __init__(self, seed: int):
        self._state = seed & MASK64

    # -- core stream ----------------------------------------------------

    def next_u64(self) -> int:
        self._state = (self._state + GOLDEN_GAMMA) & MASK64
        return mix64(self._state)

    def u64_array(self, n: int) -> np.ndarray:
        """n consecutive outputs, identical to n calls of next_u64()."""
        if n < 0:
            raise ValueError("n must be >= 0")
        steps = np.arange(1, n + 1, dtype=np.uint64)
        z = np.uint64(self._state) + steps * np.uint64(GOLDEN_GAMMA)
        self._state = (self._state + n * GOLDEN_GAMMA) & MASK64
        z = (z ^ (z >> np.uint64(30))) * np.uint64(_MIX1)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(_MIX2)
        return z ^ (z >> np.uint64(31))

    # -- derived draws --------------------------------------------------

    def next_f64(self) -> float:
        return (self.next_u64() >> 11) * _U64_TO_UNIT

    def f64_array(self, n: int) -> np.ndarray:
        return (self.u64_array(n) >> np.uint64(11)).astype(np.float64) * _U64_TO_UNIT

    def uniform_array(self, low: float, high: float, n: int) -> np.ndarray:
        return low + (high - low) * self.f64_array(n)

    def normal_array(self, n: int) -> np.ndarray:
        """n standard-normal draws via Box-Muller on 2*ceil(n/2) uniforms."""
        pairs = (n + 1) // 2
        u = self.f64_array(2 * pairs)
        u1, u2 = u[0::2], u[1::2]
        r = np.sqrt(-2.0 * np.log(1.0 - u1))
        theta = 2.0 * np.pi * u2
        out = np.empty(2 * pairs, dtype=np.float64)
        out[0::2] = r * np.cos(theta)
        out[1::2] = r * np.sin(theta)
        return out[:n]

    def bounded(self, n: int) -> int:
        """Unbiased integer in [0, n)."""
        if n <= 0:
            raise ValueError("n must be positive")
        threshold = (2**64 // n) * n
        while True:
            u = self.next_u64()
            if u < threshold:
                return u % n

    def shuffle(self, items: list) -> None:
        """In-place Fisher-Yates shuffle."""
        for i in range(len(items) - 1, 0, -1):
            j = self.bounded(i + 1)
            items[i], items[j] = items[j], items[i]

    def permutation(self, n: int) -> np.ndarray:
        idx = list(range(n))
        self.shuffle(idx)
        return np.asarray(idx, dtype=np.int64)
