"""Deterministic randomness: splitmix64 seeding a xoshiro256** stream.

Gaussians come from Box-Muller on 53-bit uniforms. Independent sub-streams
are derived with :func:`mix64`, never by sharing a generator across tasks.
"""

from __future__ import annotations

import numpy as np

from . import kernels

M64 = 0xFFFFFFFFFFFFFFFF
GOLDEN = 0x9E3779B97F4A7C15


def _fmix(z: int) -> int:
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & M64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & M64
    return z ^ (z >> 31)


def splitmix64(x: int) -> tuple[int, int]:
    """One splitmix64 step: returns (next_state, output)."""
    x = (x + GOLDEN) & M64
    return x, _fmix(x)


def mix64(seed: int, index: int) -> int:
    """Derive a child seed: ``fmix(seed ^ fmix(index + GOLDEN))``."""
    return _fmix((seed & M64) ^ _fmix((index + GOLDEN) & M64))


class Rng:
    """xoshiro256** generator seeded through splitmix64."""

    def __init__(self, seed: int):
        self.seed = int(seed) & M64
        x = self.seed
        words = []
        for _ in range(4):
            x, out = splitmix64(x)
            words.append(out)
        self.state = np.array(words, dtype=np.uint64)

    def u64(self, n: int | None = None):
        out = np.empty(1 if n is None else n, dtype=np.uint64)
        kernels.xoshiro_fill_u64(self.state, out)
        return int(out[0]) if n is None else out

    def uniform(self, n: int | None = None):
        raw = self.u64(1 if n is None else n)
        vals = (raw >> np.uint64(11)).astype(np.float64) * (1.0 / 9007199254740992.0)
        return float(vals[0]) if n is None else vals

    def normal(self, shape=()) -> np.ndarray | float:
        if isinstance(shape, int):
            shape = (shape,)
        size = int(np.prod(shape)) if shape != () else 1
        out = np.empty(size, dtype=np.float64)
        kernels.xoshiro_fill_normal(self.state, out)
        return float(out[0]) if shape == () else out.reshape(shape)

    def integer(self, n: int) -> int:
        """Unbiased integer in [0, n) by rejection."""
        if n <= 0:
            raise ValueError("n must be positive")
        limit = (1 << 64) - ((1 << 64) % n)
        while True:
            x = self.u64()
            if x < limit:
                return x % n

    def sample_without_replacement(self, population: int, k: int) -> list[int]:
        """k distinct values from range(population), partial Fisher-Yates."""
        if k > population:
            raise ValueError("sample larger than population")
        swapped: dict[int, int] = {}
        picked = []
        for i in range(k):
            j = i + self.integer(population - i)
            vi = swapped.get(i, i)
            vj = swapped.get(j, j)
            swapped[j] = vi
            picked.append(vj)
        return picked

    def complex_normal(self, shape, variance: float) -> np.ndarray:
        """Circularly-symmetric complex normal with E|z|^2 = variance."""
        parts = self.normal((2,) + tuple(shape)) * np.sqrt(variance / 2.0)
        return parts[0] + 1j * parts[1]
