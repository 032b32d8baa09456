"""Deterministic random number generation.

Every stochastic step in this package (weight init, shuffling, dropout,
simulation) draws from :class:`Rng`, a counter-based SplitMix64 generator.
The recurrence is written out in full so that any reimplementation can
reproduce the exact streams:

    output(n) = mix((seed + n * GOLDEN) mod 2**64)        for n = 1, 2, ...

    mix(z):  z ^= z >> 30;  z *= 0xBF58476D1CE4E5B9   (mod 2**64)
             z ^= z >> 27;  z *= 0x94D049BB133111EB   (mod 2**64)
             z ^= z >> 31

with GOLDEN = 0x9E3779B97F4A7C15.  Uniform doubles take the top 53 bits:
u = (output >> 11) * 2**-53, giving values in [0, 1).  Normal deviates use
Box-Muller on two consecutive uniforms (the sine branch is discarded, so
one normal always consumes exactly two raw outputs).

The counter form makes bulk draws a single vectorized numpy expression
while staying bit-identical to the scalar path.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB
_INV_2_53 = 2.0 ** -53


def _mix(z: int) -> int:
    z = ((z ^ (z >> 30)) * _MIX1) & _MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & _MASK64
    return (z ^ (z >> 31)) & _MASK64


def _mix_array(z: np.ndarray) -> np.ndarray:
    # uint64 arrays wrap mod 2**64 silently; errstate guards against any
    # scalar fallback raising overflow warnings.
    with np.errstate(over="ignore"):
        z = (z ^ (z >> np.uint64(30))) * np.uint64(_MIX1)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(_MIX2)
        return z ^ (z >> np.uint64(31))


class Rng:
    """Seeded deterministic generator; single-owner, never shared across threads.

    Parallel work derives independent children via :meth:`spawn`, which hashes
    (parent seed, index) into a fresh seed.
    """

    def __init__(self, seed: int):
        self.seed = int(seed) & _MASK64
        self._n = 0  # raw outputs consumed so far

    def next_u64(self) -> int:
        self._n += 1
        return _mix((self.seed + self._n * _GOLDEN) & _MASK64)

    def _next_block(self, count: int) -> np.ndarray:
        """`count` consecutive raw outputs as a uint64 array (advances state)."""
        with np.errstate(over="ignore"):
            ns = np.arange(self._n + 1, self._n + count + 1, dtype=np.uint64)
            states = np.uint64(self.seed) + ns * np.uint64(_GOLDEN)
        self._n += count
        return _mix_array(states)

    def uniform(self, lo: float = 0.0, hi: float = 1.0) -> float:
        """One draw in [lo, hi)."""
        from .errors import ContractError

        if not lo < hi:
            raise ContractError(f"uniform requires lo < hi, got [{lo}, {hi})")
        u = (self.next_u64() >> 11) * _INV_2_53
        x = lo + (hi - lo) * u
        # guard the half-open contract against rounding at the top end
        return min(x, np.nextafter(hi, lo))

    def uniform_array(self, count: int, lo: float = 0.0, hi: float = 1.0) -> np.ndarray:
        from .errors import ContractError

        if not lo < hi:
            raise ContractError(f"uniform requires lo < hi, got [{lo}, {hi})")
        u = (self._next_block(count) >> np.uint64(11)).astype(np.float64) * _INV_2_53
        return np.minimum(lo + (hi - lo) * u, np.nextafter(hi, lo))

    def normal(self, mean: float = 0.0, std: float = 1.0) -> float:
        return float(self.normal_array(1, mean, std)[0])

    def normal_array(self, count: int, mean: float = 0.0, std: float = 1.0) -> np.ndarray:
        """Box-Muller; consumes 2*count raw outputs, keeps the cosine branch."""
        raw = self._next_block(2 * count)
        u1 = ((raw[0::2] >> np.uint64(11)).astype(np.float64) + 1.0) * _INV_2_53  # (0, 1]
        u2 = (raw[1::2] >> np.uint64(11)).astype(np.float64) * _INV_2_53
        z = np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * np.pi * u2)
        return mean + std * z

    def below(self, n: int) -> int:
        """Integer in [0, n) via the multiply-shift reduction (x * n) >> 64."""
        from .errors import ContractError

        if n <= 0:
            raise ContractError(f"below requires n > 0, got {n}")
        return (self.next_u64() * n) >> 64

    def shuffle(self, values) -> None:
        """In-place Fisher-Yates on a mutable sequence or 1-D array."""
        for i in range(len(values) - 1, 0, -1):
            j = self.below(i + 1)
            values[i], values[j] = values[j], values[i]

    def spawn(self, index: int) -> "Rng":
        """Independent child generator; child seed = mix(seed ^ mix((index+1)*GOLDEN))."""
        child_seed = _mix(self.seed ^ _mix(((index + 1) * _GOLDEN) & _MASK64))
        return Rng(child_seed)
