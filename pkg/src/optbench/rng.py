"""Deterministic random numbers and basic statistics.

A single SplitMix64 generator backs every stochastic choice in the
package (weight init, dataset draws, batch shuffling) so that a run is
bit-reproducible across platforms.  No library RNG is used anywhere.
"""

from __future__ import annotations

import math
import warnings

_MASK64 = (1 << 64) - 1
_GOLDEN_GAMMA = 0x9E3779B97F4A7C15
_TWO_POW_MINUS_53 = 2.0**-53


def _mix64(z: int) -> int:
    """SplitMix64 finalizer (two xor-shift-multiply rounds plus a shift)."""
    z &= _MASK64
    z ^= z >> 30
    z = (z * 0xBF58476D1CE4E5B9) & _MASK64
    z ^= z >> 27
    z = (z * 0x94D049BB133111EB) & _MASK64
    z ^= z >> 31
    return z


class Prng:
    """SplitMix64 pseudo-random generator.

    State advances by adding the golden-gamma constant; outputs are the
    finalizer applied to the state.  Instances are single-owner: never
    share one between concurrent activities, derive children instead.
    """

    __slots__ = ("state",)

    def __init__(self, seed: int):
        self.state = seed & _MASK64

    def next_u64(self) -> int:
        self.state = (self.state + _GOLDEN_GAMMA) & _MASK64
        return _mix64(self.state)

    def next_unit(self) -> float:
        # float64 in [0, 1) with 53 random bits
        return (self.next_u64() >> 11) * _TWO_POW_MINUS_53

    def uniform(self, lo: float, hi: float) -> float:
        if not lo < hi:
            raise ValueError(f"uniform bounds must satisfy lo < hi, got [{lo}, {hi})")
        return lo + (hi - lo) * self.next_unit()

    def normal(self) -> float:
        """Standard normal via Box-Muller; consumes exactly two uniforms.

        The sine partner variate is discarded so the draw count per call
        is fixed.  u1 = 0 is remapped to 2^-53 to keep log(u1) finite.
        """
        u1 = self.next_unit()
        u2 = self.next_unit()
        if u1 == 0.0:
            u1 = _TWO_POW_MINUS_53
        return math.sqrt(-2.0 * math.log(u1)) * math.cos(2.0 * math.pi * u2)

    def below(self, n: int) -> int:
        """Integer in [0, n). Modulo bias is < 2^-50 for any n used here."""
        if n <= 0:
            raise ValueError("n must be positive")
        return self.next_u64() % n

    def shuffled_indices(self, n: int) -> list[int]:
        """Fisher-Yates permutation of range(n), platform-deterministic."""
        idx = list(range(n))
        for i in range(n - 1, 0, -1):
            j = self.below(i + 1)
            idx[i], idx[j] = idx[j], idx[i]
        return idx


def derive_rng(master_seed: int, *keys: int | str) -> Prng:
    """Independent child generator for a benchmark cell.

    Each key folds into the state with one SplitMix64 scramble, so cells
    keyed by e.g. (task name, seed index) get uncorrelated streams that
    do not depend on enumeration order of other cells.
    """
    state = _mix64(master_seed & _MASK64)
    for key in keys:
        if isinstance(key, str):
            # FNV-1a 64-bit over the UTF-8 bytes
            acc = 0xCBF29CE484222325
            for byte in key.encode("utf-8"):
                acc = ((acc ^ byte) * 0x100000001B3) & _MASK64
            key = acc
        state = _mix64((state + _GOLDEN_GAMMA) ^ (key & _MASK64))
    return Prng(state)


def mean_std(values) -> tuple[float, float]:
    """Arithmetic mean and sample (N-1) standard deviation.

    A single value yields std 0.0 with a warning; an empty input is an
    error.
    """
    vals = [float(v) for v in values]
    n = len(vals)
    if n == 0:
        raise ValueError("mean_std needs at least one value")
    mean = math.fsum(vals) / n
    if n == 1:
        warnings.warn("std of a single value reported as 0", stacklevel=2)
        return mean, 0.0
    var = math.fsum((v - mean) ** 2 for v in vals) / (n - 1)
    return mean, math.sqrt(var)
