"""Reproducible Poisson variates.

Counts depend only on ``(seed, index, mean)`` so any implementation of the
same steps reproduces them bit for bit:

* uniforms come from a SplitMix64 stream keyed by ``mix(seed) ^ mix(index + 1)``,
  each uniform being the top 53 bits of the next output divided by 2**53;
* means below 10 use inversion by sequential search of the CDF;
* larger means use Hormann's PTRS transformed rejection (1993).
"""
from __future__ import annotations

import math

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
INVERSION_LIMIT = 10.0


def _mix(z: int) -> int:
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9 & _MASK
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB & _MASK
    return z ^ (z >> 31)


class SplitMix64:
    """Uniform stream on [0, 1)."""

    def __init__(self, seed: int, index: int = 0):
        self.state = _mix(seed & _MASK) ^ _mix((index + 1) & _MASK)

    def next_u64(self) -> int:
        self.state = (self.state + _GOLDEN) & _MASK
        return _mix(self.state)

    def uniform(self) -> float:
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))


def _inversion(lam: float, rng: SplitMix64) -> int:
    u = rng.uniform()
    k = 0
    p = math.exp(-lam)
    cdf = p
    while u > cdf:
        k += 1
        p *= lam / k
        cdf += p
        if p == 0.0:  # CDF stalled below u through rounding
            break
    return k


def _ptrs(lam: float, rng: SplitMix64) -> int:
    slam = math.sqrt(lam)
    loglam = math.log(lam)
    b = 0.931 + 2.53 * slam
    a = -0.059 + 0.02483 * b
    inv_alpha = 1.1239 + 1.1328 / (b - 3.4)
    v_r = 0.9277 - 3.6224 / (b - 2.0)
    while True:
        u = rng.uniform() - 0.5
        v = rng.uniform()
        us = 0.5 - abs(u)
        k = math.floor((2.0 * a / us + b) * u + lam + 0.43)
        if us >= 0.07 and v <= v_r:
            return k
        if k < 0 or (us < 0.013 and v > us):
            continue
        lhs = math.log(v) + math.log(inv_alpha) - math.log(a / (us * us) + b)
        rhs = -lam + k * loglam - math.lgamma(k + 1)
        if lhs <= rhs:
            return k


def poisson(mean: float, seed: int, index: int) -> int:
    """One Poisson variate for point ``index`` of the stream keyed by ``seed``."""
    if mean < 0 or not math.isfinite(mean):
        raise ValueError(f"Poisson mean must be finite and >= 0 (got {mean})")
    if mean == 0:
        return 0
    rng = SplitMix64(seed, index)
    if mean < INVERSION_LIMIT:
        return _inversion(mean, rng)
    return _ptrs(mean, rng)


def poisson_counts(means, seed: int) -> list[int]:
    return [poisson(float(m), seed, i) for i, m in enumerate(means)]
