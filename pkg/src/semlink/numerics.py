"""Gaussian tail probabilities and deterministic, splittable random streams."""

from __future__ import annotations

import math

import numpy as np
from scipy.special import erfc as _erfc_array, erfcinv as _erfcinv_array

from .errors import DomainError

_SQRT2 = math.sqrt(2.0)
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


def q_function(x: float) -> float:
    """Upper-tail probability P(Z > x) for a standard normal Z."""
    x = float(x)
    if not math.isfinite(x):
        raise DomainError(f"q_function requires a finite argument, got {x!r}")
    return 0.5 * math.erfc(x / _SQRT2)


def q_function_array(x: np.ndarray) -> np.ndarray:
    """Vectorized q_function (no finiteness check)."""
    return 0.5 * _erfc_array(np.asarray(x, dtype=float) / _SQRT2)


def _normal_pdf(x: float) -> float:
    return _INV_SQRT_2PI * math.exp(-0.5 * x * x)


def _tail_quantile_seed(p: float) -> float:
    # Abramowitz & Stegun 26.2.23 rational approximation, |error| < 4.5e-4.
    t = math.sqrt(-2.0 * math.log(p))
    num = 2.515517 + t * (0.802853 + t * 0.010328)
    den = 1.0 + t * (1.432788 + t * (0.189269 + t * 0.001308))
    return t - num / den


def q_inverse(p: float) -> float:
    """Inverse of q_function on (0, 1).

    A rational initial guess is polished with Newton steps on
    q_function(x) - p. Arguments above 1/2 are reduced to the complementary
    tail (1 - p is exact there), keeping full relative precision in the
    residual evaluation.
    """
    p = float(p)
    if not (0.0 < p < 1.0):
        raise DomainError(f"q_inverse requires 0 < p < 1, got {p!r}")
    if p == 0.5:
        return 0.0
    if p > 0.5:
        return -q_inverse(1.0 - p)
    x = _tail_quantile_seed(p)
    for _ in range(4):
        x += (q_function(x) - p) / _normal_pdf(x)
    return x


def q_inverse_array(p: np.ndarray) -> np.ndarray:
    """Vectorized q_inverse (no range check)."""
    return _SQRT2 * _erfcinv_array(2.0 * np.asarray(p, dtype=float))


class RandomSource:
    """Seeded random stream backed by the counter-based Philox generator.

    Identical seeds reproduce identical streams across runs and platforms.
    Child streams produced by :meth:`split` are statistically independent
    of each other and of the parent's subsequent output.
    """

    def __init__(self, seed: int | np.random.SeedSequence):
        if isinstance(seed, np.random.SeedSequence):
            self._seq = seed
            self.seed = int(seed.entropy) if isinstance(seed.entropy, int) else 0
        else:
            seed = int(seed)
            if not 0 <= seed < 2**64:
                raise DomainError(f"seed must be a 64-bit unsigned integer, got {seed}")
            self._seq = np.random.SeedSequence(seed)
            self.seed = seed
        self._gen = np.random.Generator(np.random.Philox(self._seq))

    def split(self, n: int) -> list["RandomSource"]:
        """Spawn n independent child sources."""
        if n < 1:
            raise DomainError(f"split requires n >= 1, got {n}")
        return [RandomSource(child) for child in self._seq.spawn(n)]

    def uniform(self, lo: float, hi: float, size=None):
        """Uniform draw(s) on [lo, hi]."""
        if not (lo <= hi):
            raise DomainError(f"uniform requires lo <= hi, got [{lo}, {hi}]")
        if lo == hi:
            return float(lo) if size is None else np.full(size, float(lo))
        out = self._gen.uniform(lo, hi, size=size)
        return float(out) if size is None else out

    def normal_pair(self) -> tuple[float, float]:
        """Two independent standard normal draws."""
        a, b = self._gen.standard_normal(2)
        return float(a), float(b)

    def std_normal(self, size) -> np.ndarray:
        return self._gen.standard_normal(size)

    def bernoulli(self, p: float, size=None):
        """Bernoulli(p) draw(s) as 0/1 integers."""
        if not (0.0 <= p <= 1.0):
            raise DomainError(f"bernoulli requires p in [0, 1], got {p}")
        out = self._gen.random(size=size) < p
        return int(out) if size is None else out.astype(np.int64)

    def random(self, size=None):
        """Uniform draw(s) on [0, 1)."""
        return self._gen.random(size=size)

    def bits(self, n: int) -> np.ndarray:
        """n independent fair bits."""
        return self._gen.integers(0, 2, size=n)

    def permutation(self, n: int) -> np.ndarray:
        return self._gen.permutation(n)
