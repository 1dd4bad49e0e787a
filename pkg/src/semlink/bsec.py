"""Binary symmetric erasure channels and their link-level characterization.

A BSEC carries a bit through unchanged with probability r, erases it to 0.5
with probability d, and flips it with probability mu (mu + d + r = 1). Setting
d = 0 recovers a BSC, mu = 0 a BEC. The analytic map from (order, snr, a) to
(mu, d, r) ties the trit statistics of the boundary demodulator to closed
form, and the training-time sampler draws per-bit channel parameters from it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .constellation import check_order
from .errors import DomainError
from .numerics import RandomSource, q_function, q_function_array, q_inverse, q_inverse_array

TRIT_ERASURE = 0.5


@dataclass(frozen=True)
class BsecParams:
    """Per-bit (flip, erasure, correct) probability triple."""

    mu: float
    d: float
    r: float

    def __post_init__(self):
        for name, v in (("mu", self.mu), ("d", self.d), ("r", self.r)):
            if not (0.0 <= v <= 1.0):
                raise DomainError(f"{name}={v} outside [0, 1]")
        if abs(self.mu + self.d + self.r - 1.0) > 1e-12:
            raise DomainError(f"probabilities sum to {self.mu + self.d + self.r}, not 1")


NOISELESS = BsecParams(mu=0.0, d=0.0, r=1.0)


@dataclass(frozen=True)
class RobustnessProfile:
    """Per-bit robustness levels alpha_i and boundary offsets a_i."""

    alphas: np.ndarray
    a_offsets: np.ndarray

    def __post_init__(self):
        alphas = np.asarray(self.alphas, dtype=float)
        a_offsets = np.asarray(self.a_offsets, dtype=float)
        object.__setattr__(self, "alphas", alphas)
        object.__setattr__(self, "a_offsets", a_offsets)
        if alphas.shape != a_offsets.shape or alphas.ndim != 1:
            raise DomainError("alphas and a_offsets must be 1-D arrays of equal length")
        if np.any((alphas < 0) | (alphas > 0.5)):
            raise DomainError("robustness levels must lie in [0, 0.5]")
        if np.any((a_offsets < 0) | (a_offsets > 1)):
            raise DomainError("boundary offsets must lie in [0, 1]")

    def __len__(self) -> int:
        return self.alphas.size

    @classmethod
    def homogeneous(cls, n: int, alpha: float, a: float = 0.5) -> "RobustnessProfile":
        return cls(np.full(n, float(alpha)), np.full(n, float(a)))

    @classmethod
    def linear_ramp(cls, n: int, alpha_first: float, alpha_last: float,
                    a: float = 0.5) -> "RobustnessProfile":
        """alpha_i = (alpha_last - alpha_first) (i-1)/(n-1) + alpha_first."""
        if n < 2:
            raise DomainError("a linear ramp needs at least 2 bits")
        i = np.arange(n, dtype=float)
        alphas = (alpha_last - alpha_first) * i / (n - 1) + alpha_first
        return cls(alphas, np.full(n, float(a)))


def bsec_transition(b: int, p: BsecParams, rng: RandomSource) -> float:
    """Pass one bit through the channel; returns b, 0.5, or 1 - b."""
    if b not in (0, 1):
        raise DomainError(f"channel input must be a bit, got {b!r}")
    u = float(rng.random())
    if u < p.d:
        return TRIT_ERASURE
    if u < p.d + p.mu:
        return float(1 - b)
    return float(b)


def bsec_transition_many(bits: np.ndarray, p: BsecParams, rng: RandomSource) -> np.ndarray:
    """Vectorized channel pass over a bit array."""
    bits = np.asarray(bits, dtype=float)
    u = rng.random(bits.shape)
    return np.where(u < p.d, TRIT_ERASURE, np.where(u < p.d + p.mu, 1.0 - bits, bits))


def sample_mu(alpha: float, rng: RandomSource) -> float:
    """Draw a bit-flip probability uniformly from [0, alpha]."""
    if not (0.0 <= alpha <= 0.5):
        raise DomainError(f"robustness level must lie in [0, 0.5], got {alpha}")
    return rng.uniform(0.0, alpha)


def erasure_from_mu(mu: float) -> float:
    """Erasure probability matched to a sampled flip probability.

    d = Q(Q^-1(mu)/3) - mu, the 4-QAM relation at boundary offset 0.5; defined
    as 0 at mu = 0 by continuity.
    """
    if mu == 0.0:
        return 0.0
    if not (0.0 < mu < 0.5):
        raise DomainError(f"flip probability must lie in [0, 0.5), got {mu}")
    return q_function(q_inverse(mu) / 3.0) - mu


def erasure_from_mu_array(mu: np.ndarray) -> np.ndarray:
    """Vectorized erasure_from_mu; zero entries map to zero."""
    mu = np.asarray(mu, dtype=float)
    if np.any((mu < 0) | (mu >= 0.5)):
        raise DomainError("flip probabilities must lie in [0, 0.5)")
    out = np.zeros_like(mu)
    pos = mu > 0
    out[pos] = q_function_array(q_inverse_array(mu[pos]) / 3.0) - mu[pos]
    return out


def flip_probability(order: int, snr: float, a: float) -> float:
    """Nearest-boundary flip probability of the ternary demodulator."""
    m = check_order(order)
    if snr <= 0:
        raise DomainError(f"snr must be positive, got {snr}")
    if not (0.0 <= a <= 1.0):
        raise DomainError(f"boundary offset must lie in [0, 1], got {a}")
    pref = (4.0 / m) * (1.0 - 2.0 ** (-m / 2))
    x = math.sqrt(3.0 * snr / ((1 << m) - 1))
    return pref * q_function((1.0 + a) * x)


def analytic_params(order: int, snr: float, a: float) -> BsecParams:
    """Closed-form BSEC triple induced by (order, snr, boundary offset)."""
    m = check_order(order)
    if snr <= 0:
        raise DomainError(f"snr must be positive, got {snr}")
    if not (0.0 <= a <= 1.0):
        raise DomainError(f"boundary offset must lie in [0, 1], got {a}")
    pref = (4.0 / m) * (1.0 - 2.0 ** (-m / 2))
    x = math.sqrt(3.0 * snr / ((1 << m) - 1))
    mu = pref * q_function((1.0 + a) * x)
    d = pref * (q_function((1.0 - a) * x) - q_function((1.0 + a) * x))
    if mu + d > 1.0:
        raise DomainError(
            f"flip+erasure probability {mu + d:.6g} exceeds 1 at order={m}, "
            f"snr={snr}, a={a}; outside the approximation's validity region"
        )
    return BsecParams(mu=mu, d=d, r=1.0 - mu - d)


def sample_profile_params(profile: RobustnessProfile, rng: RandomSource) -> list[BsecParams]:
    """Independent per-bit BSEC triples: mu_i ~ U[0, alpha_i], d_i matched."""
    out = []
    for alpha in profile.alphas:
        mu = sample_mu(float(alpha), rng)
        d = erasure_from_mu(mu)
        out.append(BsecParams(mu=mu, d=d, r=1.0 - mu - d))
    return out


def sample_mu_matrix(alphas: np.ndarray, n_examples: int, rng: RandomSource) -> np.ndarray:
    """(n_examples, n_bits) flip probabilities, independent across both axes."""
    alphas = np.asarray(alphas, dtype=float)
    return rng.random((n_examples, alphas.size)) * alphas[None, :]
