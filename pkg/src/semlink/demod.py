"""Ternary robust demodulation.

Three routes to the same decision, kept deliberately redundant:

* exact per-bit log-likelihood ratios over the full constellation,
* a max-log approximation split per I/Q axis, and
* closed-form decision boundaries: around every per-axis label transition an
  erasure band of half-width a*d_min/2 emits the intermediate value 0.5, while
  the complement keeps the binary decision of its cell (outermost cells extend
  to infinity).

The boundary route is the production path; the LLR routes serve as oracles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .constellation import Constellation, check_order
from .errors import DomainError

TRIT_ERASURE = 0.5


def rho_from_a(a: float, order: int, snr: float) -> float:
    """LLR threshold equivalent to a boundary offset: rho = 6 snr a / (2^m - 1)."""
    m = check_order(order)
    if snr <= 0:
        raise DomainError(f"snr must be positive, got {snr}")
    if not (0.0 <= a <= 1.0):
        raise DomainError(f"boundary offset a must lie in [0, 1], got {a}")
    return 6.0 * snr * a / ((1 << m) - 1)


def a_from_rho(rho: float, order: int, snr: float) -> float:
    """Boundary offset equivalent to an LLR threshold."""
    m = check_order(order)
    if snr <= 0:
        raise DomainError(f"snr must be positive, got {snr}")
    if rho < 0:
        raise DomainError(f"rho must be nonnegative, got {rho}")
    a = rho * ((1 << m) - 1) / (6.0 * snr)
    if a > 1.0:
        raise DomainError(
            f"threshold rho={rho} implies offset a={a:.6g} > 1; "
            "the erasure band would exceed the decision cell"
        )
    return a


def _logsumexp(v: np.ndarray) -> float:
    mx = np.max(v)
    return float(mx + np.log(np.sum(np.exp(v - mx))))


def _bit_of_word(words: np.ndarray, bit: int, m: int) -> np.ndarray:
    return (words >> (m - 1 - bit)) & 1


def llr_exact(y: complex, c: Constellation, snr: float) -> np.ndarray:
    """Exact LLRs ln P(bit=0|y)/P(bit=1|y) for all m bits, uniform priors.

    Accumulated in the log domain so high-SNR evaluations do not underflow.
    """
    if snr <= 0:
        raise DomainError(f"snr must be positive, got {snr}")
    words = np.arange(c.size)
    neg_metric = -snr * np.abs(y - c.points) ** 2
    out = np.empty(c.m)
    for bit in range(c.m):
        b = _bit_of_word(words, bit, c.m)
        out[bit] = _logsumexp(neg_metric[b == 0]) - _logsumexp(neg_metric[b == 1])
    return out


def axis_bit_pattern(c: Constellation, bit: int) -> tuple[int, np.ndarray]:
    """Axis read by a bit and its value per ascending amplitude level.

    Derived by scanning the stored labels level by level; raises if the bit is
    not constant within a level (which would break per-axis demodulation).
    """
    if not 0 <= bit < c.m:
        raise DomainError(f"bit index {bit} out of range for order {c.m}")
    axis = 0 if bit < c.bits_per_axis else 1
    pattern = []
    for labels in c.labels_by_level(axis):
        vals = {int(_bit_of_word(np.int64(w), bit, c.m)) for w in labels}
        if len(vals) != 1:
            raise DomainError(f"bit {bit} is not an axis-aligned bit")
        pattern.append(vals.pop())
    return axis, np.asarray(pattern)


def llr_maxlog(y: complex, c: Constellation, snr: float, bit: int) -> float:
    """Max-log LLR of one bit using only its own axis's coordinate."""
    if snr <= 0:
        raise DomainError(f"snr must be positive, got {snr}")
    axis, pattern = axis_bit_pattern(c, bit)
    coord = y.real if axis == 0 else y.imag
    d2 = (coord - c.levels) ** 2
    return snr * (float(np.min(d2[pattern == 1])) - float(np.min(d2[pattern == 0])))


def llr_maxlog_all(y: complex, c: Constellation, snr: float) -> np.ndarray:
    return np.array([llr_maxlog(y, c, snr, bit) for bit in range(c.m)])


@dataclass(frozen=True)
class Interval:
    output: float  # 0, 0.5, or 1
    index: int     # boundary index j within the equidistant grid
    lower: float
    upper: float


@dataclass(frozen=True)
class BitRegions:
    """Decision regions of one bit along its axis."""

    bit: int
    axis: int                 # 0 = real part, 1 = imaginary part
    a: float
    d_min: float
    transitions: np.ndarray   # label-transition points, ascending
    pattern: np.ndarray       # binary value per cell; len = len(transitions) + 1
    intervals: tuple[Interval, ...]

    def index_set(self, output: float) -> tuple[int, ...]:
        return tuple(iv.index for iv in self.intervals if iv.output == output)

    def classify(self, coords: np.ndarray) -> np.ndarray:
        """Trit decision per coordinate; band-boundary hits erase to 0.5."""
        coords = np.asarray(coords, dtype=float)
        cell = np.searchsorted(self.transitions, coords, side="left")
        out = self.pattern[cell].astype(float)
        if self.a > 0 and self.transitions.size:
            half_w = self.a * self.d_min / 2.0
            lo = self.transitions - half_w
            hi = self.transitions + half_w
            idx = np.searchsorted(lo, coords, side="right") - 1
            in_band = (idx >= 0) & (coords <= hi[np.clip(idx, 0, None)])
            out[in_band] = TRIT_ERASURE
        return out


def _bit_regions(c: Constellation, bit: int, a: float) -> BitRegions:
    if not (0.0 <= a <= 1.0):
        raise DomainError(f"boundary offset a must lie in [0, 1], got {a}")
    axis, pattern = axis_bit_pattern(c, bit)
    d = c.d_min
    n_levels = pattern.size
    trans_levels = np.nonzero(pattern[:-1] != pattern[1:])[0]
    # Midpoint between levels l and l+1 is an exact integer multiple of d.
    trans_mult = trans_levels + 1 - n_levels // 2
    transitions = trans_mult * d
    half_w = a * d / 2.0

    intervals: list[Interval] = []
    if a > 0:
        for mult, t in zip(trans_mult, transitions):
            intervals.append(Interval(TRIT_ERASURE, int(mult) + 1, t - half_w, t + half_w))

    cell_pattern = np.concatenate(([pattern[0]], pattern[trans_levels + 1]))
    for k, value in enumerate(cell_pattern):
        lo = -math.inf if k == 0 else transitions[k - 1] + half_w
        hi = math.inf if k == len(transitions) else transitions[k] - half_w
        if k < len(transitions):
            j = int(trans_mult[k])
        else:
            j = int(trans_mult[k - 1]) + 2
        intervals.append(Interval(float(value), j, lo, hi))

    intervals.sort(key=lambda iv: (iv.lower, iv.upper))
    return BitRegions(
        bit=bit,
        axis=axis,
        a=float(a),
        d_min=d,
        transitions=transitions,
        pattern=cell_pattern,
        intervals=tuple(intervals),
    )


@dataclass(frozen=True)
class DecisionRegions:
    """Per-bit ternary decision regions for one constellation."""

    order: int
    d_min: float
    bits: tuple[BitRegions, ...]

    @property
    def a_offsets(self) -> np.ndarray:
        return np.array([b.a for b in self.bits])


def build_regions(c: Constellation, a_offsets) -> DecisionRegions:
    """Build ternary decision regions from per-bit erasure offsets."""
    a_offsets = np.broadcast_to(np.asarray(a_offsets, dtype=float), (c.m,))
    bits = tuple(_bit_regions(c, bit, a_offsets[bit]) for bit in range(c.m))
    return DecisionRegions(order=c.m, d_min=c.d_min, bits=bits)


def demod_robust(y: np.ndarray, regions: DecisionRegions) -> np.ndarray:
    """Demodulate equalized samples to trits {0, 0.5, 1}.

    Returns a flat sequence of order*len(y) trits, one m-bit group per symbol.
    """
    y = np.atleast_1d(np.asarray(y, dtype=complex))
    out = np.empty((y.size, regions.order))
    for br in regions.bits:
        coords = y.real if br.axis == 0 else y.imag
        out[:, br.bit] = br.classify(coords)
    return out.reshape(-1)


def demod_llr(y: np.ndarray, c: Constellation, snr: float, rho) -> np.ndarray:
    """Threshold max-log per-axis LLRs into trits.

    rho may be a scalar or a per-bit array of nonnegative thresholds; the LLR
    magnitude at or below rho erases to 0.5.
    """
    if snr <= 0:
        raise DomainError(f"snr must be positive, got {snr}")
    rho = np.broadcast_to(np.asarray(rho, dtype=float), (c.m,))
    if np.any(rho < 0):
        raise DomainError("thresholds must be nonnegative")
    y = np.atleast_1d(np.asarray(y, dtype=complex))
    out = np.empty((y.size, c.m))
    for bit in range(c.m):
        axis, pattern = axis_bit_pattern(c, bit)
        coords = y.real if axis == 0 else y.imag
        d2 = (coords[:, None] - c.levels[None, :]) ** 2
        llr = snr * (np.min(d2[:, pattern == 1], axis=1) - np.min(d2[:, pattern == 0], axis=1))
        col = np.where(llr > rho[bit], 0.0, np.where(llr < -rho[bit], 1.0, TRIT_ERASURE))
        out[:, bit] = col
    return out.reshape(-1)
