"""Square Gray-coded QAM constellations with unit average energy.

Bit convention for an order-m constellation (m even): the first m/2 bits of a
label select the real-axis amplitude, the last m/2 bits the imaginary-axis
amplitude. Each axis uses reflected Gray coding with the all-zeros word at the
most negative amplitude, so adjacent amplitude levels differ in exactly one of
that axis's bits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import ConfigError, DomainError

SUPPORTED_ORDERS = (2, 4, 6)


def check_order(m: int) -> int:
    m = int(m)
    if m not in SUPPORTED_ORDERS:
        raise ConfigError(f"unsupported modulation order {m}; expected one of {SUPPORTED_ORDERS}")
    return m


def gray_code(n_bits: int) -> np.ndarray:
    """Reflected Gray sequence for n_bits-bit words."""
    i = np.arange(1 << n_bits)
    return i ^ (i >> 1)


@dataclass(frozen=True)
class Constellation:
    """Immutable 2^m-QAM constellation.

    points[w] is the complex symbol whose m-bit label, read MSB first, equals
    the integer w. d_min is the minimum inter-point distance sqrt(6/(2^m-1))
    implied by unit average energy. Coordinates are odd multiples of d_min/2;
    the integer multiples are kept alongside so that distance ties resolve
    exactly.
    """

    m: int
    points: np.ndarray
    d_min: float
    _int_re: np.ndarray = field(repr=False, default=None)
    _int_im: np.ndarray = field(repr=False, default=None)
    _lex_order: np.ndarray = field(repr=False, default=None)

    @property
    def size(self) -> int:
        return 1 << self.m

    @property
    def bits_per_axis(self) -> int:
        return self.m // 2

    @property
    def levels(self) -> np.ndarray:
        """Per-axis amplitudes in ascending order."""
        n_levels = 1 << self.bits_per_axis
        return (2 * np.arange(n_levels) - (n_levels - 1)) * (self.d_min / 2)

    def labels_by_level(self, axis: int) -> list[list[int]]:
        """Labels of all points grouped by ascending amplitude on an axis.

        axis 0 scans the real part, axis 1 the imaginary part. Groups are
        formed by matching point coordinates against the level grid, so the
        result reflects the stored points rather than the construction rule.
        """
        coords = self.points.real if axis == 0 else self.points.imag
        levels = self.levels
        groups: list[list[int]] = []
        for amp in levels:
            members = np.nonzero(np.abs(coords - amp) < self.d_min / 4)[0]
            groups.append([int(w) for w in members])
        return groups


def _label_int(bits) -> int:
    word = 0
    for b in bits:
        word = (word << 1) | int(b)
    return word


@lru_cache(maxsize=None)
def build_constellation(order: int) -> Constellation:
    """Construct the Gray-labeled unit-energy square QAM constellation."""
    m = check_order(order)
    half = m // 2
    n_levels = 1 << half
    d = math.sqrt(6.0 / ((1 << m) - 1))
    amp = (2 * np.arange(n_levels) - (n_levels - 1)) * (d / 2)
    gray = gray_code(half)

    int_axis = 2 * np.arange(n_levels) - (n_levels - 1)
    points = np.empty(1 << m, dtype=complex)
    int_re = np.empty(1 << m)
    int_im = np.empty(1 << m)
    for li in range(n_levels):
        for lq in range(n_levels):
            w = (int(gray[li]) << half) | int(gray[lq])
            points[w] = amp[li] + 1j * amp[lq]
            int_re[w] = int_axis[li]
            int_im[w] = int_axis[lq]
    for arr in (points, int_re, int_im):
        arr.setflags(write=False)

    order_idx = np.lexsort((int_im, int_re))
    order_idx.setflags(write=False)
    return Constellation(m=m, points=points, d_min=d,
                         _int_re=int_re, _int_im=int_im, _lex_order=order_idx)


def map_bits(bits, c: Constellation) -> complex:
    """Map an m-bit word to its constellation point."""
    bits = np.asarray(bits)
    if bits.shape != (c.m,):
        raise DomainError(f"expected a word of {c.m} bits, got shape {bits.shape}")
    return complex(c.points[_label_int(bits)])


def map_words(words: np.ndarray, c: Constellation) -> np.ndarray:
    """Map integer labels (MSB-first bit words) to symbols."""
    return c.points[np.asarray(words)]


def pack_bits(bits: np.ndarray, m: int) -> np.ndarray:
    """Group a flat bit array into integer m-bit words, MSB first."""
    bits = np.asarray(bits)
    if bits.size % m != 0:
        raise DomainError(f"bit count {bits.size} is not a multiple of {m}")
    weights = 1 << np.arange(m - 1, -1, -1)
    return bits.reshape(-1, m).astype(np.int64) @ weights


def unpack_words(words: np.ndarray, m: int) -> np.ndarray:
    """Inverse of pack_bits; returns a flat bit array."""
    words = np.asarray(words, dtype=np.int64)
    shifts = np.arange(m - 1, -1, -1)
    return ((words[:, None] >> shifts) & 1).reshape(-1)


def nearest_point(z: complex, c: Constellation) -> complex:
    """Closest constellation point to z.

    Distance ties resolve to the point with the smaller real part, then the
    smaller imaginary part. Distances are evaluated on the integer half-grid
    so that mathematically equal ones compare equal.
    """
    return complex(c.points[nearest_words(np.array([z]), c)[0]])


def nearest_words(z: np.ndarray, c: Constellation) -> np.ndarray:
    """Vectorized hard decision: label of the nearest point per sample.

    Ties follow the same lexicographic rule as nearest_point.
    """
    z = np.asarray(z, dtype=complex)
    half_d = c.d_min / 2
    zr = (z.real / half_d)[:, None]
    zi = (z.imag / half_d)[:, None]
    re = c._int_re[c._lex_order][None, :]
    im = c._int_im[c._lex_order][None, :]
    d2 = (zr - re) ** 2 + (zi - im) ** 2
    return c._lex_order[np.argmin(d2, axis=1)]


def demap_symbol(point: complex, c: Constellation) -> np.ndarray:
    """Recover the m-bit word of a (near-exact) constellation point."""
    word = int(nearest_words(np.array([point]), c)[0])
    best = complex(c.points[word])
    if abs(point - best) > 1e-9:
        raise DomainError(f"{point!r} is not a constellation point (nearest {best!r})")
    return unpack_words(np.array([word]), c.m)
