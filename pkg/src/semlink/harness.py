"""End-to-end pipelines: link Monte Carlo, full-system evaluation, statistics."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .adaptmod import (
    BetaAdjusters,
    ModPlan,
    fixed_plan,
    plan_from_thresholds,
    threshold_table,
)
from .bsec import BsecParams, RobustnessProfile, analytic_params, bsec_transition_many
from .channel import (
    ChannelDistribution,
    ChannelRealization,
    FixedSnr,
    draw_channel,
    equalize,
    transmit,
)
from .constellation import build_constellation, pack_bits
from .demod import DecisionRegions, build_regions, demod_robust
from .errors import ConfigError, DomainError
from .jscc import ModelTriple, sample_latent_bits
from .numerics import RandomSource

TRIT_ERASURE = 0.5


@dataclass(frozen=True)
class LinkStats:
    """Trit statistics of one link simulation."""

    n_bits: int
    flips: int
    erasures: int
    corrects: int

    @property
    def flip_rate(self) -> float:
        return self.flips / self.n_bits

    @property
    def erasure_rate(self) -> float:
        return self.erasures / self.n_bits

    @property
    def correct_rate(self) -> float:
        return self.corrects / self.n_bits

    def empirical_params(self) -> BsecParams:
        return BsecParams(mu=self.flip_rate, d=self.erasure_rate, r=self.correct_rate)


def _count_trits(bits: np.ndarray, trits: np.ndarray) -> LinkStats:
    bits = np.asarray(bits, dtype=np.float64)
    erasures = int(np.sum(trits == TRIT_ERASURE))
    corrects = int(np.sum(trits == bits))
    flips = bits.size - erasures - corrects
    return LinkStats(n_bits=bits.size, flips=flips, erasures=erasures, corrects=corrects)


def run_link_montecarlo(order: int, snr_db: float, a: float, n_bits: int,
                        rng: RandomSource) -> LinkStats:
    """Random bits through map -> fade -> equalize -> ternary demodulation.

    n_bits is rounded up to a whole number of symbols.
    """
    if n_bits < 1:
        raise DomainError("n_bits must be positive")
    c = build_constellation(order)
    snr = 10.0 ** (snr_db / 10.0)
    n_sym = -(-n_bits // c.m)
    bit_rng, ch_rng, noise_rng = rng.split(3)
    bits = bit_rng.bits(n_sym * c.m)
    x = c.points[pack_bits(bits, c.m)]
    ch = draw_channel(FixedSnr(snr=snr, noise_var=1.0), ch_rng)
    y_eq = equalize(transmit(x, ch, noise_rng), ch.h)
    trits = demod_robust(y_eq, build_regions(c, a))
    return _count_trits(bits, trits)


def transport_block(bits: np.ndarray, plan: ModPlan, a_offsets: np.ndarray,
                    ch: ChannelRealization, rng: RandomSource) -> tuple[np.ndarray, int]:
    """Carry a (block, n_bits) bit matrix over one channel realization.

    Bits are packed per plan group, padded with zeros, modulated with the
    group's constellation, faded, equalized, and demodulated with each bit's
    own erasure offset; padding is stripped by position on return. Returns the
    trit matrix and the symbol count per block row.
    """
    bits = np.atleast_2d(np.asarray(bits, dtype=np.int64))
    n_rows, n_bits = bits.shape
    if n_bits != len(plan.orders):
        raise ConfigError(f"plan covers {len(plan.orders)} bits, not {n_bits}")
    out = np.empty((n_rows, n_bits))
    for order, group_idxs in plan.groups:
        idxs = np.asarray(group_idxs)
        c = build_constellation(order)
        group = bits[:, idxs]
        pad = (-group.shape[1]) % order
        padded = np.concatenate(
            [group, np.zeros((n_rows, pad), dtype=np.int64)], axis=1
        )
        words = pack_bits(padded.reshape(-1), order)
        y_eq = equalize(transmit(c.points[words], ch, rng), ch.h)
        word_grid = y_eq.reshape(n_rows, -1)

        # per word slot, demodulate with the owning bit's erasure offset
        n_words = word_grid.shape[1]
        a_flat = np.full(n_words * order, float(a_offsets[idxs[0]]))
        a_flat[: idxs.size] = a_offsets[idxs]
        a_slots = a_flat.reshape(n_words, order)
        trit_grid = np.empty((n_rows, n_words * order))
        for col in range(order):
            for a_val in np.unique(a_slots[:, col]):
                sel = np.nonzero(a_slots[:, col] == a_val)[0]
                br = _regions_cache(order, float(a_val)).bits[col]
                coords = word_grid[:, sel].real if br.axis == 0 else word_grid[:, sel].imag
                trit_grid[:, sel * order + col] = br.classify(coords)
        out[:, idxs] = trit_grid[:, : idxs.size]
    return out, plan.symbol_count


_REGIONS_CACHE: dict[tuple[int, float], DecisionRegions] = {}


def _regions_cache(order: int, a: float) -> DecisionRegions:
    key = (order, a)
    if key not in _REGIONS_CACHE:
        _REGIONS_CACHE[key] = build_regions(build_constellation(order), a)
    return _REGIONS_CACHE[key]


@dataclass
class RunRecord:
    """One CLI invocation's configuration snapshot and sweep metrics."""

    config: dict
    seed: int
    rows: list[dict] = field(default_factory=list)
    created_at: float = field(default_factory=time.time)


def run_end_to_end(models: ModelTriple, channel_dist: ChannelDistribution,
                   profile: RobustnessProfile, betas: BetaAdjusters,
                   adaptive: bool, dataset, rng: RandomSource,
                   images_per_block: int = 10, fixed_order: int = 2) -> dict:
    """Full inference pass: encode, modulate, fade, demodulate, decode, classify.

    The channel is redrawn every images_per_block images. With adaptive=False
    all bits ride fixed_order symbols. Returns aggregate metrics including the
    session spectral efficiency (total bits / total symbols) and the empirical
    bit bias of the encoder output.
    """
    n_bits = len(profile)
    if models.encoder.out_dim != n_bits:
        raise ConfigError(
            f"encoder emits {models.encoder.out_dim} bits, profile has {n_bits}"
        )
    x = np.asarray(dataset.features, dtype=np.float64)
    y = np.asarray(dataset.labels, dtype=np.int64)
    table = threshold_table(profile, betas) if adaptive else None
    static_plan = None if adaptive else fixed_plan(n_bits, fixed_order)
    ch_rng, bit_rng, noise_rng = rng.split(3)

    correct = 0
    sq_err_sum = 0.0
    total_symbols = 0
    bit_sum = 0
    flips = erasures = 0
    for start in range(0, len(x), images_per_block):
        xb = x[start:start + images_per_block]
        yb = y[start:start + images_per_block]
        ch = draw_channel(channel_dist, ch_rng)
        plan = plan_from_thresholds(ch.snr, table) if adaptive else static_plan
        f = models.encoder.forward(xb)
        bits = sample_latent_bits(f, bit_rng).astype(np.int64)
        trits, symbols_per_image = transport_block(
            bits, plan, profile.a_offsets, ch, noise_rng
        )
        total_symbols += symbols_per_image * len(xb)
        bit_sum += int(bits.sum())
        erasures += int(np.sum(trits == TRIT_ERASURE))
        flips += int(np.sum(trits == 1 - bits))
        u_hat = models.decoder.forward(trits)
        logits = models.classifier.forward(u_hat)
        correct += int(np.sum(np.argmax(logits, axis=1) == yb))
        sq_err_sum += float(np.sum((u_hat - xb) ** 2))

    n = len(x)
    total_bits = n * n_bits
    return {
        "n_images": n,
        "accuracy": correct / n,
        "mse": sq_err_sum / n,
        "spectral_efficiency": total_bits / total_symbols,
        "flip_rate": flips / total_bits,
        "erasure_rate": erasures / total_bits,
        "bit_bias": bit_sum / total_bits,
    }


def mean_adaptive_se(channel_dist: ChannelDistribution, profile: RobustnessProfile,
                     betas: BetaAdjusters, n_draws: int, rng: RandomSource) -> float:
    """Session spectral efficiency over random channel draws (bits/symbols)."""
    table = threshold_table(profile, betas)
    n_bits = len(profile)
    total_symbols = 0
    for _ in range(n_draws):
        ch = draw_channel(channel_dist, rng)
        total_symbols += plan_from_thresholds(ch.snr, table).symbol_count
    return n_bits * n_draws / total_symbols


def trit_histogram_link(snr: float, a: float, n_bits: int, rng: RandomSource,
                        order: int = 2) -> np.ndarray:
    """(flips, erasures, corrects) counts from the physical link chain."""
    stats = run_link_montecarlo(order, 10.0 * math.log10(snr), a, n_bits, rng)
    return np.array([stats.flips, stats.erasures, stats.corrects])


def trit_histogram_bsec(snr: float, a: float, n_bits: int, rng: RandomSource,
                        order: int = 2) -> np.ndarray:
    """(flips, erasures, corrects) counts from the sampled stochastic model."""
    params = analytic_params(order, snr, a)
    bit_rng, ch_rng = rng.split(2)
    bits = bit_rng.bits(n_bits)
    trits = bsec_transition_many(bits, params, ch_rng)
    erasures = int(np.sum(trits == TRIT_ERASURE))
    corrects = int(np.sum(trits == bits))
    return np.array([n_bits - erasures - corrects, erasures, corrects])


def chi_square_homogeneity(counts_a: np.ndarray, counts_b: np.ndarray) -> tuple[float, float]:
    """Pearson chi-square for two trit histograms; returns (statistic, p).

    Both histograms have 3 categories, so the statistic has 2 degrees of
    freedom and the survival function is exp(-x/2).
    """
    table = np.vstack([counts_a, counts_b]).astype(np.float64)
    if table.shape != (2, 3) or np.any(table < 0):
        raise DomainError("expected two nonnegative 3-category histograms")
    col = table.sum(axis=0)
    row = table.sum(axis=1)
    total = table.sum()
    expected = np.outer(row, col) / total
    if np.any(expected == 0):
        raise DomainError("a category has zero expected count; test undefined")
    stat = float(np.sum((table - expected) ** 2 / expected))
    return stat, math.exp(-stat / 2.0)
