"""Ternary demodulation: LLR routes, boundary tables, and their equivalence."""

import math

import numpy as np
import pytest

from semlink.constellation import (
    SUPPORTED_ORDERS,
    build_constellation,
    nearest_words,
    unpack_words,
)
from semlink.demod import (
    a_from_rho,
    build_regions,
    demod_llr,
    demod_robust,
    llr_exact,
    llr_maxlog,
    llr_maxlog_all,
    rho_from_a,
)
from semlink.errors import DomainError
from semlink.numerics import RandomSource

A_GRID = (0.0, 0.25, 0.5, 1.0)


def random_samples(n, seed, spread=1.4):
    rng = RandomSource(seed)
    return spread * (rng.std_normal(n) + 1j * rng.std_normal(n))


class TestThresholdOffsetMap:
    def test_anchor_half(self):
        for snr in (0.1, 1.0, 10.0):
            assert a_from_rho(snr, 2, snr) == 0.5

    def test_zero(self):
        assert a_from_rho(0.0, 4, 3.0) == 0.0

    def test_direct_substitution(self):
        assert a_from_rho(0.4, 4, 1.0) == pytest.approx(1.0, abs=1e-12)

    def test_rho_a_inverse(self):
        for m in SUPPORTED_ORDERS:
            for a in (0.1, 0.5, 0.9):
                assert a_from_rho(rho_from_a(a, m, 2.7), m, 2.7) == pytest.approx(a, abs=1e-14)

    def test_too_large(self):
        with pytest.raises(DomainError):
            a_from_rho(0.401, 4, 0.1)

    def test_invalid_inputs(self):
        with pytest.raises(DomainError):
            a_from_rho(-0.1, 2, 1.0)
        with pytest.raises(DomainError):
            a_from_rho(1.0, 2, 0.0)
        with pytest.raises(DomainError):
            rho_from_a(1.2, 2, 1.0)


class TestExactLlr:
    def test_origin_symmetry_order2(self):
        np.testing.assert_allclose(llr_exact(0j, build_constellation(2), 1.0), 0.0, atol=1e-12)

    def test_two_term_hand_value(self):
        # order 2, snr 1, y = 0.5: the real-axis bit LLR is -2 * 0.5 * sqrt(2)
        c = build_constellation(2)
        llrs = llr_exact(0.5 + 0j, c, 1.0)
        assert llrs[0] == pytest.approx(-math.sqrt(2), abs=1e-12)
        assert llrs[1] == pytest.approx(0.0, abs=1e-12)

    def test_sign_flip_under_reflection(self):
        c = build_constellation(4)
        for z in random_samples(50, 2):
            plus = llr_exact(z, c, 2.0)
            refl_re = llr_exact(complex(-z.real, z.imag), c, 2.0)
            refl_im = llr_exact(complex(z.real, -z.imag), c, 2.0)
            # sign bits (MSB per axis) flip under reflection across their axis
            assert plus[0] == pytest.approx(-refl_re[0], rel=1e-9)
            assert plus[2] == pytest.approx(-refl_im[2], rel=1e-9)

    def test_no_underflow_at_high_snr(self):
        c = build_constellation(6)
        llrs = llr_exact(1.5 + 0.7j, c, 1e6)
        assert np.all(np.isfinite(llrs))


class TestMaxLogLlr:
    def test_order2_equals_exact(self):
        c = build_constellation(2)
        for z in random_samples(200, 3):
            np.testing.assert_allclose(
                llr_maxlog_all(z, c, 1.7), llr_exact(z, c, 1.7), atol=1e-10
            )

    def test_close_to_exact_at_high_snr(self):
        # worst case is a same-class midpoint: a log(2) correction against
        # |LLR| ~ 0.8 * snr, i.e. ~0.087 at snr 10; the bulk sits far lower
        c = build_constellation(4)
        rels = []
        for z in random_samples(100, 4):
            exact = llr_exact(z, c, 10.0)
            approx = llr_maxlog_all(z, c, 10.0)
            rels.append(np.abs(approx - exact) / np.maximum(1.0, np.abs(exact)))
        rels = np.concatenate(rels)
        assert np.all(rels <= 0.09)
        assert np.quantile(rels, 0.95) <= 0.05

    def test_real_bits_ignore_imaginary_part(self):
        c = build_constellation(4)
        for z in random_samples(50, 5):
            a = llr_maxlog(z, c, 3.0, 0)
            b = llr_maxlog(complex(z.real, z.imag + 2.5), c, 3.0, 0)
            assert a == pytest.approx(b, abs=1e-12)


class TestRegions:
    def test_fig_bit2_order4_intervals(self):
        c = build_constellation(4)
        br = build_regions(c, 0.5).bits[1]
        d = c.d_min
        assert br.index_set(0.0) == (-1, 3)
        assert br.index_set(1.0) == (1,)
        assert br.index_set(0.5) == (0, 2)
        table = {(iv.output, iv.index): (iv.lower, iv.upper) for iv in br.intervals}
        assert table[(0.5, 0)] == pytest.approx((-1.25 * d, -0.75 * d), abs=1e-12)
        assert table[(0.5, 2)] == pytest.approx((0.75 * d, 1.25 * d), abs=1e-12)
        assert table[(1.0, 1)] == pytest.approx((-0.75 * d, 0.75 * d), abs=1e-12)
        assert table[(0.0, -1)][0] == -math.inf
        assert table[(0.0, -1)][1] == pytest.approx(-1.25 * d, abs=1e-12)
        assert table[(0.0, 3)][1] == math.inf

    def test_order2_single_band(self):
        c = build_constellation(2)
        for br in build_regions(c, 0.5).bits:
            bands = [iv for iv in br.intervals if iv.output == 0.5]
            assert len(bands) == 1
            assert bands[0].lower == pytest.approx(-0.35355, abs=1e-5)
            assert bands[0].upper == pytest.approx(0.35355, abs=1e-5)

    def test_zero_offset_has_no_bands(self):
        for m in SUPPORTED_ORDERS:
            regions = build_regions(build_constellation(m), 0.0)
            for br in regions.bits:
                assert all(iv.output != 0.5 for iv in br.intervals)

    @pytest.mark.parametrize("m", SUPPORTED_ORDERS)
    @pytest.mark.parametrize("a", A_GRID)
    def test_partition_covers_line_once(self, m, a):
        regions = build_regions(build_constellation(m), a)
        rng = RandomSource(6)
        points = 3.0 * rng.std_normal(2000)
        for br in regions.bits:
            for u in points:
                claims = [
                    iv for iv in br.intervals if iv.lower <= u <= iv.upper
                ]
                assert len(claims) == 1, f"point {u} claimed by {len(claims)} regions"

    def test_per_bit_offsets(self):
        c = build_constellation(4)
        regions = build_regions(c, [0.0, 0.5, 0.25, 1.0])
        assert [br.a for br in regions.bits] == [0.0, 0.5, 0.25, 1.0]

    def test_offset_out_of_range(self):
        with pytest.raises(DomainError):
            build_regions(build_constellation(2), 1.2)


class TestDemodRobust:
    def test_fig_points_order4(self):
        c = build_constellation(4)
        regions = build_regions(c, 0.5)
        d = c.d_min
        trits = demod_robust(np.array([0j, d + 0j, 2 * d + 0j]), regions).reshape(3, 4)
        assert trits[0, 1] == 1.0
        assert trits[1, 1] == 0.5
        assert trits[2, 1] == 0.0

    def test_band_boundary_resolves_to_erasure(self):
        c = build_constellation(4)
        regions = build_regions(c, 0.5)
        br = regions.bits[1]
        edge = [iv for iv in br.intervals if iv.output == 0.5][1].upper
        trits = demod_robust(np.array([complex(edge, 0.0)]), regions).reshape(1, 4)
        assert trits[0, 1] == 0.5

    @pytest.mark.parametrize("m", SUPPORTED_ORDERS)
    def test_zero_offset_matches_hard_decision(self, m):
        c = build_constellation(m)
        y = random_samples(5000, 7)
        trits = demod_robust(y, build_regions(c, 0.0))
        assert not np.any(trits == 0.5)
        hard = unpack_words(nearest_words(y, c), m)
        np.testing.assert_array_equal(trits, hard.astype(float))

    @pytest.mark.parametrize("m", SUPPORTED_ORDERS)
    @pytest.mark.parametrize("a", A_GRID)
    def test_equivalent_to_llr_threshold(self, m, a):
        c = build_constellation(m)
        snr = 1.9
        y = random_samples(20000, 8)
        by_regions = demod_robust(y, build_regions(c, a))
        by_llr = demod_llr(y, c, snr, rho_from_a(a, m, snr))
        np.testing.assert_array_equal(by_regions, by_llr)

    def test_llr_rho_zero_is_hard_decision(self):
        c = build_constellation(4)
        y = random_samples(2000, 9)
        trits = demod_llr(y, c, 1.0, 0.0)
        hard = unpack_words(nearest_words(y, c), 4)
        np.testing.assert_array_equal(trits, hard.astype(float))

    @pytest.mark.parametrize("m", SUPPORTED_ORDERS)
    def test_monotone_in_offset(self, m):
        # growing the band may only turn binary decisions into erasures
        c = build_constellation(m)
        y = random_samples(4000, 10)
        prev = demod_robust(y, build_regions(c, 0.0))
        for a in (0.25, 0.5, 1.0):
            cur = demod_robust(y, build_regions(c, a))
            both_binary = (cur != 0.5) & (prev != 0.5)
            np.testing.assert_array_equal(cur[both_binary], prev[both_binary])
            # erasures never revert to binary as a grows
            assert not np.any((prev == 0.5) & (cur != 0.5))
            prev = cur
