"""Bound constants and thresholds as functions of the ratio constant."""

import math

import pytest
from hypothesis import given, strategies as st

from fk_lab.verify import constants as C

rhos = st.floats(1.0, 4.0)


class TestBiasConstants:
    def test_no_selection(self):
        assert C.bias_constants(1.0) == (0.0, 0.0)
        assert C.bias_threshold(1.0, 8) == 0.0

    def test_values_for_the_mixing_corpus_model(self):
        c1, c2 = C.bias_constants(1.353117382)
        assert c1 == pytest.approx(0.830927, rel=1e-5)
        assert c2 == pytest.approx(2 * c1 * (2 * c1 * (c1 + 1) + 1), rel=1e-14)
        assert C.bias_threshold(1.353117382, 8) == pytest.approx(8 * c2)

    @given(rhos, rhos)
    def test_monotone_in_rho(self, a, b):
        lo, hi = sorted((a, b))
        assert C.bias_constants(lo)[1] <= C.bias_constants(hi)[1]
        assert C.pg_minorization_constant(lo) <= C.pg_minorization_constant(hi)


class TestFrozenConstants:
    @given(rhos, st.integers(1, 6))
    def test_ones_bounds_nest_above_threshold(self, rho, n):
        N = 3 * n * rho
        lo, hi, outer_lo, outer_hi = C.frozen_ones_bounds(rho, n, N)
        assert outer_lo <= lo + 1e-12 and hi <= outer_hi + 1e-12

    def test_step_bounds(self):
        assert C.frozen_step_bounds(2, 1.0, 10) == (0.8, 0.4)
        assert C.frozen_step_threshold(2, 1.5) == pytest.approx(9.0)

    def test_oscillation(self):
        assert C.oscillation_constant(1.0) == 18.0


class TestTensorConstants:
    def test_tensor_ratio(self):
        c1, c2 = C.tensor_ratio_constants(0.5, 2)
        assert c1 == 4.0 and c2 == pytest.approx(2 * 4.0 * (1 + 2 * 0.5 * 1.5))
        assert C.tensor_ratio_threshold(0.1, 3) == 18.0

    def test_chaos_threshold_dominates_its_parts(self):
        thr = C.chaos_threshold(2, 1.3, 0.4, 2)
        assert thr >= C.chaos_constant(2, 1.3, 0.4) * 2
        assert C.chaos_tensor_constant(2, 0.4) < C.chaos_constant(2, 1.3, 0.4)


class TestParticleGibbsConstants:
    def test_values(self):
        c1, _ = C.pg_forward_constants(1.0)
        assert c1 == 1.5
        assert C.pg_backward_constant(1.0) == 3.5
        assert C.pg_minorization_constant(1.0) == max(1.5 + 6.0, 5.5)
        assert C.pg_threshold(1.0, 4) == 30.0

    def test_factors_converge_to_one(self):
        lo, hi = C.pg_forward_factors(1.3, 4, 10**9)
        assert lo == pytest.approx(1.0, abs=1e-6) and hi == pytest.approx(1.0, abs=1e-6)

    def test_crude_minorisation_and_rate(self):
        eps = C.crude_minorization(0.5, 2, 2)
        assert eps == pytest.approx(0.0625)
        assert C.contraction_rate_bound(eps) == pytest.approx(0.9375)
        assert math.isclose(C.crude_minorization(1.0, 3, 10**12), 1.0)
