"""Replicate means, standard errors and the three-valued sandwich verdict."""

import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from fk_lab.errors import NonFiniteReplicateError
from fk_lab.verify.stats import (CONSTANT_DISPUTED, FAIL, INCONCLUSIVE, PASS, SKIPPED, Estimate,
                                 MomentAccumulator, check_sandwich, count_verdicts, mean_of_values,
                                 replicate_mean, sandwich_verdict, skipped, z_value)


class _Fixed:
    names = ("a", "b")

    def __init__(self, values, batch_size):
        self.values, self.batch_size = values, batch_size

    def evaluate(self, seed, ids):
        return self.values[ids]


class TestEstimates:
    def test_two_values(self):
        est = mean_of_values("x", [1.0, 3.0])
        assert est.point == 2.0 and est.std_error == pytest.approx(1.0)

    def test_constant_has_zero_error(self):
        assert mean_of_values("x", np.full(10, 0.7)).std_error == 0.0

    def test_non_finite_aborts_with_replicate_id(self):
        with pytest.raises(NonFiniteReplicateError) as exc:
            mean_of_values("x", [1.0, 2.0, np.inf, 4.0])
        assert exc.value.replicate_id == 2

    def test_needs_two_replicates(self):
        with pytest.raises(ValueError):
            replicate_mean(_Fixed(np.ones((1, 2)), 1), 1, 0)

    @given(st.integers(1, 50))
    def test_batch_size_independence(self, batch):
        vals = np.random.default_rng(3).normal(size=(97, 2))
        ref = replicate_mean(_Fixed(vals, 97), 97, 0)
        got = replicate_mean(_Fixed(vals, batch), 97, 0)
        for a, b in zip(ref, got):
            assert abs(a.point - b.point) <= 1e-12
            assert abs(a.std_error - b.std_error) <= 1e-12
        assert ref[0].point == pytest.approx(vals[:, 0].mean(), abs=1e-14)
        assert ref[0].std_error == pytest.approx(vals[:, 0].std(ddof=1) / math.sqrt(97), rel=1e-12)

    def test_merging_matches_numpy(self):
        vals = np.random.default_rng(0).random(1000)
        acc = MomentAccumulator(1)
        for chunk in np.array_split(vals, 7):
            acc.add(chunk)
        assert acc.m2[0] / 999 == pytest.approx(vals.var(ddof=1), rel=1e-12)

    def test_interval(self):
        est = Estimate("x", 1.0, 0.1, 100, ci_level=0.95)
        assert est.ci[0] == pytest.approx(1.0 - 1.959964 * 0.1, rel=1e-6)
        assert est.scaled(-2.0).std_error == pytest.approx(0.2)
        with pytest.raises(ValueError):
            z_value(1.0)
        with pytest.raises(ValueError):
            Estimate("x", 0.0, -1.0, 2)


class TestVerdicts:
    @pytest.mark.parametrize("point, hw, lo, hi, verdict", [
        (0.5, 0.1, 0.0, 1.0, PASS),             # inside
        (2.0, 0.1, 0.0, 1.0, FAIL),             # disjoint above
        (-1.0, 0.1, 0.0, 1.0, FAIL),            # disjoint below
        (0.95, 0.1, 0.0, 1.0, INCONCLUSIVE),    # straddles the upper edge
        (0.0, 0.1, 0.0, 0.0, PASS),             # zero-width bounds covered by the CI
        (0.5, 2.0, 0.0, 1.0, PASS),             # bounds inside the CI
        (1.0, 0.0, 1.0, 1.0, PASS),
        (5.0, 1.0, 0.0, math.inf, PASS),        # one-sided
    ])
    def test_rules(self, point, hw, lo, hi, verdict):
        assert sandwich_verdict(point, hw, lo, hi) == verdict

    def test_slack(self):
        assert sandwich_verdict(1.0 + 1e-10, 0.0, 0.0, 1.0) == FAIL
        assert sandwich_verdict(1.0 + 1e-10, 0.0, 0.0, 1.0, slack=1e-9) == PASS

    def test_invalid(self):
        with pytest.raises(ValueError):
            sandwich_verdict(float("nan"), 0.0, 0.0, 1.0)
        with pytest.raises(ValueError):
            sandwich_verdict(0.0, 0.0, 1.0, 0.0)

    def test_exact_checks_use_exact_slack(self):
        r = check_sandwich(Estimate.exact("e", 1.0 + 5e-10), 0.0, 1.0, "e", {"model": "m"})
        assert r.verdict == PASS and r.row()["model"] == "m"

    def test_counts_and_rows(self):
        reports = [check_sandwich(Estimate.exact("a", 0.5), 0, 1), skipped("b", 0, 1, note="below threshold")]
        counts = count_verdicts(reports)
        assert counts[PASS] == 1 and counts[SKIPPED] == 1 and counts[CONSTANT_DISPUTED] == 0
        assert reports[1].row()["estimate"] == ""
