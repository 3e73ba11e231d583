"""Experiment drivers at small replicate counts: plumbing, report fields and statistical power."""

import numpy as np
import pytest

from fk_lab.verify.corpus import mixing_model, unit_model
from fk_lab.verify.experiments import (SUITES, bias_scaling_reports, chaos_thresholds, path_functions,
                                       run_bound_experiment, bias_experiment, tv_distance)
from fk_lab.verify.stats import CONSTANT_DISPUTED, FAIL, PASS, SKIPPED, VERDICTS, Estimate


def _ids(reports):
    return {r.inequality_id for r in reports}


class TestHelpers:
    def test_path_functions(self, mixing3):
        funcs = path_functions(mixing3)
        assert {"x0=0", "x3=1", "sum0", "sum0_centred"} <= set(funcs)
        assert funcs["x0=0"].shape == (16,)

    def test_tv_distance(self):
        assert tv_distance([1.0, 0.0], [0.5, 0.5]) == pytest.approx(0.5)
        assert tv_distance([0.2, 0.3, 0.5], [0.2, 0.3, 0.5]) == 0.0

    def test_chaos_thresholds_increase_with_q(self):
        model = mixing_model(2)
        assert chaos_thresholds(model, 3) > chaos_thresholds(model, 2)

    def test_unknown_suite(self):
        with pytest.raises(ValueError):
            run_bound_experiment("nope", mixing_model(2))
        with pytest.raises(ValueError):
            run_bound_experiment("oracle", None)


class TestSmallRuns:
    @pytest.mark.parametrize("kind, model, params, expected", [
        ("unbiasedness", unit_model(2), {"N": 10}, {"U.f12"}),
        ("bias", mixing_model(2), {"N_values": (40,)}, {"T1.f11"}),
        ("backward", mixing_model(2), {"N": 10}, {"T1.bwd_anc"}),
        ("chaos", mixing_model(1), {"q_values": (2,), "N_values": (30,)}, {"C.f16", "C.f17"}),
        ("pg_kernels", mixing_model(1), {"N_values": (40,)}, {"T2.f21"}),
        ("invariance", mixing_model(2), {"N": 10}, {"T2.invariance"}),
        ("contraction", mixing_model(2), {"N": 10, "steps": 3}, {"T2.f14.decay"}),
        ("dual_chaos", mixing_model(1), {"N_values": (30,)}, {"D.poc"}),
        ("transfer", mixing_model(2), {}, {"H.f7"}),
        ("dual_identity", mixing_model(1), {}, {"D.f28"}),
    ])
    def test_reports_are_well_formed(self, kind, model, params, expected):
        reports = run_bound_experiment(kind, model, {"R": 400, "seed": 3, "name": "m", **params})
        assert expected <= _ids(reports)
        for r in reports:
            assert r.verdict in VERDICTS
            row = r.row()
            assert row["model"].split(":")[0] == "m" and set(row) >= {"lower", "upper", "estimate", "stderr"}
            if r.verdict != SKIPPED:
                assert r.lower <= r.upper

    def test_every_suite_is_dispatchable(self):
        assert set(SUITES) >= {"lemmas", "bias", "pg_kernels", "negative_control", "dual_chaos"}

    def test_fixed_seed_is_reproducible(self):
        a = run_bound_experiment("unbiasedness", mixing_model(2), {"R": 300, "seed": 9, "N": 8})
        b = run_bound_experiment("unbiasedness", mixing_model(2), {"R": 300, "seed": 9, "N": 8})
        assert [r.row() for r in a] == [r.row() for r in b]

    def test_below_threshold_is_skipped(self):
        reports = bias_experiment("m", mixing_model(8), N_values=(10,), R=50, seed=0)
        assert {r.verdict for r in reports} == {SKIPPED}

    def test_unit_model_sandwich_has_zero_width(self):
        reports = bias_experiment("u", unit_model(3), N_values=(20,), R=2000, seed=0)
        assert {r.verdict for r in reports} == {PASS}
        assert all(r.lower == r.upper for r in reports if r.inequality_id == "T1.f11")


class TestBiasScaling:
    def _est(self, v, se):
        return Estimate("sum0", v, se, 1000)

    def test_linear_decay_passes(self):
        by_N = {N: {"sum0": self._est(1.0 - 0.5 / N, 0.001 / N)} for N in (100, 200, 400, 800)}
        reports = bias_scaling_reports("m", by_N, {"sum0": 1.0})
        assert {r.verdict for r in reports} == {PASS}

    def test_flat_bias_fails_the_ratio(self):
        by_N = {N: {"sum0": self._est(1.0 - 0.01, 1e-6)} for N in (200, 800)}
        verdicts = {r.inequality_id: r.verdict for r in bias_scaling_reports("m", by_N, {"sum0": 1.0})}
        assert verdicts["T1.ratio"] == FAIL


class TestPower:
    def test_negative_control_fails(self):
        reports = run_bound_experiment("negative_control", mixing_model(8), {"R": 100_000, "seed": 1})
        assert any(r.verdict == FAIL for r in reports)
