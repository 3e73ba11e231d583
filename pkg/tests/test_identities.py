"""Backward transfer formula and the exhaustive one-step dual identity."""

import numpy as np
import pytest

from fk_lab.verify.corpus import mixing_model, sticky_model
from fk_lab.verify.identities import (backward_path_measure_direct, dual_one_step_checks, dual_step_expectation,
                                      dual_step_formula, transfer_formula_checks)
from fk_lab.verify.stats import PASS


class TestTransferFormula:
    @pytest.mark.parametrize("build", [mixing_model, sticky_model])
    def test_holds_on_every_configuration(self, build):
        reports = transfer_formula_checks(build(2), "m", N=2)
        assert [r.verdict for r in reports] == [PASS, PASS]

    def test_direct_product_formula_is_a_law(self, two_state):
        clouds = [np.array([0, 1]), np.array([1, 1]), np.array([0, 0])]
        top = np.array([0.25, 0.75])
        law = backward_path_measure_direct(two_state, clouds, 2, top)
        assert law.sum() == pytest.approx(1.0)


class TestDualOneStep:
    def test_exhaustive_identity(self, two_state):
        assert {r.verdict for r in dual_one_step_checks(two_state, "two_state", N=3, q=2)} == {PASS}

    def test_literal_insertion_differs(self, two_state):
        f = np.array([1.0, 0.0, 0.0, 2.0])
        cloud, z = (0, 1, 1), 0
        lhs = dual_step_expectation(two_state, 1, cloud, z, 2, f)
        assert dual_step_formula(two_state, 1, cloud, z, 2, f) == pytest.approx(lhs, rel=1e-12)
        assert abs(dual_step_formula(two_state, 1, cloud, z, 2, f, insertion="literal") - lhs) > 1e-3
