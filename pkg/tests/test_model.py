"""Model construction, validation messages, path encoding and transformations."""

import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from fk_lab.errors import CapacityError, ModelValidationError
from fk_lab.model import (FiniteFkModel, PathIndex, decode_path, decode_paths, encode_path, encode_paths,
                          eval_product_weight, frozen_state_indices, homogeneous_model, lift_to_path,
                          load_model, log_product_weight, model_from_dict, normalize_potentials,
                          path_space_sizes, save_model)
from fk_lab.oracle.measures import exact_measures


def _doc(**overrides):
    doc = {"horizon": 1, "space_sizes": [2, 2], "kernels": [[[0.5, 0.5], [0.2, 0.8]]],
           "potentials": [[1.0, 2.0], [1.0, 1.0]], "initial": [0.4, 0.6]}
    doc.update(overrides)
    return doc


class TestValidation:
    def test_valid_document(self):
        model = model_from_dict(_doc())
        assert model.horizon == 1 and model.space_sizes == (2, 2)

    @pytest.mark.parametrize("overrides, where", [
        ({"kernels": [[[0.5, 0.6], [0.2, 0.8]]]}, "kernels[0][0]"),
        ({"kernels": [[[1.5, -0.5], [0.2, 0.8]]]}, "kernels[0][0][1]"),
        ({"potentials": [[1.0, 0.0], [1.0, 1.0]]}, "potentials[0][1]"),
        ({"potentials": [[1.0, float("nan")], [1.0, 1.0]]}, "potentials[0][1]"),
        ({"initial": [0.4, 0.5]}, "initial"),
        ({"initial": [1.4, -0.4]}, "initial[1]"),
        ({"space_sizes": [2, 3]}, "kernels[0]"),
        ({"horizon": 2}, "space_sizes"),
    ])
    def test_error_points_at_the_offending_entry(self, overrides, where):
        with pytest.raises(ModelValidationError) as exc:
            model_from_dict(_doc(**overrides))
        assert exc.value.path == where

    def test_missing_field(self):
        doc = _doc()
        del doc["initial"]
        with pytest.raises(ModelValidationError, match="initial"):
            model_from_dict(doc)

    def test_validation_error_is_a_value_error(self):
        with pytest.raises(ValueError):
            model_from_dict(_doc(initial=[0.1, 0.1]))

    def test_arrays_are_read_only(self, two_state):
        with pytest.raises(ValueError):
            two_state.potentials[0][0] = 5.0


class TestFiles:
    def test_roundtrip(self, tmp_path, two_state):
        save_model(two_state, tmp_path / "m.json")
        back = load_model(tmp_path / "m.json")
        assert back.fingerprint() == two_state.fingerprint()
        for k in range(1, 4):
            np.testing.assert_array_equal(back.kernel_dense(k), two_state.kernel_dense(k))

    def test_bad_json(self, tmp_path):
        p = tmp_path / "bad.json"
        p.write_text("{not json")
        with pytest.raises(ModelValidationError):
            load_model(p)

    def test_lift_is_not_serialised(self, two_state):
        with pytest.raises(ValueError):
            lift_to_path(two_state).to_dict()

    def test_fingerprint_changes_with_content(self, tmp_path):
        a = model_from_dict(_doc())
        b = model_from_dict(_doc(initial=[0.5, 0.5]))
        assert a.fingerprint() != b.fingerprint()
        assert json.loads(json.dumps(a.to_dict())) == a.to_dict()


class TestPaths:
    @given(st.lists(st.integers(1, 4), min_size=1, max_size=5).flatmap(
        lambda sizes: st.tuples(st.just(sizes), st.tuples(*(st.integers(0, d - 1) for d in sizes)))))
    def test_encode_decode_roundtrip(self, case):
        sizes, coords = case
        lin = encode_path(coords, sizes)
        assert 0 <= lin < math.prod(sizes)
        assert decode_path(lin, sizes) == tuple(coords)
        assert encode_paths(np.array(coords), sizes) == lin
        np.testing.assert_array_equal(decode_paths(lin, sizes), coords)

    def test_first_coordinate_is_most_significant(self):
        assert encode_path((1, 0, 0), (2, 3, 4)) == 12
        assert encode_path((0, 0, 1), (2, 3, 4)) == 1

    def test_out_of_range(self):
        with pytest.raises(IndexError):
            encode_path((0, 3), (2, 3))
        with pytest.raises(IndexError):
            decode_path(6, (2, 3))

    def test_path_index(self):
        p = PathIndex((1, 2, 0), (2, 3, 2))
        assert p.level == 2 and p.terminal == 0
        assert p.prefix_indices() == [1, 5, 10]
        assert PathIndex.from_linear(p.linear, (2, 3, 2)) == p
        assert p.prefix(1).coords == (1, 2)

    def test_path_space_sizes(self):
        assert path_space_sizes((2, 3, 4)) == [2, 6, 24]


class TestTransformations:
    def test_lift_marginals_agree(self, inhomogeneous):
        lift = lift_to_path(inhomogeneous)
        _, etas = exact_measures(inhomogeneous)
        g_lift, e_lift = exact_measures(lift)
        for k in range(inhomogeneous.horizon + 1):
            d = inhomogeneous.space_sizes[k]
            terminal = np.bincount(np.arange(len(e_lift[k])) % d, weights=e_lift[k].values, minlength=d)
            np.testing.assert_allclose(terminal, etas[k].values, atol=1e-14)

    def test_lift_capacity(self, two_state):
        with pytest.raises(CapacityError):
            lift_to_path(two_state, capacity=8)

    def test_normalize_potentials(self, two_state):
        _, etas = exact_measures(two_state)
        norm = normalize_potentials(two_state, etas)
        gammas, etas2 = exact_measures(norm)
        for k in range(4):
            assert etas2[k](norm.potentials[k]) == pytest.approx(1.0, abs=1e-14)
            np.testing.assert_allclose(etas2[k].values, etas[k].values, atol=1e-14)
            assert gammas[k].mass == pytest.approx(1.0, abs=1e-14)

    def test_truncate(self, two_state):
        t = two_state.truncate(1)
        assert t.horizon == 1 and len(t.potentials) == 2
        with pytest.raises(ValueError):
            two_state.truncate(5)

    def test_product_weight_log_crosscheck(self, two_state):
        path = (1, 0, 1, 1)
        w = eval_product_weight(two_state, path, 3)
        assert w == pytest.approx(2.0 * 0.5 * 0.7)
        assert math.log(w) == pytest.approx(log_product_weight(two_state, path, 3), rel=1e-14)

    def test_frozen_state_indices(self, two_state):
        np.testing.assert_array_equal(frozen_state_indices(two_state, (1, 0, 1, 1)), [1, 0, 1, 1])
        lift = lift_to_path(two_state)
        np.testing.assert_array_equal(frozen_state_indices(lift, (1, 0, 1, 1)), [1, 2, 5, 11])
        with pytest.raises(ValueError):
            frozen_state_indices(two_state, (1, 0))

    def test_homogeneous(self):
        m = homogeneous_model(2, [[0.5, 0.5], [0.5, 0.5]], [1.0, 2.0], [1.0, 0.0])
        assert isinstance(m, FiniteFkModel) and m.space_sizes == (2, 2, 2)
