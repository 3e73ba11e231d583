"""Counter-based uniforms: compiled and numpy versions agree bit for bit."""

import numba
import numpy as np
import pytest
from hypothesis import given, strategies as st

from fk_lab.rng import (INIT, MUTATE, SELECT, check_key_capacity, check_seed, uniform, uniform_np)


@numba.njit
def _compiled(seed, reps, stream, gen, particle, purpose):
    out = np.empty(reps.size)
    for i in range(reps.size):
        out[i] = uniform(seed, reps[i], stream, gen, particle, purpose)
    return out


keys = st.integers(0, 2**40)


class TestUniform:
    @given(seed=st.integers(0, 2**63 - 1), stream=keys, gen=keys, particle=keys, purpose=st.integers(0, 6))
    def test_compiled_matches_numpy(self, seed, stream, gen, particle, purpose):
        reps = np.arange(5, dtype=np.int64)
        a = _compiled(seed, reps, stream, gen, particle, purpose)
        b = uniform_np(seed, reps, stream, gen, particle, purpose)
        np.testing.assert_array_equal(a, b)

    def test_range_and_moments(self):
        u = uniform_np(7, np.arange(200_000), 0, 1, 2, SELECT)
        assert u.min() >= 0.0 and u.max() < 1.0
        assert abs(u.mean() - 0.5) < 4 * (1 / 12 / u.size) ** 0.5

    def test_purposes_give_different_streams(self):
        reps = np.arange(1000)
        a, b = uniform_np(1, reps, 0, 0, 0, INIT), uniform_np(1, reps, 0, 0, 0, MUTATE)
        assert not np.any(a == b)
        assert abs(np.corrcoef(a, b)[0, 1]) < 0.2

    def test_every_key_field_matters(self):
        base = (3, 4, 5, 6, 7, 2)
        ref = uniform_np(*base)
        for i in range(6):
            key = list(base)
            key[i] += 1
            assert uniform_np(*key) != ref


class TestSeedChecks:
    @pytest.mark.parametrize("bad", [-1, 2**63])
    def test_out_of_range(self, bad):
        with pytest.raises(ValueError):
            check_seed(bad)

    @pytest.mark.parametrize("bad", [1.5, "3", True, None])
    def test_non_integer(self, bad):
        with pytest.raises(TypeError):
            check_seed(bad)

    def test_capacity(self):
        check_key_capacity(10**6, 100, 10**9)
        with pytest.raises(OverflowError):
            check_key_capacity(2**41, 1)
