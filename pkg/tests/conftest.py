"""Shared fixtures: corpus models, small hand-built models and hypothesis settings."""

import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from fk_lab.model import FiniteFkModel, homogeneous_model
from fk_lab.verify.corpus import corpus_model, lattice_model, mixing_model, sticky_model, unit_model

# numba compilation makes the first example slow; no deadline for property tests
settings.register_profile("fk", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "fk"))


@pytest.fixture
def two_state():
    """Unnormalised 2-state chain with distinct potentials per level, horizon 3."""
    kernel = np.array([[0.8, 0.2], [0.35, 0.65]])
    pots = (np.array([1.0, 2.0]), np.array([0.5, 1.5]), np.array([1.2, 0.7]), np.array([1.0, 3.0]))
    return FiniteFkModel(3, (2, 2, 2, 2), (kernel,) * 3, pots, np.array([0.3, 0.7]))


@pytest.fixture
def inhomogeneous():
    """Varying state-space sizes 2 -> 3 -> 2 (exercises rectangular kernels)."""
    m1 = np.array([[0.2, 0.5, 0.3], [0.6, 0.1, 0.3]])
    m2 = np.array([[0.9, 0.1], [0.4, 0.6], [0.5, 0.5]])
    pots = (np.array([1.0, 0.5]), np.array([2.0, 1.0, 0.25]), np.array([1.0, 1.0]))
    return FiniteFkModel(2, (2, 3, 2), (m1, m2), pots, np.array([0.5, 0.5]))


@pytest.fixture(params=["unit", "mixing", "sticky", "lattice"])
def corpus(request):
    """Each corpus model at horizon 3, with its name."""
    return request.param, corpus_model(request.param, 3)


@pytest.fixture
def mixing3():
    return mixing_model(3)


@pytest.fixture
def degenerate():
    """Identity kernels and a Dirac start: every particle sits in state 1 forever."""
    return homogeneous_model(3, np.eye(2), [1.0, 1.0], [0.0, 1.0])


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for key in sorted(results, key=lambda k: int(k[1:])):
            terminalreporter.write_line(results[key])
