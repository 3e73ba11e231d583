"""The canonical model corpus used by the verification suites.

Four small models, each available at any horizon:

``unit``
    2-state chain with constant potential ``G = 1`` (ratio constant 1).
``mixing``
    2-state symmetric chain, flip probability 0.3, potential ``(1.2, 1)``,
    normalised so that ``eta_k(G_k) = 1`` (ratio constant about 1.35 at n = 8).
``sticky``
    3-state chain that stays put with probability 0.9 (weak mixing, large
    contraction coefficients), potential ``(1, 0.8, 0.6)``, normalised.
``lattice``
    4-site lazy nearest-neighbour walk on a ring with the imaginary-time
    weight ``exp(-V dt)``, ``V = (0, 0.5, 1, 1.5)``, ``dt = 0.5``; potentials
    lie in ``(0, 1]`` and are left unnormalised.
"""

from __future__ import annotations

import numpy as np

from ..model import homogeneous_model, normalize_potentials
from ..oracle.measures import exact_measures

CORPUS = ("unit", "mixing", "sticky", "lattice")

DEFAULT_HORIZONS = {"unit": 5, "mixing": 8, "sticky": 5, "lattice": 5}

LATTICE_POTENTIAL_DT = 0.5
LATTICE_V = np.array([0.0, 0.5, 1.0, 1.5])


def _normalized(model):
    _, etas = exact_measures(model)
    return normalize_potentials(model, etas)


def unit_model(n=DEFAULT_HORIZONS["unit"]):
    return homogeneous_model(n, [[0.7, 0.3], [0.4, 0.6]], [1.0, 1.0], [0.6, 0.4])


def mixing_model(n=DEFAULT_HORIZONS["mixing"], flip=0.3, weight=1.2):
    raw = homogeneous_model(n, [[1 - flip, flip], [flip, 1 - flip]], [weight, 1.0], [0.5, 0.5])
    return _normalized(raw)


def sticky_model(n=DEFAULT_HORIZONS["sticky"]):
    stay = 0.9
    kernel = np.full((3, 3), (1 - stay) / 2)
    np.fill_diagonal(kernel, stay)
    raw = homogeneous_model(n, kernel, [1.0, 0.8, 0.6], [1 / 3, 1 / 3, 1 / 3])
    return _normalized(raw)


def lattice_model(n=DEFAULT_HORIZONS["lattice"]):
    kernel = np.zeros((4, 4))
    for x in range(4):
        kernel[x, x] = 0.5
        kernel[x, (x + 1) % 4] = 0.25
        kernel[x, (x - 1) % 4] = 0.25
    g = np.exp(-LATTICE_V * LATTICE_POTENTIAL_DT)
    return homogeneous_model(n, kernel, g, np.full(4, 0.25))


_BUILDERS = {"unit": unit_model, "mixing": mixing_model, "sticky": sticky_model, "lattice": lattice_model}


def corpus_model(name, horizon=None):
    """Corpus model ``name`` at ``horizon`` (default: its canonical horizon)."""
    try:
        build = _BUILDERS[name]
    except KeyError:
        raise KeyError(f"unknown corpus model {name!r}; choose from {CORPUS}") from None
    return build(DEFAULT_HORIZONS[name] if horizon is None else horizon)


def is_normalized(model, tol=1e-12):
    _, etas = exact_measures(model)
    return all(abs(float(e(g)) - 1.0) <= tol for e, g in zip(etas, model.potentials))
