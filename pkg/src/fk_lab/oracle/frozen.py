"""Feynman-Kac quantities of the model with a frozen reference path.

With a frozen path ``z`` and ``N`` particles, the insertion operator at
level k is ``I_k = (1 - 1/N) Id + (1/N) 1 e_{z_k}^T`` (jump to ``z_k`` with
probability 1/N).  The frozen semigroup is built from ``Q_k I_k`` and the
frozen model has initial law ``mu_0 = eta_0 I_0`` and kernels
``M_{z,k} = M_k I_k``.

``N = math.inf`` is an explicit flag: the insertion operator becomes the
identity and every quantity reduces to its unfrozen counterpart.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from ..model import DEFAULT_CAPACITY, frozen_state_indices
from .measures import Measure, SemigroupMatrix, _check_capacity, _check_levels

INFINITE_N = math.inf


def _insertion_rate(N):
    if N is None or (isinstance(N, float) and math.isinf(N)):
        return 0.0
    if N < 1:
        raise ValueError(f"N must be >= 1, got {N}")
    return 1.0 / N


def _dense(a):
    return a.toarray() if sp.issparse(a) else np.asarray(a)


def insert_rows(mat, z, rate):
    """Right-multiply each row of ``mat`` by the insertion operator towards state ``z``."""
    out = (1.0 - rate) * mat
    out[..., z] += rate * mat.sum(axis=-1)
    return out


def frozen_semigroup(model, z, N, p, n, capacity=DEFAULT_CAPACITY):
    """Dense matrix of the frozen semigroup ``Q_{p+1} I_{p+1} ... Q_n I_n``."""
    _check_levels(model, p, n)
    zs = frozen_state_indices(model, z)
    rate = _insertion_rate(N)
    _check_capacity(model.space_sizes[p] * model.space_sizes[n], capacity, f"frozen semigroup ({p},{n})")
    mat = np.eye(model.space_sizes[n])
    for k in range(n, p, -1):
        # left-multiply by Q_k I_k: first I_k (acts on the rows' target space) ...
        mat = _apply_insertion_left(mat, zs[k], rate)
        mat = model.potentials[k - 1][:, None] * _dense(model.kernels[k - 1] @ mat)
    return SemigroupMatrix(p, n, mat)


def _apply_insertion_left(mat, z, rate):
    """``I @ mat`` where ``I = (1-rate) Id + rate 1 e_z^T``."""
    return (1.0 - rate) * mat + rate * mat[z][None, :]


def expansion_semigroup(model, z, N, p, n):
    """Frozen semigroup rebuilt from its expansion over insertion patterns.

    Each step contributes either ``Q_k`` (no jump, weight ``1 - 1/N``) or
    ``Q_k 1 e_{z_k}^T`` (jump, weight ``1/N``); the result sums the ``2^{n-p}``
    products.  Independent of :func:`frozen_semigroup`, used to cross-check it.
    """
    _check_levels(model, p, n)
    zs = frozen_state_indices(model, z)
    rate = _insertion_rate(N)
    steps = []
    for k in range(p + 1, n + 1):
        q = model.potentials[k - 1][:, None] * model.kernel_dense(k)
        jump = np.zeros_like(q)
        jump[:, zs[k]] = q.sum(axis=1)
        steps.append((q, jump))
    total = np.zeros((model.space_sizes[p], model.space_sizes[n]))
    if not steps:
        return SemigroupMatrix(p, n, np.eye(model.space_sizes[p]))
    for eps in itertools.product((0, 1), repeat=n - p):
        k = sum(eps)
        weight = rate**k * (1.0 - rate) ** (n - p - k)
        if weight == 0.0:
            continue
        prod = steps[0][eps[0]]
        for (q, jump), e in zip(steps[1:], eps[1:]):
            prod = prod @ (jump if e else q)
        total += weight * prod
    return SemigroupMatrix(p, n, total)


@dataclass(frozen=True)
class FrozenMeasures:
    """``gamma_{z,k}``, ``eta_{z,k}`` (k = 0..n) and the initial law ``mu_0``."""

    gammas: tuple
    etas: tuple
    mu0: Measure


def frozen_fk_measures(model, z, N):
    """Feynman-Kac measures of the chain that jumps to the frozen path at rate 1/N."""
    zs = frozen_state_indices(model, z)
    rate = _insertion_rate(N)
    on_path = model.is_path_model
    v = insert_rows(np.asarray(model.initial, dtype=float).copy(), zs[0], rate)
    mu0 = Measure(0, v, on_path)
    gammas = [mu0]
    for k in range(1, model.horizon + 1):
        v = np.asarray((v * model.potentials[k - 1]) @ model.kernels[k - 1]).ravel()
        v = insert_rows(v, zs[k], rate)
        gammas.append(Measure(k, v, on_path))
    return FrozenMeasures(tuple(gammas), tuple(g.normalized() for g in gammas), mu0)


def frozen_terminal_table(model, N, frozen_paths=None):
    """``eta_{z,n}`` and ``gamma_{z,n}(1)`` for many frozen paths at once.

    ``frozen_paths`` is an ``(m, n+1)`` array of marginal coordinates (default:
    every path).  Returns ``(etas, masses)`` with ``etas[i]`` the terminal
    frozen law for path i over the model's level-n space.  On a path-space
    lift with all paths this is the matrix of the kernel ``z -> eta_{z,n}``.
    """
    base = model.marginal if model.is_path_model else model
    n = model.horizon
    if frozen_paths is None:
        frozen_paths = np.array(list(itertools.product(*(range(d) for d in base.space_sizes))),
                                dtype=np.int64).reshape(-1, n + 1)
    frozen_paths = np.asarray(frozen_paths, dtype=np.int64)
    m = frozen_paths.shape[0]
    # per-level frozen indices in the model's own state space
    if model.is_path_model:
        zidx = np.zeros_like(frozen_paths)
        acc = np.zeros(m, dtype=np.int64)
        for k in range(n + 1):
            acc = acc * base.space_sizes[k] + frozen_paths[:, k]
            zidx[:, k] = acc
    else:
        zidx = frozen_paths
    _check_capacity(m * model.space_sizes[-1], DEFAULT_CAPACITY, "frozen table")
    rate = _insertion_rate(N)
    rows = np.arange(m)
    v = np.tile(np.asarray(model.initial, dtype=float), (m, 1))
    v = _insert_batch(v, zidx[:, 0], rate, rows)
    for k in range(1, n + 1):
        v = np.asarray((v * model.potentials[k - 1]) @ model.kernels[k - 1])
        v = _insert_batch(v, zidx[:, k], rate, rows)
    masses = v.sum(axis=1)
    return v / masses[:, None], masses


def _insert_batch(v, z, rate, rows):
    out = (1.0 - rate) * v
    out[rows, z] += rate * v.sum(axis=1)
    return out
