"""Exact identities of the particle dynamics on explicit small configurations.

* the backward transfer formula ``m(x_{n-1}) Q'_n H_{n,m(x)} = m(x_{n-1}) H_{n-1,m(x)} Q_n``;
* the one-step conditional expectation of ``m(X_{z,n})^{⊙q}(f)`` in the
  dual system, computed by enumerating the frozen slot and every placement
  of the other particles, against the frozen tensor step operator.
"""

from __future__ import annotations

import itertools

import numpy as np

from ..model import decode_paths, lift_to_path, path_space_sizes
from ..oracle.tensor import _mixed_insertion, _step_matrix, coalesce_function, tensor_step_function
from ..smc import backward_kernel
from .lemmas import distinct_tuples_direct
from .stats import Estimate, check_sandwich


def _identity(inequality_id, err, ctx):
    return check_sandwich(Estimate.exact(inequality_id, err), 0.0, 0.0, inequality_id, ctx)


def backward_path_measure_direct(model, clouds, level, top):
    """``top H_{level, m(x)}`` from the product formula, path by path."""
    sizes = model.space_sizes[: level + 1]
    paths = decode_paths(np.arange(path_space_sizes(sizes)[-1]), sizes)
    N = len(clouds[0])
    out = np.empty(len(paths))
    for r, y in enumerate(paths):
        w = float(top[y[level]])
        for k in range(level):
            m_k = np.bincount(clouds[k], minlength=model.space_sizes[k]) / N
            h = model.potentials[k] * model.kernel_dense(k + 1)[:, y[k + 1]]
            den = float(m_k @ h)
            # unreachable from the cloud: no backward step exists, weight 0 (sampler raises)
            w = 0.0 if den == 0.0 else w * m_k[y[k]] * h[y[k]] / den
        out[r] = w
    return out


def transfer_formula_checks(model, name, N=2, max_configs=4096):
    """Both sides of the transfer formula for every configuration ``x_0..x_{n-1}`` with N particles."""
    n = model.horizon
    reports = []
    lift = lift_to_path(model)
    for level in range(1, n + 1):
        spaces = [range(model.space_sizes[k]) for k in range(level) for _ in range(N)]
        worst, count = 0.0, 0
        for flat in itertools.product(*spaces):
            clouds = [np.array(flat[k * N:(k + 1) * N]) for k in range(level)]
            m_prev = np.bincount(clouds[-1], minlength=model.space_sizes[level - 1]) / N
            # left: (m(x_{n-1}) Q'_n) then the backward kernel at `level`
            top = (m_prev * model.potentials[level - 1]) @ model.kernel_dense(level)
            left = backward_path_measure_direct(model, clouds, level, top)
            # right: m(x_{n-1}) H_{n-1} as a path measure, then one lifted Q_n step
            prev_law = m_prev @ backward_kernel(model, clouds, level - 1)
            terminal = np.arange(len(prev_law)) % model.space_sizes[level - 1]
            right = np.asarray((prev_law * model.potentials[level - 1][terminal])
                               @ lift.kernel_dense(level)).ravel()
            err = float(np.abs(left - right).max())
            worst = max(worst, err if np.isfinite(err) else np.inf)
            count += 1
            if count >= max_configs:
                break
        reports.append(_identity("H.f7", worst, {"model": name, "n": level, "N": N, "f_id": f"{count}_configs"}))
    return reports


def _phi(model, k, cloud):
    """``Phi_k(m(x))`` for a marginal cloud at level k-1."""
    m = np.bincount(cloud, minlength=model.space_sizes[k - 1]) / len(cloud)
    w = m * model.potentials[k - 1]
    return (w / w.sum()) @ model.kernel_dense(k)


def dual_step_expectation(model, k, cloud, z_k, q, f):
    """``E(m(X_{z,k})^{⊙q}(f) | X_{z,k-1} = cloud)`` by full enumeration of slot and placements."""
    N = len(cloud)
    d = model.space_sizes[k]
    phi = _phi(model, k, np.asarray(cloud))
    fa = np.asarray(f, dtype=float).reshape((d,) * q)
    total = 0.0
    for i in range(N):
        for others in itertools.product(range(d), repeat=N - 1):
            pr = float(np.prod(phi[list(others)]))
            x = list(others[:i]) + [z_k] + list(others[i:])
            total += pr * distinct_tuples_direct(x, q, fa) / N
    return total


def dual_step_formula(model, k, cloud, z_k, q, f, N=None, insertion="exact"):
    """``m(x)^{⊙q}(C Q^{⊗q} D f) / m(x)^{⊙q}(C Q^{⊗q} D 1)`` with the selected insertion operator."""
    N = len(cloud) if N is None else N
    d_prev, d = model.space_sizes[k - 1], model.space_sizes[k]
    kmat = _step_matrix(model, k)

    def op(h):
        h = _mixed_insertion(np.asarray(h, dtype=float).ravel(), z_k, q, d, N, insertion, on_measure=False)
        h = tensor_step_function(h, kmat, q)
        return coalesce_function(h, N, q, d_prev)

    num = op(f).reshape((d_prev,) * q)
    den = op(np.ones(d**q)).reshape((d_prev,) * q)
    return distinct_tuples_direct(list(cloud), q, num) / distinct_tuples_direct(list(cloud), q, den)


def dual_one_step_checks(model, name, N=3, q=2, level=1):
    """Exhaustive one-step identity for every previous cloud, frozen state and a few test functions."""
    d = model.space_sizes[level]
    grid = np.indices((d,) * q).reshape(q, -1)
    functions = {
        "indicator_diag": (grid[0] == grid[1]).astype(float) if q == 2 else (grid[0] == 0).astype(float),
        "product": np.prod(1.0 + grid, axis=0).astype(float),
        "first_coord": (grid[0] == 0).astype(float),
    }
    reports = []
    for f_id, f in functions.items():
        worst = 0.0
        for cloud in itertools.product(range(model.space_sizes[level - 1]), repeat=N):
            for z in range(d):
                lhs = dual_step_expectation(model, level, cloud, z, q, f)
                rhs = dual_step_formula(model, level, cloud, z, q, f)
                worst = max(worst, abs(lhs - rhs))
        reports.append(_identity("D.f28", worst, {"model": name, "n": level, "N": N, "q": q, "f_id": f_id}))
    return reports
