"""Exact Feynman-Kac measures, semigroups and assumption constants.

Everything here is dense (or sparse-times-dense) double-precision linear
algebra on explicitly enumerated state spaces.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from ..errors import CapacityError
from ..model import DEFAULT_CAPACITY, FiniteFkModel

STOCHASTIC_TOL = 1e-12


@dataclass(frozen=True)
class Measure:
    """A non-negative measure on the level-``level`` state space of a model.

    ``on_path`` tells whether the underlying space is a path space.  The mass
    is the entry sum; ``gamma``-type measures may have mass different from 1.
    """

    level: int
    values: np.ndarray
    on_path: bool = False

    def __post_init__(self):
        v = np.array(self.values, dtype=float, copy=True)
        if np.any(v < 0) or not np.all(np.isfinite(v)):
            raise ValueError("measure entries must be finite and non-negative")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def mass(self):
        return float(self.values.sum())

    def __call__(self, f):
        """Integral of a function given as a vector over the same space."""
        return float(self.values @ np.asarray(f, dtype=float))

    def normalized(self):
        return Measure(self.level, self.values / self.mass, self.on_path)

    def __len__(self):
        return self.values.size


def _step_measure(values, g, kernel):
    """``(values * g) M`` for a dense or sparse kernel."""
    out = (values * g) @ kernel
    return np.asarray(out).ravel()


def _check_capacity(size, capacity, what):
    if size > capacity:
        raise CapacityError(f"{what} needs {size} entries (cap {capacity})")


def exact_measures(model: FiniteFkModel, capacity=DEFAULT_CAPACITY):
    """Unnormalised ``gamma_k`` and normalised ``eta_k`` for k = 0..n.

    ``gamma_0 = eta_0`` and ``gamma_{k} = gamma_{k-1} Q_k`` with
    ``Q_k = diag(G_{k-1}) M_k``.
    """
    for k, d in enumerate(model.space_sizes):
        _check_capacity(d, capacity, f"level-{k} measure")
    on_path = model.is_path_model
    gammas = [Measure(0, model.initial, on_path)]
    v = np.asarray(model.initial, dtype=float)
    for k in range(1, model.horizon + 1):
        v = _step_measure(v, model.potentials[k - 1], model.kernels[k - 1])
        gammas.append(Measure(k, v, on_path))
    etas = [g.normalized() for g in gammas]
    return gammas, etas


def product_formula_terms(model, etas):
    """``prod_{p<k} eta_p(G_p)`` for k = 0..n (the normalising constant of ``gamma_k``)."""
    out, acc = [1.0], 1.0
    for p in range(model.horizon):
        acc *= etas[p](model.potentials[p])
        out.append(acc)
    return out


@dataclass(frozen=True)
class SemigroupMatrix:
    """Dense matrix of ``Q_{p,n}`` (or its normalised variant) from level p to level n."""

    p: int
    n: int
    matrix: np.ndarray
    normalized: bool = False

    def __matmul__(self, other):
        if self.n != other.p:
            raise ValueError(f"cannot compose ({self.p},{self.n}) with ({other.p},{other.n})")
        return SemigroupMatrix(self.p, other.n, self.matrix @ other.matrix, self.normalized and other.normalized)

    def ones(self):
        """``Q_{p,n}(1)`` as a vector over level p."""
        return self.matrix.sum(axis=1)

    def apply(self, f):
        return self.matrix @ np.asarray(f, dtype=float)


def _check_levels(model, p, n):
    if not (0 <= p <= n <= model.horizon):
        raise ValueError(f"need 0 <= p <= n <= {model.horizon}, got p={p}, n={n}")


def semigroup(model, p, n, normalized=False, capacity=DEFAULT_CAPACITY):
    """``Q_{p,n} = Q_{p+1} ... Q_n`` as a dense matrix; ``Q_{n,n} = Id``.

    With ``normalized=True`` the matrix is divided by the scalar
    ``eta_p Q_{p,n}(1)``.
    """
    _check_levels(model, p, n)
    d_p, d_n = model.space_sizes[p], model.space_sizes[n]
    _check_capacity(d_p * d_n, capacity, f"semigroup ({p},{n})")
    # Build right-to-left so the dense object is |S_p| x |S_n| throughout.
    mat = np.eye(d_n)
    for k in range(n, p, -1):
        kernel = model.kernels[k - 1]
        right = kernel @ mat
        right = right.toarray() if sp.issparse(right) else np.asarray(right)
        mat = model.potentials[k - 1][:, None] * right
    if normalized:
        _, etas = exact_measures(model, capacity)
        mat = mat / float(etas[p].values @ mat.sum(axis=1))
    return SemigroupMatrix(p, n, mat, normalized)


def semigroup_ones(model, p, n):
    """``Q_{p,n}(1)`` by backward recursion; cheap even on path-space lifts."""
    _check_levels(model, p, n)
    h = np.ones(model.space_sizes[n])
    for k in range(n, p, -1):
        h = model.potentials[k - 1] * np.asarray(model.kernels[k - 1] @ h).ravel()
    return h


def all_semigroup_ones(model):
    """``ones[p][q] = Q_{p,q}(1)`` for every 0 <= p <= q <= n."""
    n = model.horizon
    ones = [[None] * (n + 1) for _ in range(n + 1)]
    for q in range(n + 1):
        h = np.ones(model.space_sizes[q])
        ones[q][q] = h
        for p in range(q - 1, -1, -1):
            h = model.potentials[p] * np.asarray(model.kernels[p] @ h).ravel()
            ones[p][q] = h
    return ones


@dataclass(frozen=True)
class AssumptionReport:
    """Exact values of the ratio and contraction constants of a model.

    ``rho_by_horizon[m]`` is the ratio constant of the model truncated at
    horizon m; ``rho_n`` is the value at the full horizon.  ``alpha[k]`` is
    the largest L1 distance between normalised rows of ``Q_{n-k,n}``;
    ``alpha_uniform[k]`` additionally maximises over all sub-horizons.
    """

    horizon: int
    rho_n: float
    rho_by_horizon: tuple
    alpha: tuple
    alpha_uniform: tuple
    beta1: float
    beta2: float

    @property
    def rho_sup_estimate(self):
        return max(self.rho_by_horizon)

    def to_dict(self):
        return {
            "horizon": self.horizon,
            "rho_n": self.rho_n,
            "rho_by_horizon": list(self.rho_by_horizon),
            "rho_sup_estimate": self.rho_sup_estimate,
            "alpha": list(self.alpha),
            "alpha_uniform": list(self.alpha_uniform),
            "beta1": self.beta1,
            "beta2": self.beta2,
        }


def ratio_constant(model):
    """``rho_m`` for every horizon m: max over p<=q<=m of max Q_{p,q}(1) / min Q_{p,q}(1)."""
    if model.marginal is not None:
        # Q_{p,q}(1) on a lift reads only the terminal coordinate.
        model = model.marginal
    ones = all_semigroup_ones(model)
    n = model.horizon
    by_q = []
    for q in range(n + 1):
        worst = 1.0
        for p in range(q + 1):
            h = ones[p][q]
            if h.min() <= 0:
                raise ArithmeticError(f"Q_({p},{q})(1) has a zero entry")
            worst = max(worst, float(h.max() / h.min()))
        by_q.append(worst)
    return list(np.maximum.accumulate(by_q))


def _row_l1_diameter(mat):
    """max_{x,y} sum_z |mat[x,z] - mat[y,z]| for a row-normalised matrix."""
    best = 0.0
    for x in range(mat.shape[0] - 1):
        diff = np.abs(mat[x + 1:] - mat[x]).sum(axis=1)
        best = max(best, float(diff.max()))
    return best


def contraction_profile(model, horizon=None):
    """``alpha[k]`` for lags k = 0..horizon at the given (default: full) horizon."""
    n = model.horizon if horizon is None else horizon
    out = []
    for p in range(n, -1, -1):
        mat = semigroup(model, p, n).matrix
        rows = mat / mat.sum(axis=1, keepdims=True)
        out.append(_row_l1_diameter(rows))
    return out


def assumption_constants(model):
    """Ratio constants, contraction profile and potential bounds of ``model``."""
    rhos = ratio_constant(model)
    base = model.marginal if model.marginal is not None else model
    alpha = contraction_profile(base)
    uniform = [0.0] * (base.horizon + 1)
    for m in range(base.horizon + 1):
        for k, a in enumerate(contraction_profile(base, m)):
            uniform[k] = max(uniform[k], a)
    beta1 = min(float(g.min()) for g in base.potentials)
    beta2 = max(float(g.max()) for g in base.potentials)
    return AssumptionReport(base.horizon, float(rhos[-1]), tuple(float(r) for r in rhos),
                            tuple(alpha), tuple(uniform), beta1, beta2)


def dobrushin_beta(kernel):
    """Dobrushin coefficient ``1/2 max_{x,y} ||M(x,.) - M(y,.)||_1`` of a stochastic matrix."""
    m = np.asarray(kernel.toarray() if sp.issparse(kernel) else kernel, dtype=float)
    if m.ndim != 2 or np.any(m < 0) or np.any(np.abs(m.sum(axis=1) - 1) > 1e-10):
        raise ValueError("dobrushin_beta expects a row-stochastic matrix")
    if m.shape[0] < 2:
        return 0.0
    return 0.5 * _row_l1_diameter(m)
