"""q-fold tensor products of the particle system: coalescence and tensor FK measures.

Points of ``S^q`` are flattened in C order.  Operators are applied matrix-free
through index maps: a map ``c: [q] -> [q]`` acts by ``(C_c f)(x) = f(x_{c(1)},
..., x_{c(q)})``, so functions are pulled back by gathering and measures are
pushed forward with ``np.bincount``.

Two equivalent forms of the coalescence operator are provided:

* ``"canonical"`` (default): one term per set partition of ``[q]`` with k
  blocks, weight ``(N)_k / N^q``, every index sent to the smallest index of
  its block.  For q = 2 this is ``(1 - 1/N) f(x, y) + (1/N) f(x, x)`` and it
  is the identity when ``N`` is infinite.
* ``"maps"``: the sum over all ``q^q`` maps with weights
  ``N^{-q} (N)_{|c|} / (q)_{|c|}`` (``|c|`` = image size).

Both agree on exchangeable measures, in particular on ``m^{⊙q}`` and on
every measure produced by the tensor recursions below.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.sparse as sp

from ..errors import CapacityError
from ..model import DEFAULT_CAPACITY, frozen_state_indices
from .combinatorics import falling_factorial, set_partitions


@dataclass(frozen=True)
class TensorMeasure:
    """Non-negative measure on ``S_level^q`` (flattened), ``d = |S_level|``."""

    q: int
    level: int
    d: int
    values: np.ndarray
    on_path: bool = False

    @property
    def mass(self):
        return float(self.values.sum())

    def normalized(self):
        return TensorMeasure(self.q, self.level, self.d, self.values / self.mass, self.on_path)

    def __call__(self, f):
        return float(self.values @ np.asarray(f, dtype=float).ravel())

    def grid(self):
        return self.values.reshape((self.d,) * self.q)


def product_function(g, q):
    """Flattened ``g^{⊗q}``."""
    g = np.asarray(g, dtype=float)
    out = g
    for _ in range(q - 1):
        out = np.multiply.outer(out, g)
    return out.ravel()


def product_measure(mu, q):
    return product_function(mu, q)


def _is_infinite(N):
    return N is None or (isinstance(N, float) and math.isinf(N))


def _check_order(N, q, d, capacity):
    if q < 1:
        raise ValueError(f"tensor order must be >= 1, got {q}")
    if not _is_infinite(N) and q >= N:
        raise ValueError(f"tensor order q={q} must be smaller than N={N}")
    if d**q > capacity:
        raise CapacityError(f"tensor space of size {d}^{q} exceeds cap {capacity}")


@lru_cache(maxsize=256)
def _map_targets(d, q, c):
    """Flat index of ``(x_{c(0)}, ..., x_{c(q-1)})`` for every flat ``x``."""
    coords = np.indices((d,) * q).reshape(q, -1)
    out = np.zeros(coords.shape[1], dtype=np.int64)
    for j in range(q):
        out = out * d + coords[c[j]]
    out.setflags(write=False)
    return out


@lru_cache(maxsize=256)
def _replace_targets(d, q, i, z):
    """Flat index of ``x`` with coordinate i replaced by ``z``."""
    coords = np.indices((d,) * q).reshape(q, -1).copy()
    coords[i] = z
    out = np.ravel_multi_index(tuple(coords), (d,) * q).astype(np.int64)
    out.setflags(write=False)
    return out


def coalescence_terms(N, q, form="canonical"):
    """List of ``(weight, c)`` pairs with ``c`` a tuple map ``[q] -> [q]``."""
    if form == "canonical":
        terms = []
        for blocks in set_partitions(q):
            k = len(blocks)
            if _is_infinite(N):
                w = 1.0 if k == q else 0.0
            else:
                w = falling_factorial(N, k) / N**q
            if w == 0.0:
                continue
            c = [0] * q
            for b in blocks:
                for j in b:
                    c[j] = min(b)
            terms.append((float(w), tuple(c)))
        return terms
    if form == "maps":
        terms = []
        for c in itertools.product(range(q), repeat=q):
            k = len(set(c))
            if _is_infinite(N):
                w = (1.0 / math.factorial(q)) if k == q else 0.0
            else:
                w = falling_factorial(N, k) / (falling_factorial(q, k) * N**q)
            if w:
                terms.append((float(w), c))
        return terms
    raise ValueError(f"unknown coalescence form {form!r}")


def coalescence_degree_weights(N, q):
    """Weight of each coalescence degree l = q - (number of blocks), l = 0..q-1."""
    out = [0.0] * q
    for w, c in coalescence_terms(N, q):
        out[q - len(set(c))] += w
    return out


def coalesce_function(f, N, q, d, form="canonical"):
    """``(C f)`` for a flattened function ``f`` on ``S^q``."""
    f = np.asarray(f, dtype=float).ravel()
    out = np.zeros_like(f)
    for w, c in coalescence_terms(N, q, form):
        out += w * f[_map_targets(d, q, c)]
    return out


def coalesce_measure(mu, N, q, d, form="canonical"):
    """``mu C`` for a flattened measure ``mu`` on ``S^q``."""
    mu = np.asarray(mu, dtype=float).ravel()
    out = np.zeros_like(mu)
    for w, c in coalescence_terms(N, q, form):
        out += w * np.bincount(_map_targets(d, q, c), weights=mu, minlength=mu.size)
    return out


def coalescent_operator(N, q, d, form="canonical", capacity=DEFAULT_CAPACITY):
    """Dense ``d^q x d^q`` matrix of the coalescence operator (acting on functions)."""
    _check_order(N, q, d, capacity)
    size = d**q
    if size * size > capacity:
        raise CapacityError(f"dense coalescence operator of size {size}^2 exceeds cap {capacity}")
    mat = np.zeros((size, size))
    rows = np.arange(size)
    for w, c in coalescence_terms(N, q, form):
        np.add.at(mat, (rows, _map_targets(d, q, c)), w)
    return mat


def insert_function(f, z, q, d):
    """``(D_z f)(x) = (1/q) sum_i f(x with x_i = z)``."""
    f = np.asarray(f, dtype=float).ravel()
    return sum(f[_replace_targets(d, q, i, int(z))] for i in range(q)) / q


def insert_measure(mu, z, q, d):
    mu = np.asarray(mu, dtype=float).ravel()
    return sum(np.bincount(_replace_targets(d, q, i, int(z)), weights=mu, minlength=mu.size)
               for i in range(q)) / q


def _step_matrix(model, k):
    """Dense ``diag(G_{k-1}) M_k``."""
    m = model.kernels[k - 1]
    m = m.toarray() if sp.issparse(m) else np.asarray(m)
    return model.potentials[k - 1][:, None] * m


def tensor_step_measure(mu, kmat, q):
    """``mu K^{⊗q}`` for a flattened measure on ``S_{k-1}^q``; returns one on ``S_k^q``."""
    d_in, d_out = kmat.shape
    t = mu.reshape((d_in,) * q)
    for j in range(q):
        t = np.moveaxis(np.tensordot(t, kmat, axes=([j], [0])), -1, j)
    return t.ravel()


def tensor_step_function(f, kmat, q):
    """``K^{⊗q} f`` for a flattened function on ``S_k^q``; returns one on ``S_{k-1}^q``."""
    d_in, d_out = kmat.shape
    t = f.reshape((d_out,) * q)
    for j in range(q):
        t = np.moveaxis(np.tensordot(kmat, t, axes=([1], [j])), 0, j)
    return t.ravel()


@dataclass(frozen=True)
class TensorFk:
    gammas: tuple
    etas: tuple


def _mixed_insertion(mu_or_f, z, q, d, N, insertion, on_measure):
    """Insertion step ``(q/N) D_z + (1 - q/N) Id`` (``"exact"``), ``D_z`` (``"literal"``) or Id."""
    if insertion == "none" or _is_infinite(N) and insertion == "exact":
        return mu_or_f
    op = insert_measure if on_measure else insert_function
    inserted = op(mu_or_f, z, q, d)
    if insertion == "literal":
        return inserted
    if insertion == "exact":
        r = q / N
        return r * inserted + (1.0 - r) * mu_or_f
    raise ValueError(f"unknown insertion mode {insertion!r}")


def tensor_fk(model, q, N, variant="semigroup", form="canonical", capacity=DEFAULT_CAPACITY):
    """Tensor Feynman-Kac measures ``gamma^{(q)}_k`` and ``eta^{(q)}_k``, k = 0..n.

    ``variant="semigroup"``: ``gamma_0 = eta_0^{⊗q}`` and
    ``gamma_k = gamma_{k-1} C Q_k^{⊗q}``; this is the exact first-order law
    of q distinct particles.  ``variant="chain"``: the chain started at
    ``eta_0^{⊗q} C`` with kernels ``M^{⊗q} C`` and potentials ``G^{⊗q}``;
    its measures equal the semigroup ones followed by one ``C``.
    """
    for d in model.space_sizes:
        _check_order(N, q, d, capacity)
    on_path = model.is_path_model
    sizes = model.space_sizes
    mu = product_measure(model.initial, q)
    if variant == "chain":
        mu = coalesce_measure(mu, N, q, sizes[0], form)
    elif variant != "semigroup":
        raise ValueError(f"unknown variant {variant!r}")
    gammas = [TensorMeasure(q, 0, sizes[0], mu, on_path)]
    for k in range(1, model.horizon + 1):
        if variant == "semigroup":
            mu = coalesce_measure(mu, N, q, sizes[k - 1], form)
            mu = tensor_step_measure(mu, _step_matrix(model, k), q)
        else:
            mu = tensor_step_measure(mu, _step_matrix(model, k), q)
            mu = coalesce_measure(mu, N, q, sizes[k], form)
        gammas.append(TensorMeasure(q, k, sizes[k], mu, on_path))
    return TensorFk(tuple(gammas), tuple(g.normalized() for g in gammas))


def tensor_semigroup_ones(model, q, N, z=None, insertion="exact", form="canonical"):
    """``Q^{(q)}_{p,n}(1)`` (or its frozen version when ``z`` is given) for p = 0..n."""
    sizes = model.space_sizes
    n = model.horizon
    zs = frozen_state_indices(model, z) if z is not None else None
    h = np.ones(sizes[n] ** q)
    out = [None] * (n + 1)
    out[n] = h
    for k in range(n, 0, -1):
        if zs is not None:
            h = _mixed_insertion(h, zs[k], q, sizes[k], N, insertion, on_measure=False)
        h = tensor_step_function(h, _step_matrix(model, k), q)
        h = coalesce_function(h, N, q, sizes[k - 1], form)
        out[k - 1] = h
    return out


def frozen_tensor_fk(model, z, q, N, insertion="exact", form="canonical", capacity=DEFAULT_CAPACITY):
    """Frozen tensor measures for q distinct particles of the dual system.

    The step semigroup is ``C Q_k^{⊗q} D^N_k`` and the initial measure is
    ``eta_0^{⊗q} D^N_0``.  ``insertion`` selects ``D^N``:

    * ``"exact"``: ``(q/N) D_{z_k} + (1 - q/N) Id`` with
      ``D_z f(x) = (1/q) sum_i f(x_1..z..x_q)``; the first-order law of
      ``m(X_{z,k})^{⊙q}`` (one uniformly placed frozen particle among N);
    * ``"literal"``: ``D_{z_k}`` alone (every q-tuple contains the frozen state);
    * ``"none"``: identity, which reduces to :func:`tensor_fk`.
    """
    for d in model.space_sizes:
        _check_order(N, q, d, capacity)
    zs = frozen_state_indices(model, z)
    on_path = model.is_path_model
    sizes = model.space_sizes
    mu = _mixed_insertion(product_measure(model.initial, q), zs[0], q, sizes[0], N, insertion, True)
    gammas = [TensorMeasure(q, 0, sizes[0], mu, on_path)]
    for k in range(1, model.horizon + 1):
        mu = coalesce_measure(mu, N, q, sizes[k - 1], form)
        mu = tensor_step_measure(mu, _step_matrix(model, k), q)
        mu = _mixed_insertion(mu, zs[k], q, sizes[k], N, insertion, True)
        gammas.append(TensorMeasure(q, k, sizes[k], mu, on_path))
    return TensorFk(tuple(gammas), tuple(g.normalized() for g in gammas))
