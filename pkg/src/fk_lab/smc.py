"""Mean-field particle system on path space, ancestral lines and backward sampling.

The system is simulated on the marginal state spaces with the genealogy kept
as ancestor indices; the path particles (ancestral lines) are reconstructed
on demand.  Each generation draws N conditionally independent particles from
``Phi_k(m(xi_{k-1})) = Psi_{G_{k-1}}(m(xi_{k-1})) M_k``: an ancestor index
from the ``G``-weighted empirical measure (multinomial selection), then one
kernel step.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels as K
from .errors import CapacityError, UnreachableTransitionError
from .model import PathIndex, path_space_sizes
from .oracle.combinatorics import falling_factorial, set_partitions
from .rng import check_key_capacity, check_seed

ANCESTRAL = "ancestral"
BACKWARD = "backward"


@dataclass(frozen=True, eq=False)
class ParticleBatch:
    """A batch of independent runs stored as arrays.

    ``particles[b, k, i]`` is the marginal state of particle i at level k of
    run b, ``ancestors[b, k-1, i]`` its parent index at level k-1 and
    ``log_normalizer[b] = sum_{p<n} log m(xi_p)(G_p)``.
    """

    model: object = field(repr=False)
    N: int
    seed: int
    replicate_ids: np.ndarray
    stream: int
    particles: np.ndarray
    ancestors: np.ndarray
    log_normalizer: np.ndarray
    # Frozen-slot indices for dual runs, None otherwise.
    slots: np.ndarray | None = None

    @property
    def horizon(self):
        return self.particles.shape[1] - 1

    def __len__(self):
        return self.particles.shape[0]

    def path_indices(self):
        """``(B, N)`` linear index of each particle's ancestral line at the final level."""
        radix = np.array(self.model.space_sizes, dtype=np.int64)
        out = np.empty(self.particles.shape[::2], dtype=np.int64)
        K.all_lines_batch(self.particles, self.ancestors, radix, out)
        return out

    def empirical_mean(self, f, level=None, on_path=False):
        """``m(xi_level)(f)`` per run; ``on_path`` reads f over ancestral lines of the last level."""
        f = np.asarray(f, dtype=float)
        if on_path:
            return f[self.path_indices()].mean(axis=1)
        level = self.horizon if level is None else level
        return f[self.particles[:, level, :]].mean(axis=1)

    def ancestral_lines(self):
        """One uniformly chosen ancestral line per run, ``(B, n+1)``."""
        out = np.empty((len(self), self.horizon + 1), dtype=np.int64)
        K.line_batch(self.seed, self.replicate_ids, self.stream, self.particles, self.ancestors, out)
        return out

    def backward_paths(self):
        """One backward-sampled path per run, ``(B, n+1)``."""
        _, _, _, kernel, pots = K.model_tables(self.model)
        out = np.empty((len(self), self.horizon + 1), dtype=np.int64)
        ok = np.empty(len(self), dtype=np.bool_)
        K.backward_batch(self.seed, self.replicate_ids, self.stream, self.particles, pots, kernel, out, ok)
        if not ok.all():
            b = int(np.flatnonzero(~ok)[0])
            raise UnreachableTransitionError(
                f"replicate {int(self.replicate_ids[b])}: zero backward mass")
        return out

    def backward_path_laws(self):
        """``(B, |paths|)`` exact law ``m(xi'_n) H_{n, m(xi')}`` of a backward path given each run."""
        model, n, N, B = self.model, self.horizon, self.N, len(self)
        sizes = model.space_sizes
        counts = [_row_counts(self.particles[:, k, :], sizes[k]) for k in range(n + 1)]
        law = (counts[n] / N)[:, :, None]                       # (B, y_n, suffix)
        for k in range(n, 0, -1):
            h = counts[k - 1][:, :, None] * (model.potentials[k - 1][:, None] * model.kernel_dense(k))[None]
            col = h.sum(axis=1, keepdims=True)
            cond = np.divide(h, col, out=np.zeros_like(h), where=col > 0)   # P(y_{k-1} | y_k)
            law = (cond[:, :, :, None] * law[:, None, :, :]).reshape(B, sizes[k - 1], -1)
        law = law.reshape(B, -1)
        lost = np.abs(law.sum(axis=1) - 1.0) > 1e-9
        if lost.any():
            b = int(np.flatnonzero(lost)[0])
            raise UnreachableTransitionError(f"replicate {int(self.replicate_ids[b])}: zero backward mass")
        return law

    def run(self, b):
        """The b-th run as a :class:`ParticleRun`."""
        n = self.horizon
        pots = np.stack([self.model.potentials[k][self.particles[b, k]] for k in range(n + 1)])
        return ParticleRun(self.model, self.N, n, self.particles[b].copy(),
                           self.ancestors[b, :n].copy(), pots, float(self.log_normalizer[b]),
                           self.seed, int(self.replicate_ids[b]), self.stream,
                           None if self.slots is None else self.slots[b].copy())


def _row_counts(values, d):
    """Per-row occupation counts ``(B, d)`` of integer states ``values`` ``(B, N)``."""
    B = values.shape[0]
    flat = values + d * np.arange(B, dtype=np.int64)[:, None]
    return np.bincount(flat.ravel(), minlength=B * d).reshape(B, d).astype(float)


@dataclass(frozen=True, eq=False)
class ParticleRun:
    """One run: marginal particles per generation plus genealogy."""

    model: object = field(repr=False)
    N: int
    horizon: int
    particles: np.ndarray
    ancestors: np.ndarray
    potential_values: np.ndarray
    log_normalizer: float
    seed: int
    replicate: int
    stream: int
    slots: np.ndarray | None = None

    @property
    def normalizer(self):
        """``Z_n = prod_{p<n} m(xi_p)(G_p)``."""
        return math.exp(self.log_normalizer)

    def line(self, i, level=None):
        """Ancestral line of particle i at ``level`` (default: last) as marginal coordinates."""
        level = self.horizon if level is None else level
        coords = [0] * (level + 1)
        for k in range(level, -1, -1):
            coords[k] = int(self.particles[k, i])
            if k > 0:
                i = int(self.ancestors[k - 1, i])
        return tuple(coords)

    def path_particles(self, level=None):
        """``(N, level+1)`` array of all ancestral lines at ``level``."""
        level = self.horizon if level is None else level
        out = np.empty((self.N, level + 1), dtype=np.int64)
        idx = np.arange(self.N)
        for k in range(level, -1, -1):
            out[:, k] = self.particles[k, idx]
            if k > 0:
                idx = self.ancestors[k - 1, idx]
        return out

    def path_linear(self, level=None):
        level = self.horizon if level is None else level
        coords = self.path_particles(level)
        lin = np.zeros(self.N, dtype=np.int64)
        for k in range(level + 1):
            lin = lin * self.model.space_sizes[k] + coords[:, k]
        return lin

    def as_batch(self):
        anc = self.ancestors if self.horizon > 0 else np.zeros((1, self.N), dtype=np.int64)
        return ParticleBatch(self.model, self.N, self.seed, np.array([self.replicate], dtype=np.int64),
                             self.stream, self.particles[None], anc[None],
                             np.array([self.log_normalizer]),
                             None if self.slots is None else self.slots[None])

    def to_dict(self):
        return {"N": self.N, "horizon": self.horizon, "seed": self.seed, "replicate": self.replicate,
                "stream": self.stream, "particles": self.particles.tolist(),
                "ancestors": self.ancestors.tolist(), "log_normalizer": self.log_normalizer}


@dataclass(frozen=True)
class SampledPath:
    path: PathIndex
    provenance: str


def simulate_batch(model, N, seed, replicate_ids, stream=0):
    """Run the forward particle system once per replicate id."""
    seed = check_seed(seed)
    if N < 1:
        raise ValueError(f"N must be >= 1, got {N}")
    rep = np.ascontiguousarray(replicate_ids, dtype=np.int64)
    n = model.horizon
    check_key_capacity(N, n, int(rep.max(initial=0)))
    sizes, init_cdf, kcdf, _, pots = K.model_tables(model)
    parts = np.empty((rep.size, n + 1, N), dtype=np.int64)
    anc = np.zeros((rep.size, max(n, 1), N), dtype=np.int64)
    lognorm = np.empty(rep.size)
    K.smc_batch(seed, rep, stream, N, n, sizes, init_cdf, kcdf, pots, parts, anc, lognorm)
    return ParticleBatch(model, N, seed, rep, stream, parts, anc, lognorm)


def run_smc(model, N, seed, replicate=0, stream=0):
    """A single forward run (replicate id ``replicate`` of master seed ``seed``)."""
    return simulate_batch(model, N, seed, [replicate], stream).run(0)


def sample_ancestral_line(run, seed=None):
    """Uniformly chosen particle at the last level together with its line of ancestors."""
    batch = run.as_batch()
    if seed is not None:
        batch = _reseed(batch, seed)
    coords = batch.ancestral_lines()[0]
    return SampledPath(PathIndex(tuple(coords), run.model.space_sizes), ANCESTRAL)


def backward_sample(run, model=None, seed=None):
    """Path drawn from ``m(xi'_n) H_{n, m(xi')}`` (terminal state, then backward kernels)."""
    batch = run.as_batch()
    if model is not None:
        batch = ParticleBatch(model, batch.N, batch.seed, batch.replicate_ids, batch.stream,
                              batch.particles, batch.ancestors, batch.log_normalizer, batch.slots)
    if seed is not None:
        batch = _reseed(batch, seed)
    coords = batch.backward_paths()[0]
    return SampledPath(PathIndex(tuple(coords), batch.model.space_sizes), BACKWARD)


def _reseed(batch, seed):
    return ParticleBatch(batch.model, batch.N, check_seed(seed), batch.replicate_ids, batch.stream,
                         batch.particles, batch.ancestors, batch.log_normalizer, batch.slots)


# ---------------------------------------------------------------------------
# Exact laws given a particle configuration
# ---------------------------------------------------------------------------

def backward_kernel(model, clouds, level):
    """Dense ``H_{level, m(x)}``: rows are terminal states, columns are paths of ``level``.

    ``clouds[k]`` holds the marginal particle states at level k.
    """
    sizes = model.space_sizes
    total = path_space_sizes(sizes)[level]
    if total * sizes[level] > 10**7:
        raise CapacityError("backward kernel matrix too large")
    # law[y_k, path_{0..k}] built forward: start with identity at level 0
    law = np.eye(sizes[0])
    for k in range(1, level + 1):
        counts = np.bincount(np.asarray(clouds[k - 1]), minlength=sizes[k - 1]).astype(float)
        h = counts[:, None] * model.potentials[k - 1][:, None] * model.kernel_dense(k)   # (y_{k-1}, y_k)
        col = h.sum(axis=0)
        cond = np.divide(h, col, out=np.zeros_like(h), where=col > 0)                  # P(y_{k-1} | y_k)
        # new[y_k, (path_{k-1}, y_k)] = sum_{y_{k-1}} cond[y_{k-1}, y_k] law[y_{k-1}, path_{k-1}]
        prev = cond.T @ law                                                              # (y_k, paths_{k-1})
        new = np.zeros((sizes[k], prev.shape[1] * sizes[k]))
        for y in range(sizes[k]):
            new[y, y::sizes[k]] = prev[y]
        law = new
    return law


def backward_path_law(run, model=None):
    """Exact law of a backward-sampled path given the run's particle clouds."""
    model = run.model if model is None else model
    n = run.horizon
    top = np.bincount(run.particles[n], minlength=model.space_sizes[n]) / run.N
    return top @ backward_kernel(model, run.particles, n)


def ancestral_path_law(run):
    """Exact law of a uniformly chosen ancestral line given the run (``m(xi_n)`` on paths)."""
    total = path_space_sizes(run.model.space_sizes)[run.horizon]
    return np.bincount(run.path_linear(), minlength=total) / run.N


# ---------------------------------------------------------------------------
# Tensor empirical measures
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ProductFunction:
    """Tensor-product function ``g^{⊗q}``, given by its one-particle factor g."""

    g: np.ndarray


def _partition_coefficient(blocks):
    c = 1
    for b in blocks:
        c *= (-1) ** (len(b) - 1) * math.factorial(len(b) - 1)
    return c


def distinct_tuple_mean(values, q, f):
    """``m^{⊙q}(f)``: mean of f over ordered q-tuples of distinct entries of ``values``.

    ``values`` are state (or path) indices of the N particles.  ``f`` is a
    :class:`ProductFunction`, or an array of shape ``(d,)*q`` over states.
    """
    values = np.asarray(values, dtype=np.int64)
    N = values.size
    if q >= N:
        raise ValueError(f"q={q} must be smaller than N={N}")
    denom = falling_factorial(N, q)
    if isinstance(f, ProductFunction):
        gv = np.asarray(f.g, dtype=float)[values]
        powers = {j: float(np.sum(gv**j)) for j in range(1, q + 1)}
        total = 0.0
        for blocks in set_partitions(q):
            term = _partition_coefficient(blocks)
            for b in blocks:
                term *= powers[len(b)]
            total += term
        return total / denom
    f = np.asarray(f, dtype=float)
    if q == 1:
        return float(f.reshape(-1)[values].mean())
    d = f.shape[0]
    if f.size == d**q and d**q <= 10**6:
        counts = np.bincount(values, minlength=d)
        f = f.reshape((d,) * q)
        total = 0.0
        for e in itertools.product(*(np.flatnonzero(counts) for _ in range(q))):
            w = f[e]
            if w == 0.0:
                continue
            mult = 1
            for s, k in zip(*np.unique(e, return_counts=True)):
                mult *= falling_factorial(int(counts[s]), int(k))
            total += w * mult
        return total / denom
    if N <= 12:
        tot = sum(f[tuple(values[list(c)])] for c in itertools.permutations(range(N), q))
        return float(tot) / denom
    raise ValueError("general tensor functions need d**q <= 1e6 or N <= 12; use ProductFunction")


def empirical_tensor(run, level, q, f, on_path=False):
    """``m(xi_level)^{⊙q}(f)`` for a run; ``on_path`` evaluates f on ancestral lines."""
    values = run.path_linear(level) if on_path else run.particles[level]
    return distinct_tuple_mean(values, q, f)


def product_tensor_means(values, g, q):
    """Vectorised ``m^{⊙q}(g^{⊗q})`` over the rows of ``values`` (shape ``(B, N)``)."""
    gv = np.asarray(g, dtype=float)[values]
    N = values.shape[1]
    powers = {j: (gv**j).sum(axis=1) for j in range(1, q + 1)}
    total = np.zeros(values.shape[0])
    for blocks in set_partitions(q):
        term = float(_partition_coefficient(blocks))
        for b in blocks:
            term = term * powers[len(b)]
        total = total + term
    return total / falling_factorial(N, q)
