"""Dual particle system with a frozen path and the particle Gibbs kernels.

At every generation one uniformly chosen slot ``I_k`` is set to the frozen
state ``z_k``; the other N-1 particles are drawn from
``Phi_k(m(X_{k-1}))``, where the empirical measure includes the frozen
particle.  The frozen particle's ancestor is the previous frozen slot, so its
ancestral line is the frozen path itself.

Two Markov kernels on paths are built from this system:

* ancestral: run the dual system, return a uniformly chosen ancestral line;
* backward: run the dual system, return a backward-sampled path.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from .errors import UnreachableTransitionError
from .model import PathIndex, decode_paths, encode_paths
from .rng import START, check_key_capacity, check_seed, uniform_np
from .smc import ANCESTRAL, BACKWARD, ParticleBatch, SampledPath

MODES = (ANCESTRAL, BACKWARD)


@dataclass(frozen=True)
class PgChainRecord:
    """Paths visited by a particle Gibbs chain (``paths[t]`` is z^{(t)})."""

    paths: tuple
    mode: str
    seed: int
    chain_id: int

    def linear(self):
        return [p.linear for p in self.paths]


def _frozen_array(model, z, B):
    if isinstance(z, PathIndex):
        z = z.coords
    z = np.asarray(z, dtype=np.int64)
    if z.ndim == 1:
        z = np.broadcast_to(z, (B, z.size))
    n = model.horizon
    if z.shape[1] != n + 1:
        raise ValueError(f"frozen path must have {n + 1} coordinates, got {z.shape[1]}")
    for k, d in enumerate(model.space_sizes):
        if np.any((z[:, k] < 0) | (z[:, k] >= d)):
            raise IndexError(f"frozen state at level {k} outside [0, {d})")
    return np.ascontiguousarray(z)


def _check_dual_size(N):
    if N < 2:
        raise ValueError("the dual system needs N >= 2 (N = 1 would always return the frozen path)")


def run_dual_batch(model, z, N, seed, replicate_ids, stream=0):
    """Dual runs for each replicate id; ``z`` is one path or one path per replicate."""
    seed = check_seed(seed)
    _check_dual_size(N)
    rep = np.ascontiguousarray(replicate_ids, dtype=np.int64)
    n = model.horizon
    check_key_capacity(N, n, int(rep.max(initial=0)))
    zz = _frozen_array(model, z, rep.size)
    sizes, init_cdf, kcdf, _, pots = K.model_tables(model)
    parts = np.empty((rep.size, n + 1, N), dtype=np.int64)
    anc = np.zeros((rep.size, max(n, 1), N), dtype=np.int64)
    slots = np.empty((rep.size, n + 1), dtype=np.int64)
    lognorm = np.empty(rep.size)
    K.dual_batch(seed, rep, stream, N, n, sizes, init_cdf, kcdf, pots, zz, parts, anc, slots, lognorm)
    return ParticleBatch(model, N, seed, rep, stream, parts, anc, lognorm, slots)


def run_dual(model, z, N, seed, replicate=0, stream=0):
    """A single dual run (the returned run carries the slot indices in ``slots``)."""
    return run_dual_batch(model, z, N, seed, [replicate], stream).run(0)


def pg_step_ancestral(model, z, N, seed, replicate=0, stream=0):
    """One draw from the ancestral particle Gibbs kernel started at ``z``."""
    batch = run_dual_batch(model, z, N, seed, [replicate], stream)
    return SampledPath(PathIndex(tuple(batch.ancestral_lines()[0]), model.space_sizes), ANCESTRAL)


def pg_step_backward(model, z, N, seed, replicate=0, stream=0):
    """One draw from the backward particle Gibbs kernel started at ``z``."""
    batch = run_dual_batch(model, z, N, seed, [replicate], stream)
    return SampledPath(PathIndex(tuple(batch.backward_paths()[0]), model.space_sizes), BACKWARD)


def pg_sweeps(model, z0, N, steps, mode, seed, chain_ids, record=True):
    """Run many independent chains for ``steps`` sweeps.

    Returns an ``(steps+1, B)`` array of linear path indices when ``record``
    is true, otherwise only the final ``(B,)`` paths.  Sweep t of chain c
    uses stream t, so results do not depend on how chains are batched.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    seed = check_seed(seed)
    _check_dual_size(N)
    if steps < 0:
        raise ValueError("steps must be >= 0")
    chains = np.ascontiguousarray(chain_ids, dtype=np.int64)
    n = model.horizon
    check_key_capacity(N, n, int(chains.max(initial=0)))
    sizes, init_cdf, kcdf, kernel, pots = K.model_tables(model)
    z = _frozen_array(model, z0, chains.size).copy()
    history = [encode_paths(z, model.space_sizes)] if record else None
    ok = np.empty(chains.size, dtype=np.bool_)
    for t in range(steps):
        z_new = np.empty_like(z)
        K.pg_batch(seed, chains, t, N, n, sizes, init_cdf, kcdf, kernel, pots, z, mode == BACKWARD, z_new, ok)
        if not ok.all():
            b = int(np.flatnonzero(~ok)[0])
            raise UnreachableTransitionError(f"chain {int(chains[b])}, sweep {t}: zero backward mass")
        z = z_new
        if record:
            history.append(encode_paths(z, model.space_sizes))
    return np.stack(history) if record else encode_paths(z, model.space_sizes)


def pg_chain(model, z0, N, steps, mode, seed, chain_id=0):
    """A single particle Gibbs chain of ``steps`` sweeps started at ``z0``."""
    z0 = z0 if isinstance(z0, PathIndex) else PathIndex(tuple(z0), model.space_sizes)
    if steps == 0:
        return PgChainRecord((z0,), mode, check_seed(seed), chain_id)
    lin = pg_sweeps(model, z0.coords, N, steps, mode, seed, [chain_id])[:, 0]
    paths = tuple(PathIndex.from_linear(int(v), model.space_sizes) for v in lin)
    return PgChainRecord(paths, mode, seed, chain_id)


def draw_exact_paths(eta_path, seed, B, space_sizes, stream=0):
    """``B`` paths drawn exactly from a dense path law by inverse-CDF (keyed uniforms)."""
    u = uniform_np(check_seed(seed), np.arange(B), stream, 0, 0, START)
    cdf = np.cumsum(np.asarray(eta_path, dtype=float))
    lin = np.minimum(np.searchsorted(cdf, u * cdf[-1], side="right"), cdf.size - 1)
    return decode_paths(lin, space_sizes)


def least_likely_path(eta_path, space_sizes):
    """Path with the smallest probability under ``eta_path`` (first in index order on ties)."""
    lin = int(np.argmin(np.asarray(eta_path)))
    return PathIndex.from_linear(lin, space_sizes)
