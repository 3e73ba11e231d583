"""Compiled inner loops for the particle samplers.

All kernels take padded model tables (see :func:`model_tables`) and write
into caller-allocated arrays.  Replicates are processed with ``prange``;
every random draw comes from the keyed generator in :mod:`fk_lab.rng`, so
the output does not depend on the number of threads.

Weighted draws use cumulative-sum inversion: the selected index is the
first one whose cumulative weight strictly exceeds ``u * total``.
"""

from __future__ import annotations

import math
import os

import numba
import numpy as np

if "NUMBA_THREADING_LAYER" not in os.environ:
    # The default layer probes TBB first and warns on version mismatches; the
    # built-in work-queue layer is always available and sufficient for prange.
    numba.config.THREADING_LAYER = "workqueue"

from .rng import BACKWARD, INIT, LINE, MUTATE, SELECT, SLOT, uniform


def model_tables(model):
    """Padded arrays ``(sizes, init_cdf, kernel_cdf, kernel, potentials)`` for a marginal model."""
    if model.is_path_model:
        raise ValueError("samplers run on the marginal model; genealogy gives the path particles")
    n = model.horizon
    sizes = np.array(model.space_sizes, dtype=np.int64)
    dmax = int(sizes.max())
    init_cdf = np.ones(dmax)
    init_cdf[: sizes[0]] = np.cumsum(model.initial)
    kernel = np.zeros((max(n, 1), dmax, dmax))
    kernel_cdf = np.ones((max(n, 1), dmax, dmax))
    for k in range(1, n + 1):
        m = model.kernel_dense(k)
        kernel[k - 1, : m.shape[0], : m.shape[1]] = m
        kernel_cdf[k - 1, : m.shape[0], : m.shape[1]] = np.cumsum(m, axis=1)
    pots = np.ones((n + 1, dmax))
    for k, g in enumerate(model.potentials):
        pots[k, : g.size] = g
    return sizes, init_cdf, kernel_cdf, kernel, pots


@numba.njit(cache=True)
def _search(cum, length, u):
    """First index i < length with cum[i] > u * cum[length-1] (clamped to length-1)."""
    target = u * cum[length - 1]
    lo, hi = 0, length - 1
    while lo < hi:
        mid = (lo + hi) // 2
        if cum[mid] > target:
            hi = mid
        else:
            lo = mid + 1
    return lo


@numba.njit(cache=True)
def _smc_one(seed, rep, stream, N, n, sizes, init_cdf, kcdf, pots, parts, anc, cum):
    for i in range(N):
        parts[0, i] = _search(init_cdf, sizes[0], uniform(seed, rep, stream, 0, i, INIT))
    lognorm = 0.0
    for k in range(1, n + 1):
        s = 0.0
        for i in range(N):
            s += pots[k - 1, parts[k - 1, i]]
            cum[i] = s
        lognorm += math.log(s / N)
        for i in range(N):
            a = _search(cum, N, uniform(seed, rep, stream, k, i, SELECT))
            anc[k - 1, i] = a
            x = parts[k - 1, a]
            parts[k, i] = _search(kcdf[k - 1, x], sizes[k], uniform(seed, rep, stream, k, i, MUTATE))
    return lognorm


@numba.njit(cache=True)
def _dual_one(seed, rep, stream, N, n, sizes, init_cdf, kcdf, pots, z, parts, anc, slots, cum):
    slot = min(int(uniform(seed, rep, stream, 0, 0, SLOT) * N), N - 1)
    slots[0] = slot
    for i in range(N):
        if i == slot:
            parts[0, i] = z[0]
        else:
            parts[0, i] = _search(init_cdf, sizes[0], uniform(seed, rep, stream, 0, i, INIT))
    lognorm = 0.0
    for k in range(1, n + 1):
        s = 0.0
        for i in range(N):
            s += pots[k - 1, parts[k - 1, i]]
            cum[i] = s
        lognorm += math.log(s / N)
        prev_slot = slot
        slot = min(int(uniform(seed, rep, stream, k, 0, SLOT) * N), N - 1)
        slots[k] = slot
        for i in range(N):
            if i == slot:
                anc[k - 1, i] = prev_slot
                parts[k, i] = z[k]
                continue
            a = _search(cum, N, uniform(seed, rep, stream, k, i, SELECT))
            anc[k - 1, i] = a
            x = parts[k - 1, a]
            parts[k, i] = _search(kcdf[k - 1, x], sizes[k], uniform(seed, rep, stream, k, i, MUTATE))
    return lognorm


@numba.njit(cache=True)
def _line_one(seed, rep, stream, N, n, parts, anc, out):
    i = min(int(uniform(seed, rep, stream, n, 0, LINE) * N), N - 1)
    for k in range(n, -1, -1):
        out[k] = parts[k, i]
        if k > 0:
            i = anc[k - 1, i]
    return True


@numba.njit(cache=True)
def _backward_one(seed, rep, stream, N, n, parts, pots, kernel, out, cum):
    i = min(int(uniform(seed, rep, stream, n, 0, BACKWARD) * N), N - 1)
    y = parts[n, i]
    out[n] = y
    for k in range(n - 1, -1, -1):
        s = 0.0
        for j in range(N):
            x = parts[k, j]
            s += pots[k, x] * kernel[k, x, y]
            cum[j] = s
        if s <= 0.0:
            return False
        j = _search(cum, N, uniform(seed, rep, stream, k, 0, BACKWARD))
        y = parts[k, j]
        out[k] = y
    return True


@numba.njit(parallel=True, cache=True)
def smc_batch(seed, rep_ids, stream, N, n, sizes, init_cdf, kcdf, pots, parts, anc, lognorm):
    """Forward particle system for each replicate id; fills ``parts (B,n+1,N)``, ``anc (B,max(n,1),N)``."""
    for b in numba.prange(rep_ids.shape[0]):
        cum = np.empty(N)
        lognorm[b] = _smc_one(seed, rep_ids[b], stream, N, n, sizes, init_cdf, kcdf, pots,
                              parts[b], anc[b], cum)


@numba.njit(parallel=True, cache=True)
def dual_batch(seed, rep_ids, stream, N, n, sizes, init_cdf, kcdf, pots, z, parts, anc, slots, lognorm):
    """Dual system with frozen path ``z[b]`` for each replicate id."""
    for b in numba.prange(rep_ids.shape[0]):
        cum = np.empty(N)
        lognorm[b] = _dual_one(seed, rep_ids[b], stream, N, n, sizes, init_cdf, kcdf, pots, z[b],
                               parts[b], anc[b], slots[b], cum)


@numba.njit(parallel=True, cache=True)
def line_batch(seed, rep_ids, stream, parts, anc, out):
    """One uniformly chosen ancestral line per run."""
    n = parts.shape[1] - 1
    N = parts.shape[2]
    for b in numba.prange(rep_ids.shape[0]):
        _line_one(seed, rep_ids[b], stream, N, n, parts[b], anc[b], out[b])


@numba.njit(parallel=True, cache=True)
def backward_batch(seed, rep_ids, stream, parts, pots, kernel, out, ok):
    """One backward-sampled path per run; ``ok[b]`` is False on an unreachable transition."""
    n = parts.shape[1] - 1
    N = parts.shape[2]
    for b in numba.prange(rep_ids.shape[0]):
        cum = np.empty(N)
        ok[b] = _backward_one(seed, rep_ids[b], stream, N, n, parts[b], pots, kernel, out[b], cum)


@numba.njit(parallel=True, cache=True)
def all_lines_batch(parts, anc, radix, out):
    """Mixed-radix index of every particle's ancestral line (x_0 most significant)."""
    B, levels, N = parts.shape
    n = levels - 1
    for b in numba.prange(B):
        for i0 in range(N):
            i = i0
            lin = 0
            mult = 1
            for k in range(n, -1, -1):
                lin += parts[b, k, i] * mult
                mult *= radix[k]
                if k > 0:
                    i = anc[b, k - 1, i]
            out[b, i0] = lin


@numba.njit(parallel=True, cache=True)
def pg_batch(seed, chain_ids, stream, N, n, sizes, init_cdf, kcdf, kernel, pots, z, backward, z_out, ok):
    """One particle Gibbs sweep per chain: dual run with frozen ``z[b]``, then a new path."""
    for b in numba.prange(chain_ids.shape[0]):
        parts = np.empty((n + 1, N), dtype=np.int64)
        anc = np.empty((max(n, 1), N), dtype=np.int64)
        slots = np.empty(n + 1, dtype=np.int64)
        cum = np.empty(N)
        rep = chain_ids[b]
        _dual_one(seed, rep, stream, N, n, sizes, init_cdf, kcdf, pots, z[b], parts, anc, slots, cum)
        if backward:
            ok[b] = _backward_one(seed, rep, stream, N, n, parts, pots, kernel, z_out[b], cum)
        else:
            ok[b] = _line_one(seed, rep, stream, N, n, parts, anc, z_out[b])
