"""Plain-numpy re-implementation of the samplers, used as the bitwise oracle.

Written from the sampling rules alone (multinomial selection by
cumulative-sum inversion with the "first cumulative weight strictly above
u * total" tie rule, keyed uniforms from ``uniform_np``); it shares no code
with the compiled kernels except the generator's numpy mirror.
"""

import math

import numpy as np

from fk_lab.rng import BACKWARD, INIT, LINE, MUTATE, SELECT, SLOT, uniform_np


def _pick(weights, u):
    cum = np.cumsum(np.asarray(weights, dtype=float))
    i = int(np.searchsorted(cum, u * cum[-1], side="right"))
    return min(i, len(cum) - 1)


def _u(seed, rep, stream, gen, particle, purpose):
    return float(uniform_np(seed, rep, stream, gen, particle, purpose))


def reference_smc(model, N, seed, rep, stream=0):
    """Particles ``(n+1, N)``, ancestors ``(n, N)`` and ``log Z_n`` of one forward run."""
    n = model.horizon
    parts = np.zeros((n + 1, N), dtype=np.int64)
    anc = np.zeros((max(n, 1), N), dtype=np.int64)
    for i in range(N):
        parts[0, i] = _pick(model.initial, _u(seed, rep, stream, 0, i, INIT))
    lognorm = 0.0
    for k in range(1, n + 1):
        w = model.potentials[k - 1][parts[k - 1]]
        lognorm += math.log(float(np.cumsum(w)[-1]) / N)
        m = model.kernel_dense(k)
        for i in range(N):
            a = _pick(w, _u(seed, rep, stream, k, i, SELECT))
            anc[k - 1, i] = a
            parts[k, i] = _pick(m[parts[k - 1, a]], _u(seed, rep, stream, k, i, MUTATE))
    return parts, anc, lognorm


def reference_dual(model, z, N, seed, rep, stream=0):
    """Dual run with frozen path ``z``: particles, ancestors, slots, ``log Z``."""
    n = model.horizon
    parts = np.zeros((n + 1, N), dtype=np.int64)
    anc = np.zeros((max(n, 1), N), dtype=np.int64)
    slots = np.zeros(n + 1, dtype=np.int64)
    slots[0] = min(int(_u(seed, rep, stream, 0, 0, SLOT) * N), N - 1)
    for i in range(N):
        parts[0, i] = z[0] if i == slots[0] else _pick(model.initial, _u(seed, rep, stream, 0, i, INIT))
    lognorm = 0.0
    for k in range(1, n + 1):
        w = model.potentials[k - 1][parts[k - 1]]
        lognorm += math.log(float(np.cumsum(w)[-1]) / N)
        slots[k] = min(int(_u(seed, rep, stream, k, 0, SLOT) * N), N - 1)
        m = model.kernel_dense(k)
        for i in range(N):
            if i == slots[k]:
                anc[k - 1, i] = slots[k - 1]
                parts[k, i] = z[k]
                continue
            a = _pick(w, _u(seed, rep, stream, k, i, SELECT))
            anc[k - 1, i] = a
            parts[k, i] = _pick(m[parts[k - 1, a]], _u(seed, rep, stream, k, i, MUTATE))
    return parts, anc, slots, lognorm


def reference_line(parts, anc, seed, rep, stream=0):
    n, N = parts.shape[0] - 1, parts.shape[1]
    i = min(int(_u(seed, rep, stream, n, 0, LINE) * N), N - 1)
    out = np.zeros(n + 1, dtype=np.int64)
    for k in range(n, -1, -1):
        out[k] = parts[k, i]
        if k > 0:
            i = anc[k - 1, i]
    return out


def reference_backward(model, parts, seed, rep, stream=0):
    n, N = parts.shape[0] - 1, parts.shape[1]
    i = min(int(_u(seed, rep, stream, n, 0, BACKWARD) * N), N - 1)
    out = np.zeros(n + 1, dtype=np.int64)
    out[n] = parts[n, i]
    for k in range(n - 1, -1, -1):
        w = model.potentials[k][parts[k]] * model.kernel_dense(k + 1)[parts[k], out[k + 1]]
        j = _pick(w, _u(seed, rep, stream, k, 0, BACKWARD))
        out[k] = parts[k, j]
    return out


def brute_force_path_weights(model):
    """Unnormalised path weights ``eta_0(x_0) prod_k G_{k-1}(x_{k-1}) M_k(x_{k-1}, x_k)`` over all paths."""
    import itertools

    paths = np.array(list(itertools.product(*(range(d) for d in model.space_sizes))), dtype=np.int64)
    w = model.initial[paths[:, 0]].astype(float)
    for k in range(1, model.horizon + 1):
        w = w * model.potentials[k - 1][paths[:, k - 1]] * model.kernel_dense(k)[paths[:, k - 1], paths[:, k]]
    return paths, w


def enumerate_particle_system(model, N, frozen=None):
    """Exact law of the marginal clouds ``(x_0, ..., x_n)`` of the N-particle system.

    Yields ``(probability, clouds)`` over every sequence of configurations, using
    that given ``x_{k-1}`` the N particles at level k are i.i.d. ``Phi_k(m(x_{k-1}))``.
    With ``frozen`` (a path z) one uniformly placed particle per level is set to z_k
    and the others are i.i.d.; the frozen slot position is summed over.
    """
    import itertools

    def level_laws(k, prev):
        if k == 0:
            p = np.asarray(model.initial, dtype=float)
        else:
            m = np.bincount(prev, minlength=model.space_sizes[k - 1]) / N
            w = m * model.potentials[k - 1]
            p = (w / w.sum()) @ model.kernel_dense(k)
        d = model.space_sizes[k]
        if frozen is None:
            for x in itertools.product(range(d), repeat=N):
                yield float(np.prod(p[list(x)])), np.array(x)
        else:
            for slot in range(N):
                for others in itertools.product(range(d), repeat=N - 1):
                    x = list(others[:slot]) + [frozen[k]] + list(others[slot:])
                    yield float(np.prod(p[list(others)])) / N, np.array(x)

    def rec(k, prob, clouds):
        if k > model.horizon:
            yield prob, clouds
            return
        for p, x in level_laws(k, clouds[-1] if clouds else None):
            if p > 0:
                yield from rec(k + 1, prob * p, clouds + [x])

    yield from rec(0, 1.0, [])
