"""Exact (matrix) checks: oracle identities, frozen-semigroup and frozen-measure sandwiches.

Sandwiches of the form ``a R(f) <= T(f) <= R(f) + b`` are affine in f, so
over ``f : S -> [0, 1]`` both sides are extremal at indicators of sets.  The
worst set is explicit: ``{T - a R < 0}`` for the lower side and
``{T - R > 0}`` for the upper side.  Each report below evaluates the
estimate at that worst set (over every frozen path z and every start state),
so a PASS covers all indicator functions, hence every ``[0,1]``-valued f.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

from ..model import decode_paths, encode_paths, lift_to_path, normalize_potentials, path_space_sizes
from ..oracle.frozen import frozen_semigroup, frozen_terminal_table
from ..oracle.measures import (all_semigroup_ones, assumption_constants, dobrushin_beta, exact_measures,
                               product_formula_terms, semigroup)
from . import constants as C
from .stats import BoundsReport, Estimate, check_sandwich, skipped

IDENTITY_RTOL = 1e-10

# Path-space lifts are used for matrix-valued checks only up to this many paths.
LIFT_LIMIT = 256
# Dobrushin coefficients of the frozen kernel need |S_n|^2 work per row.
OSCILLATION_LIMIT = 1024
FROZEN_TABLE_CHUNK = 512


def n_grid(threshold, factors=(1.0, 1.5, 2.0, 3.0, 4.0)):
    """Integer population sizes from ``ceil(threshold)`` up to ``4 threshold``."""
    t = max(threshold, 2.0)
    return sorted({int(math.ceil(f * t - 1e-12)) for f in factors})


def _identity(inequality_id, value, reference, context, rtol=IDENTITY_RTOL):
    """Report ``value == reference`` within a relative tolerance (zero-width bounds + slack)."""
    slack = rtol * max(1.0, abs(reference))
    return check_sandwich(Estimate.exact(inequality_id, value), reference, reference, inequality_id,
                          context, slack=slack)


# ---------------------------------------------------------------------------
# Oracle identities
# ---------------------------------------------------------------------------

def _brute_force_masses(model):
    """``gamma_k(1)`` for every k by summing path weights over all paths (independent of the recursion)."""
    out = []
    for k in range(model.horizon + 1):
        sizes = model.space_sizes[: k + 1]
        paths = decode_paths(np.arange(path_space_sizes(sizes)[-1]), sizes)
        w = np.asarray(model.initial)[paths[:, 0]].astype(float)
        for p in range(1, k + 1):
            w = w * model.potentials[p - 1][paths[:, p - 1]] * model.kernel_dense(p)[paths[:, p - 1], paths[:, p]]
        out.append(float(w.sum()))
    return out


def oracle_identity_suite(name, model):
    """Product formula, semigroup composition, normalisation and lift consistency."""
    ctx = {"model": name, "n": model.horizon}
    reports = []
    gammas, etas = exact_measures(model)
    products = product_formula_terms(model, etas)
    brute = _brute_force_masses(model)
    for k in range(model.horizon + 1):
        reports.append(_identity("oracle.product_formula", gammas[k].mass, brute[k], {**ctx, "n": k}))
        reports.append(_identity("oracle.product_terms", products[k], brute[k], {**ctx, "n": k}))
    n = model.horizon
    for p, q in itertools.combinations_with_replacement(range(n + 1), 2):
        left = semigroup(model, p, q).matrix
        for r in range(q, n + 1):
            composed = left @ semigroup(model, q, r).matrix
            direct = semigroup(model, p, r).matrix
            err = float(np.abs(composed - direct).max() / max(1.0, np.abs(direct).max()))
            reports.append(_identity("oracle.composition", err, 0.0, {**ctx, "f_id": f"{p},{q},{r}"}))
        moved = gammas[p].values @ semigroup(model, p, q).matrix
        err = float(np.abs(moved - gammas[q].values).max() / max(1.0, gammas[q].mass))
        reports.append(_identity("oracle.measure_transport", err, 0.0, {**ctx, "f_id": f"{p},{q}"}))
    normed = normalize_potentials(model, etas)
    _, netas = exact_measures(normed)
    for k in range(n + 1):
        reports.append(_identity("oracle.normalization", netas[k](normed.potentials[k]), 1.0, {**ctx, "n": k}))
        err = float(np.abs(netas[k].values - etas[k].values).max())
        reports.append(_identity("oracle.normalization_keeps_eta", err, 0.0, {**ctx, "n": k}))
    if path_space_sizes(model.space_sizes)[-1] <= 10**6:
        lift = lift_to_path(model)
        lones = all_semigroup_ones(lift)
        mones = all_semigroup_ones(model)
        for p, q in itertools.combinations_with_replacement(range(n + 1), 2):
            terminal = np.arange(lift.space_sizes[p]) % model.space_sizes[p]
            err = float(np.abs(lones[p][q] - mones[p][q][terminal]).max() / mones[p][q].max())
            reports.append(_identity("oracle.lift_ones", err, 0.0, {**ctx, "f_id": f"{p},{q}"}))
        lg, le = exact_measures(lift)
        for k in range(n + 1):
            proj = np.bincount(np.arange(lift.space_sizes[k]) % model.space_sizes[k], weights=le[k].values,
                               minlength=model.space_sizes[k])
            err = float(np.abs(proj - etas[k].values).max())
            reports.append(_identity("oracle.lift_marginal", err, 0.0, {**ctx, "n": k}))
            reports.append(_identity("oracle.lift_mass", lg[k].mass, gammas[k].mass, {**ctx, "n": k}))
    return reports


# ---------------------------------------------------------------------------
# Worst-set reports for affine sandwiches
# ---------------------------------------------------------------------------

def _worst_lower(T, R, a):
    """Row-wise worst set for ``T(f) >= a R(f)``: returns (row, T(A), R(A), A-size)."""
    gap = T - a * R
    mask = gap < 0
    total = np.where(mask, gap, 0.0).sum(axis=-1)
    row = int(np.argmin(total))
    A = mask[row]
    return row, float(T[row][A].sum()), float(R[row][A].sum()), int(A.sum())


def _worst_upper(T, R):
    gap = T - R
    mask = gap > 0
    total = np.where(mask, gap, 0.0).sum(axis=-1)
    row = int(np.argmax(total))
    A = mask[row]
    return row, float(T[row][A].sum()), float(R[row][A].sum()), int(A.sum())


def affine_sandwich_reports(inequality_id, T, R, a, b, context, row_ids=None):
    """Two reports (worst lower set, worst upper set) for ``a R(f) <= T(f) <= R(f) + b``.

    ``T`` and ``R`` are 2-d arrays whose rows are measures (or kernel rows)
    over the same finite set; the check covers every row.
    """
    T = np.atleast_2d(T)
    R = np.atleast_2d(np.broadcast_to(R, T.shape))
    out = []
    for side, (row, t, r, size) in (("lower", _worst_lower(T, R, a)), ("upper", _worst_upper(T, R))):
        rid = row if row_ids is None else row_ids[row]
        ctx = {**context, "z_id": rid, "f_id": f"worst_set[{size}]"}
        out.append(check_sandwich(Estimate.exact(inequality_id, t), a * r, r + b, f"{inequality_id}.{side}", ctx))
    return out


# ---------------------------------------------------------------------------
# Frozen semigroups and measures
# ---------------------------------------------------------------------------

def _is_normalized(etas, model, tol=1e-10):
    return all(abs(e(g) - 1.0) <= tol for e, g in zip(etas, model.potentials))


def _all_paths(model):
    return decode_paths(np.arange(path_space_sizes(model.space_sizes)[-1]), model.space_sizes)


def _representatives(zs, p, r, space):
    """Indices of frozen paths giving distinct semigroups ``Qz_{p,r}``.

    On the marginal model only ``z_{p+1..r}`` enters; on the lift the whole
    prefix does, so every path is its own representative.
    """
    if space == "path":
        return np.arange(len(zs))
    _, first = np.unique(zs[:, p + 1:r + 1], axis=0, return_index=True)
    return np.sort(first)


def frozen_semigroup_suite(name, model, rho=None, spaces=("marginal", "path")):
    """Single-step-block and global bounds on the frozen semigroup, for every frozen path.

    ``model`` must be normalised (``eta_k(G_k) = 1``).
    """
    _, etas = exact_measures(model)
    if not _is_normalized(etas, model):
        raise ValueError(f"model {name!r} is not normalised")
    n = model.horizon
    rho = assumption_constants(model).rho_n if rho is None else rho
    reports = []
    zs = _all_paths(model)
    zlin = encode_paths(zs, model.space_sizes)
    for space in spaces:
        if space == "path":
            if path_space_sizes(model.space_sizes)[-1] > LIFT_LIMIT:
                reports.append(skipped("P1.i1", 0, 0, {"model": name, "n": n},
                                       note=f"path space larger than {LIFT_LIMIT}"))
                continue
            target = lift_to_path(model)
        else:
            target = model
        base = {"model": f"{name}:{space}", "n": n}
        # i1 over all blocks (p, p+q)
        for q in range(1, n + 1):
            for N in n_grid(C.frozen_step_threshold(q, rho)):
                a, b = C.frozen_step_bounds(q, rho, N)
                for p in range(0, n - q + 1):
                    B = semigroup(target, p, p + q).matrix
                    reps = _representatives(zs, p, p + q, space)
                    T = np.concatenate([frozen_semigroup(target, zs[i], N, p, p + q).matrix for i in reps])
                    R = np.tile(B, (len(reps), 1))
                    ids = np.repeat(zlin[reps], B.shape[0])
                    reports += affine_sandwich_reports("P1.i1", T, R, a, b,
                                                       {**base, "N": N, "q": q, "p": p}, ids)
        # i2: Qz_{p,n}(1) in the rho window
        for N in n_grid(3.0 * n * rho):
            lo, hi, lo_out, hi_out = C.frozen_ones_bounds(rho, n, N)
            vals, ids = [], []
            for p in range(n + 1):
                for i in _representatives(zs, p, n, space):
                    ones = frozen_semigroup(target, zs[i], N, p, n).ones()
                    vals.append(ones)
                    ids.append(np.full(ones.size, i))
            vals, ids = np.concatenate(vals), np.concatenate(ids)
            ctx = {**base, "N": N, "f_id": "one"}
            imin, imax = int(np.argmin(vals)), int(np.argmax(vals))
            for tag, i in (("min", imin), ("max", imax)):
                est = Estimate.exact(f"P1.i2.{tag}", float(vals[i]))
                c = {**ctx, "z_id": int(zlin[ids[i]])}
                reports.append(check_sandwich(est, lo, hi, f"P1.i2.{tag}", c))
                reports.append(check_sandwich(est, lo_out, hi_out, f"P1.i2.outer.{tag}", c))
    return reports


def _frozen_tables(model, N, zs):
    """``etas (m, |S_n|)``, masses ``(m,)`` for frozen paths ``zs`` (chunked)."""
    parts_e, parts_m = [], []
    for start in range(0, len(zs), FROZEN_TABLE_CHUNK):
        e, m = frozen_terminal_table(model, N, zs[start:start + FROZEN_TABLE_CHUNK])
        parts_e.append(e)
        parts_m.append(m)
    return np.concatenate(parts_e), np.concatenate(parts_m)


def frozen_measure_suite(name, model, rho=None, spaces=("marginal", "path")):
    """Bounds on ``mu_0 Qz_{0,n}``, its normalisation, ``gamma_{z,n}`` and ``eta_{z,n}``, all z."""
    _, etas = exact_measures(model)
    if not _is_normalized(etas, model):
        raise ValueError(f"model {name!r} is not normalised")
    n = model.horizon
    rho = assumption_constants(model).rho_n if rho is None else rho
    zs = _all_paths(model)
    zlin = encode_paths(zs, model.space_sizes)
    reports = []
    r2 = rho**2
    for space in spaces:
        target = lift_to_path(model) if space == "path" else model
        eta_n = exact_measures(target)[1][-1].values
        base = {"model": f"{name}:{space}", "n": n}
        # i3 / i4: N >= (1 + 2 rho^2)(n + 1)
        for N in n_grid(C.frozen_initial_threshold(rho, n)):
            e, m = _frozen_tables(target, N, zs)
            g = e * m[:, None]
            ctx = {**base, "N": N}
            reports += affine_sandwich_reports("P1.i3", g, eta_n, 1 - (n + 1) / N, 2 * r2 * (n + 1) / N, ctx, zlin)
            reports += affine_sandwich_reports("P1.i4", e, eta_n, 1 - (1 + 2 * r2) * (n + 1) / N,
                                               2 * (1 + 2 * r2) * 2 * (n + 1) / N, ctx, zlin)
        if n == 0:
            reports.append(skipped("P2.f11", 0, 0, base, note="horizon 0: statement needs n >= 1"))
            continue
        for N in n_grid(C.frozen_measure_threshold(rho, n)):
            e, m = _frozen_tables(target, N, zs)
            g = e * m[:, None]
            ctx = {**base, "N": N}
            reports += affine_sandwich_reports("P2.f11", g, eta_n, 1 - 2 * n / N, 4 * r2 * n / N, ctx, zlin)
            reports += affine_sandwich_reports("P2.f6", e, eta_n, 1 - 2 * (1 + 2 * r2) * n / N,
                                               4 * (1 + 2 * r2) * n / N, ctx, zlin)
    return reports


def oscillation_suite(name, model, rho=None):
    """Dobrushin coefficient of ``F_n : z -> eta_{z,n}`` on path space against ``6(1+2rho^2) n/N``.

    ``beta(F_n) = max_A osc(F_n(1_A))``, so the check covers every indicator
    (and its complement) at once.
    """
    n = model.horizon
    rho = assumption_constants(model).rho_n if rho is None else rho
    base = {"model": f"{name}:path", "n": n, "f_id": "dobrushin"}
    size = path_space_sizes(model.space_sizes)[-1]
    if n == 0:
        return [skipped("F.osc", 0, 0, base, note="horizon 0")]
    if size > OSCILLATION_LIMIT:
        return [skipped("F.osc", 0, 0, base, note=f"path space larger than {OSCILLATION_LIMIT}")]
    lift = lift_to_path(model)
    zs = _all_paths(model)
    reports = []
    for N in n_grid(C.frozen_measure_threshold(rho, n)):
        e, _ = _frozen_tables(lift, N, zs)
        beta = dobrushin_beta(e)
        bound = C.oscillation_constant(rho) * n / N
        reports.append(check_sandwich(Estimate.exact("F.osc", beta), 0.0, bound, "F.osc", {**base, "N": N}))
    return reports


def normalized_corpus(model):
    """Normalised copy of a model (identity on models that already are)."""
    _, etas = exact_measures(model)
    return model if _is_normalized(etas, model) else normalize_potentials(model, etas)
