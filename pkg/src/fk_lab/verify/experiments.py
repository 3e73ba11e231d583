"""Replicated Monte Carlo bound experiments and the suite dispatcher.

Every experiment returns a list of :class:`BoundsReport`.  Replicates are
processed in fixed blocks of replicate ids, so results depend only on the
model, the parameters and the master seed.  Different population sizes and
frozen paths use different RNG streams, which makes their estimates
independent of each other.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.stats import chi2, norm

from ..dual import MODES, draw_exact_paths, least_likely_path, pg_sweeps, run_dual_batch
from ..model import decode_paths, lift_to_path, path_space_sizes
from ..oracle.frozen import frozen_terminal_table
from ..oracle.measures import assumption_constants, exact_measures
from ..oracle.tensor import frozen_tensor_fk, product_function, tensor_fk, tensor_semigroup_ones
from ..smc import product_tensor_means, simulate_batch
from . import constants as C
from .stats import (CONSTANT_DISPUTED, DEFAULT_CI_LEVEL, FAIL, PASS, BoundsReport, Estimate, check_sandwich,
                    replicate_mean, skipped, z_value)

DEFAULT_R = 100_000
# Four-sigma confidence level used by the unbiasedness checks.
FOUR_SIGMA = float(2 * norm.cdf(4.0) - 1)
# Budget of int64 particle entries held in memory per batch.
BATCH_CELLS = 4_000_000


@dataclass(frozen=True)
class _Experiment:
    names: list
    batch_size: int
    evaluate: Callable


def _batch_size(N, n, cap=5000):
    return int(max(1, min(cap, BATCH_CELLS // max(1, (n + 1) * N))))


def _path_counts(idx, size):
    """``(B, size)`` occupation counts of path indices ``idx`` (shape ``(B, N)``)."""
    B = idx.shape[0]
    flat = idx + size * np.arange(B, dtype=np.int64)[:, None]
    return np.bincount(flat.ravel(), minlength=B * size).reshape(B, size)


def _all_paths(model):
    return decode_paths(np.arange(path_space_sizes(model.space_sizes)[-1]), model.space_sizes)


def _exact_path_eta(model):
    return exact_measures(lift_to_path(model))[1][-1].values


def _rho(model):
    return assumption_constants(model).rho_n


# ---------------------------------------------------------------------------
# Path functions
# ---------------------------------------------------------------------------

def path_functions(model, eta_path=None, centred=True):
    """Named functions on the path space of ``model``.

    ``x{k}={s}``: indicator that coordinate k equals s (all levels, states);
    ``sum0``: fraction of coordinates equal to 0;
    ``sum0_centred``: ``sum0 - eta_n(sum0)`` (signed; only used in bias checks).
    """
    paths = _all_paths(model)
    out = {}
    for k in range(model.horizon + 1):
        for s in range(model.space_sizes[k]):
            out[f"x{k}={s}"] = (paths[:, k] == s).astype(float)
    out["sum0"] = (paths == 0).mean(axis=1)
    if centred:
        eta_path = _exact_path_eta(model) if eta_path is None else eta_path
        out["sum0_centred"] = out["sum0"] - float(out["sum0"] @ eta_path)
    return out


# ---------------------------------------------------------------------------
# Unbiasedness of the unnormalised particle measure
# ---------------------------------------------------------------------------

def unbiasedness_experiment(name, model, N=100, R=DEFAULT_R, seed=0, ci_level=FOUR_SIGMA):
    """``E[Z_n m(xi_n)(g)] = gamma_n(g)`` for g = 1, the terminal indicators and ``G_n``."""
    n = model.horizon
    d = model.space_sizes[n]
    gammas, _ = exact_measures(model)
    funcs = {"one": np.ones(d), **{f"1_{s}": np.eye(d)[s] for s in range(d)}, "G_n": np.asarray(model.potentials[n])}
    F = np.stack(list(funcs.values()))

    def evaluate(master, ids):
        b = simulate_batch(model, N, master, ids, stream=0)
        counts = np.stack([np.bincount(row, minlength=d) for row in b.particles[:, n, :]]) / N
        return np.exp(b.log_normalizer)[:, None] * (counts @ F.T)

    ests = replicate_mean(_Experiment(list(funcs), _batch_size(N, n), evaluate), R, seed, ci_level)
    ctx = {"model": name, "n": n, "N": N}
    return [check_sandwich(e, gammas[n](F[i]), gammas[n](F[i]), "U.f12", {**ctx, "f_id": e.name})
            for i, e in enumerate(ests)]


# ---------------------------------------------------------------------------
# First-order bias sandwich
# ---------------------------------------------------------------------------

def _bias_estimates(model, N, R, seed, funcs):
    n = model.horizon
    size = path_space_sizes(model.space_sizes)[-1]
    F = np.stack(list(funcs.values()))

    def evaluate(master, ids):
        b = simulate_batch(model, N, master, ids, stream=N)
        return _path_counts(b.path_indices(), size) @ F.T / N

    return replicate_mean(_Experiment(list(funcs), _batch_size(N, n), evaluate), R, seed)


def bias_experiment(name, model, N_values=(100, 200, 400, 800), R=DEFAULT_R, seed=0, c2_scale=1.0,
                        prefix="T1", return_estimates=False):
    """Multiplicative sandwich and two-sided bias bound for path functions, at each N.

    ``c2_scale`` multiplies the upper constant (the negative control uses
    ``1/100``); reports then carry the ``prefix`` given by the caller.
    """
    n = model.horizon
    rho = _rho(model)
    c1, c2 = C.bias_constants(rho)
    c2 = c2 * c2_scale
    eta = _exact_path_eta(model)
    funcs = path_functions(model, eta)
    reports, by_N = [], {}
    for N in N_values:
        ctx = {"model": name, "n": n, "N": N, "rho": rho, "c1": c1, "c2": c2}
        if N < c2 * n:
            reports.append(skipped(f"{prefix}.f10", 0, 0, ctx, note=f"N < c2 n = {c2 * n:.3f}"))
            continue
        ests = _bias_estimates(model, N, R, seed, funcs)
        by_N[N] = {e.name: e for e in ests}
        for e in ests:
            f = funcs[e.name]
            ef, eabs = float(f @ eta), float(np.abs(f) @ eta)
            fctx = {**ctx, "f_id": e.name}
            if f.min() >= 0:
                reports.append(check_sandwich(e, (1 - c1 * n / N) * ef, (1 + c2 * n / N) * ef,
                                              f"{prefix}.f10", fctx))
            b = c2 * n / N * eabs
            reports.append(check_sandwich(e, ef - b, ef + b, f"{prefix}.f11", fctx))
    if return_estimates:
        return reports, by_N, {k: float(v @ eta) for k, v in funcs.items()}
    return reports


def bias_scaling_reports(name, by_N, exact, f_id="sum0", ci_level=DEFAULT_CI_LEVEL):
    """Slope of the bias against 1/N and the ratio check ``bias(4N) <= bias(N)/4``.

    The bias is oriented by the sign of its precision-weighted mean so that
    the fitted quantity is ``|bias|``.  The fit is weighted least squares
    through the origin (the first-order expansion has no constant term).
    """
    Ns = sorted(by_N)
    if len(Ns) < 2:
        return [skipped("T1.slope", 0, math.inf, {"model": name, "f_id": f_id}, note="fewer than two N values")]
    bias = np.array([by_N[N][f_id].point - exact[f_id] for N in Ns])
    se = np.array([by_N[N][f_id].std_error for N in Ns])
    w = 1.0 / se**2
    sign = 1.0 if float(np.sum(w * bias)) >= 0 else -1.0
    y = sign * bias
    x = 1.0 / np.asarray(Ns, dtype=float)
    slope = float(np.sum(w * x * y) / np.sum(w * x * x))
    slope_se = float(1.0 / math.sqrt(np.sum(w * x * x)))
    ctx = {"model": name, "N": "/".join(map(str, Ns)), "f_id": f_id, "sign": sign}
    reports = [check_sandwich(Estimate("T1.slope", slope, slope_se, len(Ns), ci_level), 0.0, math.inf,
                              "T1.slope", ctx)]
    for N in Ns:
        if 4 * N in by_N:
            i, j = Ns.index(N), Ns.index(4 * N)
            d = y[j] - 0.25 * y[i]
            d_se = math.sqrt(se[j] ** 2 + (0.25 * se[i]) ** 2)
            est = Estimate("T1.ratio", float(d), d_se, 2, ci_level)
            # "within CI": the inequality holds if the CI reaches values <= 0
            verdict = PASS if est.ci[0] <= 0 else FAIL
            reports.append(BoundsReport("T1.ratio", -math.inf, 0.0, est, verdict,
                                        {**ctx, "N": f"{4 * N}/{N}"},
                                        note="|bias(4N)| - |bias(N)|/4 <= 0 within CI"))
    return reports


def negative_control(name, model, N=10, R=400_000, seed=0, scale=0.01):
    """Bias bound with ``c2`` divided by 100 on a rho > 1 model: must yield at least one FAIL."""
    reports = bias_experiment(name, model, (N,), R, seed, c2_scale=scale, prefix="NC.T1")
    return [r for r in reports if r.context.get("f_id") == "sum0_centred" or r.verdict == "SKIPPED"]


# ---------------------------------------------------------------------------
# Backward sampling vs ancestral lines
# ---------------------------------------------------------------------------

def backward_ancestral_experiment(name, model, N=100, R=DEFAULT_R, seed=0):
    """Paired difference, run by run, of the backward path law and the ancestral path law.

    Both conditional laws given a run are exact (``m(xi_n)`` on ancestral
    lines, ``m(xi'_n) H_{n, m(xi')}`` for the backward path); their difference
    is evaluated on every level marginal ``1{x_k = s}`` and on ``sum0``.
    """
    n = model.horizon
    size = path_space_sizes(model.space_sizes)[-1]
    funcs = path_functions(model, centred=False)
    F = np.stack(list(funcs.values()))

    def evaluate(master, ids):
        b = simulate_batch(model, N, master, ids, stream=0)
        diff = b.backward_path_laws() - _path_counts(b.path_indices(), size) / N
        return diff @ F.T

    ests = replicate_mean(_Experiment(list(funcs), _batch_size(N, n, cap=2000), evaluate), R, seed)
    ctx = {"model": name, "n": n, "N": N}
    return [check_sandwich(e, 0.0, 0.0, "T1.bwd_anc", {**ctx, "f_id": e.name}) for e in ests]


# ---------------------------------------------------------------------------
# Propagation of chaos
# ---------------------------------------------------------------------------

CHAOS_FUNCTIONS = {"1_0": (1.0, 0.0), "g_half": (1.0, 0.5)}


def _tensor_spread(model, q, N, z=None):
    ones = tensor_semigroup_ones(model, q, N, z=z)
    return max(float(h.max() / h.min()) for h in ones) - 1.0


def chaos_thresholds(model, q, N_ref=1000):
    rho = _rho(model)
    c = _tensor_spread(model, q, N_ref)
    return C.chaos_threshold(q, rho, c, model.horizon)


def chaos_experiment(name, model, q_values=(2, 3), N_values=None, R=DEFAULT_R, seed=0, functions=None):
    """q-particle product means against ``eta_n(f)^q`` and against ``eta^{(q)}_n``.

    The estimator is ``m(xi_n)^{⊙q}(g^{⊗q})``, which has the same mean as
    ``prod_{i<=q} g(xi^i_n)`` by exchangeability.  ``N_values`` maps q to a
    list of population sizes (default: the threshold and twice it).
    """
    n = model.horizon
    d = model.space_sizes[n]
    functions = functions or {k: np.asarray(v[:d], dtype=float) for k, v in CHAOS_FUNCTIONS.items()}
    rho = _rho(model)
    _, etas = exact_measures(model)
    eta_n = etas[n]
    plan = {}
    for q in q_values:
        thr = chaos_thresholds(model, q)
        Ns = (N_values or {}).get(q) if isinstance(N_values, dict) else N_values
        Ns = Ns or [int(math.ceil(thr)), int(math.ceil(2 * thr))]
        for N in Ns:
            plan.setdefault(int(N), []).append(q)
    reports = []
    for N in sorted(plan):
        qs = plan[N]
        names = [f"q{q}:{fid}" for q in qs for fid in functions]

        def evaluate(master, ids, N=N, qs=qs):
            b = simulate_batch(model, N, master, ids, stream=N)
            vals = b.particles[:, n, :]
            return np.stack([product_tensor_means(vals, g, q) for q in qs for g in functions.values()], axis=1)

        ests = {e.name: e for e in replicate_mean(_Experiment(names, _batch_size(N, n), evaluate), R, seed)}
        for q in qs:
            c = _tensor_spread(model, q, N)
            a = C.chaos_constant(q, rho, c)
            b = C.chaos_tensor_constant(q, c)
            thr = C.chaos_threshold(q, rho, c, n)
            tfk = tensor_fk(model, q, N).etas[n]
            for fid, g in functions.items():
                e = ests[f"q{q}:{fid}"]
                ctx = {"model": name, "n": n, "N": N, "q": q, "f_id": fid, "a": a, "b": b, "rho": rho}
                if N < thr:
                    for iid in ("C.f16", "C.f17"):
                        reports.append(skipped(iid, 0, 0, ctx, note=f"N < threshold {thr:.1f}"))
                    continue
                ef, efq = eta_n(g), eta_n(g**q)
                reports.append(check_sandwich(e, (1 - a * n / N) * ef**q, ef**q + a * n / N * efq, "C.f16", ctx))
                et = tfk(product_function(g, q))
                reports.append(check_sandwich(e, (1 - b * n / N) * et, (1 + b * n / N) * et, "C.f17", ctx))
    return reports


# ---------------------------------------------------------------------------
# Particle Gibbs kernels
# ---------------------------------------------------------------------------

def _dispute(reports, keys=("inequality_id", "f_id", "z_id"), ci_level=DEFAULT_CI_LEVEL):
    """Relabel proof-constant FAILs as CONSTANT_DISPUTED when a free c/N law fits.

    For each failed (bound, f, z) the relative deviations ``r_N = est/ref - 1``
    across all N are fitted by ``s n/N``; if the weighted residual is
    consistent with that law (chi-square at the CI level) the constant is
    disputed rather than the statement.
    """
    groups = {}
    for r in reports:
        if r.estimate is None or r.context.get("reference") in (None, 0):
            continue
        key = (r.inequality_id,) + tuple(r.context.get(k) for k in keys[1:])
        groups.setdefault(key, []).append(r)
    for group in groups.values():
        if not any(r.verdict == FAIL for r in group):
            continue
        x = np.array([r.context["n"] / r.context["N"] for r in group])
        ref = np.array([r.context["reference"] for r in group])
        y = np.array([r.estimate.point for r in group]) / ref - 1
        se = np.array([max(r.estimate.std_error, 1e-300) for r in group]) / np.abs(ref)
        if len(group) < 2:
            continue
        w = 1 / se**2
        s = np.sum(w * x * y) / np.sum(w * x * x)
        resid = float(np.sum(w * (y - s * x) ** 2))
        if resid <= chi2.ppf(ci_level, len(group) - 1):
            for r in group:
                if r.verdict == FAIL:
                    r.verdict = CONSTANT_DISPUTED
                    r.note = f"fails under the proof constant; free slope fit s={s:.4g}"
    return reports


def _potential_spread(model):
    return min(float(g.min() / g.max()) for g in model.potentials[: model.horizon])


def pg_kernel_experiment(name, model, N_values=(50, 200), R=DEFAULT_R, seed=0, frozen=None):
    """Ancestral and backward PG kernel estimates for every frozen path and path indicator.

    Both kernels are estimated by their conditional means given the dual run:
    ``m(X_{z,n})(f)`` on ancestral lines for ``K(f)(z)`` and the exact
    backward path law ``m(X'_{z,n}) H_{n, m(X'_z)}(f)`` for ``K♭(f)(z)``.  Bounds: the iterated forward factors around
    ``F_n(f)(z)``; ``K♭ >= (1 - c n/N) eta_n/gamma_{z,n}(1)``; the joint
    minorisation ``K, K♭ >= (1 - c n/N) eta_n``; and the crude minorisation
    ``K♭ >= (eps (1 - 1/N))^n eta_n`` with eps the smallest ratio
    ``min G_k / max G_k`` (the kernels do not change when G_k is rescaled).
    """
    n = model.horizon
    rho = _rho(model)
    lift = lift_to_path(model)
    size = path_space_sizes(model.space_sizes)[-1]
    zs = _all_paths(model) if frozen is None else np.asarray(frozen, dtype=np.int64)
    zlin = zs @ np.array([int(np.prod(model.space_sizes[k + 1:])) for k in range(n + 1)], dtype=np.int64)
    eta = _exact_path_eta(model)
    c_back = C.pg_backward_constant(rho)
    c_min = C.pg_minorization_constant(rho)
    eps = _potential_spread(model)
    names = [f"K:{p}" for p in range(size)] + [f"Kb:{p}" for p in range(size)]
    reports = []
    for N in N_values:
        lo_f, hi_f = C.pg_forward_factors(rho, n, N)
        F, _ = frozen_terminal_table(lift, N, zs)
        _, masses = frozen_terminal_table(model, N, zs)
        crude = C.crude_minorization(eps, n, N)
        for iz, z in enumerate(zs):
            stream = int(zlin[iz]) + 1

            def evaluate(master, ids, z=z, stream=stream):
                b = run_dual_batch(model, z, N, master, ids, stream=stream)
                return np.concatenate([_path_counts(b.path_indices(), size) / N, b.backward_path_laws()], axis=1)

            ests = replicate_mean(_Experiment(names, _batch_size(N, n), evaluate), R, seed)
            K, Kb = ests[:size], ests[size:]
            for p in range(size):
                ctx = {"model": name, "n": n, "N": N, "f_id": f"1_path{p}", "z_id": int(zlin[iz]), "rho": rho}
                Fz = float(F[iz, p])
                reports.append(check_sandwich(K[p], lo_f * Fz, hi_f * Fz, "T2.f21", {**ctx, "reference": Fz}))
                if N >= c_back * n:
                    ref = eta[p] / masses[iz]
                    reports.append(check_sandwich(Kb[p], (1 - c_back * n / N) * ref, math.inf, "T2.f22",
                                                  {**ctx, "reference": ref}))
                else:
                    reports.append(skipped("T2.f22", 0, math.inf, ctx, note=f"N < {c_back * n:.2f}"))
                if N >= c_min * n:
                    lb = (1 - c_min * n / N) * eta[p]
                    reports.append(check_sandwich(K[p], lb, math.inf, "T2.f23.K", {**ctx, "reference": eta[p]}))
                    reports.append(check_sandwich(Kb[p], lb, math.inf, "T2.f23.Kb", {**ctx, "reference": eta[p]}))
                else:
                    reports.append(skipped("T2.f23", 0, math.inf, ctx, note=f"N < {c_min * n:.2f}"))
                reports.append(check_sandwich(Kb[p], crude * eta[p], math.inf, "T2.crude",
                                              {**ctx, "reference": eta[p]}))
    return _dispute(reports)


def pg_invariance_experiment(name, model, N=50, R=DEFAULT_R, seed=0, modes=MODES):
    """Start from an exact draw of ``eta_n``, take one PG sweep, compare the path histogram with ``eta_n``."""
    eta = _exact_path_eta(model)
    z0 = draw_exact_paths(eta, seed, R, model.space_sizes)
    reports = []
    for mode in modes:
        z1 = pg_sweeps(model, z0, N, 1, mode, seed, np.arange(R), record=False)
        hist = np.bincount(z1, minlength=eta.size).astype(float)
        for p in range(eta.size):
            pr = hist[p] / R
            se = math.sqrt(max(pr * (1 - pr), 0.0) / (R - 1))
            e = Estimate(f"{mode}:{p}", pr, se, R)
            reports.append(check_sandwich(e, eta[p], eta[p], "T2.invariance",
                                          {"model": f"{name}:{mode}", "n": model.horizon, "N": N,
                                           "f_id": f"1_path{p}"}))
    return reports


def tv_distance(hist, eta):
    """Total variation in [0, 1]: half the L1 distance."""
    return 0.5 * float(np.abs(np.asarray(hist) - np.asarray(eta)).sum())


def pg_contraction_experiment(name, model, N=60, R=DEFAULT_R, steps=8, seed=0, modes=MODES, floor_factor=4.0,
                              ci_level=DEFAULT_CI_LEVEL):
    """Geometric decay of ``TV(law z^{(p)}, eta_n)`` from the least likely start path.

    The rate is fitted log-linearly on the steps whose TV exceeds
    ``floor_factor`` times the sampling-noise floor; the proof bound on the
    rate is ``1 - eps`` with ``eps = 1 - c n/N`` (capped at 1).  Exceeding
    the proof bound gives CONSTANT_DISPUTED, a non-decaying TV gives FAIL.
    """
    n = model.horizon
    rho = _rho(model)
    eta = _exact_path_eta(model)
    z0 = least_likely_path(eta, model.space_sizes)
    c = C.pg_minorization_constant(rho)
    eps = max(0.0, 1.0 - c * n / N)
    bound = C.contraction_rate_bound(eps)
    # expected TV of an R-sample histogram of eta itself
    floor = 0.5 * float(np.sum(np.sqrt(2 * eta * (1 - eta) / (math.pi * R))))
    reports = []
    for mode in modes:
        hist = pg_sweeps(model, z0.coords, N, steps, mode, seed, np.arange(R), record=True)
        tv = np.array([tv_distance(np.bincount(h, minlength=eta.size) / R, eta) for h in hist])
        # sampling error of the TV (delta method for the L1 norm)
        tv_se = np.array([0.5 * math.sqrt(float(np.sum(np.minimum(1.0, np.bincount(h, minlength=eta.size) / R)
                                                         * (1 - np.bincount(h, minlength=eta.size) / R))) / R)
                          for h in hist])
        use = np.flatnonzero(tv > floor_factor * floor)
        ctx = {"model": f"{name}:{mode}", "n": n, "N": N, "z_id": z0.linear, "f_id": "tv",
               "tv": [round(float(t), 6) for t in tv], "floor": floor}
        if use.size < 2 or use[0] != 0 or np.any(np.diff(use) != 1):
            use = np.arange(min(2, len(tv)))
        x = use.astype(float)
        ylog = np.log(np.maximum(tv[use], 1e-300))
        w = (tv[use] / np.maximum(tv_se[use], 1e-12)) ** 2
        xm = np.sum(w * x) / np.sum(w)
        sxx = float(np.sum(w * (x - xm) ** 2))
        slope = float(np.sum(w * (x - xm) * (ylog - np.sum(w * ylog) / np.sum(w))) / sxx)
        rate = math.exp(slope)
        rate_se = rate / math.sqrt(sxx)
        est = Estimate(f"{mode}:rate", rate, rate_se, R, ci_level)
        decay = check_sandwich(est, 0.0, 1.0, "T2.f14.decay", ctx)
        if est.ci[1] < 1.0:
            decay.verdict = PASS
        reports.append(decay)
        rep = check_sandwich(est, 0.0, bound, "T2.f14.rate", {**ctx, "eps": eps, "c": c})
        if rep.verdict != PASS:
            rep.verdict = CONSTANT_DISPUTED
            rep.note = f"fitted rate {rate:.4g} vs proof bound {bound:.4g}"
        reports.append(rep)
    return reports


# ---------------------------------------------------------------------------
# Dual q-particle sandwich
# ---------------------------------------------------------------------------

def dual_chaos_constants(model, q, N, zs):
    c = max(_tensor_spread(model, q, N, z=tuple(int(v) for v in z)) for z in zs)
    b = C.chaos_tensor_constant(q, c)
    return c, b, max(C.tensor_ratio_threshold(c, q), b * model.horizon)


def dual_chaos_experiment(name, model, N_values=None, q=2, R=DEFAULT_R, seed=0, functions=None, frozen=None):
    """``m(X_{z,n})^{⊙q}(g^{⊗q})`` against the frozen tensor measure, for every frozen path.

    The constant b is existential in the statement; the value used comes from
    the iterated tensor ratio estimates (frozen semigroup spread) and a free
    slope fit decides CONSTANT_DISPUTED over FAIL.
    """
    n = model.horizon
    d = model.space_sizes[n]
    functions = functions or {k: np.asarray(v[:d], dtype=float) for k, v in CHAOS_FUNCTIONS.items()}
    zs = _all_paths(model) if frozen is None else np.asarray(frozen, dtype=np.int64)
    radix = np.array([int(np.prod(model.space_sizes[k + 1:])) for k in range(n + 1)], dtype=np.int64)
    if N_values is None:
        _, _, thr = dual_chaos_constants(model, q, 1000, zs)
        N_values = (int(math.ceil(thr)), int(math.ceil(2 * thr)))
    reports = []
    for N in N_values:
        c, b, thr = dual_chaos_constants(model, q, N, zs)
        for z in zs:
            zid = int(z @ radix)
            ctx0 = {"model": name, "n": n, "N": N, "q": q, "z_id": zid, "b": b}
            if N < thr:
                reports.append(skipped("D.poc", 0, 0, ctx0, note=f"N < threshold {thr:.1f}"))
                continue

            def evaluate(master, ids, z=z, zid=zid):
                bt = run_dual_batch(model, z, N, master, ids, stream=zid + 1)
                vals = bt.particles[:, n, :]
                return np.stack([product_tensor_means(vals, g, q) for g in functions.values()], axis=1)

            ests = replicate_mean(_Experiment(list(functions), _batch_size(N, n), evaluate), R, seed)
            law = frozen_tensor_fk(model, tuple(int(v) for v in z), q, N).etas[n]
            for e, g in zip(ests, functions.values()):
                ref = law(product_function(g, q))
                reports.append(check_sandwich(e, (1 - b * n / N) * ref, (1 + b * n / N) * ref, "D.poc",
                                              {**ctx0, "f_id": e.name, "reference": ref}))
    return _dispute(reports)


# ---------------------------------------------------------------------------
# Dispatcher
# ---------------------------------------------------------------------------

def run_bound_experiment(kind, model, params=None):
    """Run one named suite on ``model`` (``None`` for the model-free suites).

    ``params`` may carry ``name`` (model label), ``R``, ``seed``, ``N``,
    ``N_values``, ``q_values`` and suite-specific keys.
    """
    from . import exact, identities, lemmas

    p = dict(params or {})
    name = p.pop("name", "model")
    R = int(p.pop("R", DEFAULT_R))
    seed = int(p.pop("seed", 0))
    if kind == "lemmas":
        return lemmas.conditional_ratio_suite() + lemmas.ratio_sandwich_suite() + lemmas.tensor_suite()
    if model is None:
        raise ValueError(f"suite {kind!r} needs a model")
    if kind == "oracle":
        return exact.oracle_identity_suite(name, model)
    if kind == "frozen_semigroup":
        return exact.frozen_semigroup_suite(name, exact.normalized_corpus(model))
    if kind == "frozen_measure":
        return exact.frozen_measure_suite(name, exact.normalized_corpus(model))
    if kind == "oscillation":
        return exact.oscillation_suite(name, exact.normalized_corpus(model))
    if kind == "transfer":
        return identities.transfer_formula_checks(model, name, N=int(p.get("N", 2)))
    if kind == "dual_identity":
        return identities.dual_one_step_checks(model, name, N=int(p.get("N", 3)), q=int(p.get("q", 2)))
    if kind == "unbiasedness":
        return unbiasedness_experiment(name, model, N=int(p.get("N", 100)), R=R, seed=seed)
    if kind == "bias":
        reports, by_N, exact_vals = bias_experiment(name, model, tuple(p.get("N_values", (100, 200, 400, 800))),
                                                        R, seed, return_estimates=True)
        if _rho(model) <= 1.0 + 1e-12:
            # rho = 1: zero-width sandwich, no bias to scale
            return reports
        return reports + bias_scaling_reports(name, by_N, exact_vals)
    if kind == "negative_control":
        return negative_control(name, model, N=int(p.get("N", 10)), R=int(p.get("R_control", 4 * R)), seed=seed)
    if kind == "backward":
        return backward_ancestral_experiment(name, model, N=int(p.get("N", 100)), R=R, seed=seed)
    if kind == "chaos":
        return chaos_experiment(name, model, tuple(p.get("q_values", (2, 3))), p.get("N_values"), R, seed)
    if kind == "pg_kernels":
        return pg_kernel_experiment(name, model, tuple(p.get("N_values", (50, 200))), R, seed)
    if kind == "invariance":
        return pg_invariance_experiment(name, model, N=int(p.get("N", 50)), R=R, seed=seed)
    if kind == "contraction":
        return pg_contraction_experiment(name, model, N=int(p.get("N", 60)), R=R, steps=int(p.get("steps", 8)),
                                         seed=seed)
    if kind == "dual_chaos":
        return dual_chaos_experiment(name, model, p.get("N_values"), q=int(p.get("q", 2)), R=R, seed=seed)
    raise ValueError(f"unknown suite {kind!r}; choose from {SUITES}")


SUITES = ("lemmas", "oracle", "frozen_semigroup", "frozen_measure", "oscillation", "transfer", "dual_identity", "unbiasedness",
          "bias", "negative_control", "backward", "chaos", "pg_kernels", "invariance", "contraction",
          "dual_chaos")
