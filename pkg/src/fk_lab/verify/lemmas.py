"""Exhaustive checks of the independent-sample ratio estimates and the combinatorial facts.

Every expectation here is computed exactly by enumerating all outcomes of
``X = (X^1..X^N)`` (at most ``3^6`` of them), or — for iid samples with N
beyond 6 — by enumerating the multinomial count classes, which is still an
exact computation because the empirical tensor measures only depend on the
counts.  No sampling is involved.
"""

from __future__ import annotations

import itertools
import math
from fractions import Fraction
from math import comb

import numpy as np

from ..oracle.combinatorics import (distinct_fraction, falling_factorial, overlap_fraction, stirling2,
                                    vandermonde_ratio)
from ..oracle.tensor import coalesce_measure, coalescence_degree_weights
from . import constants as C
from .stats import FAIL, PASS, BoundsReport, Estimate, check_sandwich, skipped

OUTCOME_CAP = 10**6


# ---------------------------------------------------------------------------
# Enumeration helpers
# ---------------------------------------------------------------------------

def enumerate_outcomes(laws):
    """All outcomes of independent ``X^i ~ laws[i]`` with their probabilities.

    Returns ``(outcomes (K, N) int array, probs (K,))``; zero-probability
    outcomes are dropped.
    """
    laws = [np.asarray(p, dtype=float) for p in laws]
    total = math.prod(p.size for p in laws)
    if total > OUTCOME_CAP:
        raise ValueError(f"{total} outcomes exceed the enumeration cap {OUTCOME_CAP}")
    outcomes = np.array(list(itertools.product(*(range(p.size) for p in laws))), dtype=np.int64)
    probs = np.ones(len(outcomes))
    for i, p in enumerate(laws):
        probs *= p[outcomes[:, i]]
    keep = probs > 0
    return outcomes[keep], probs[keep]


def distinct_tuples_direct(x, q, f):
    """``m(x)^{⊙q}(f)`` by a literal loop over ordered tuples of distinct indices."""
    N = len(x)
    tot = 0.0
    for c in itertools.permutations(range(N), q):
        tot += f[tuple(x[j] for j in c)]
    return tot / falling_factorial(N, q)


def distinct_tuples_from_counts(counts, q, f):
    """``m^{⊙q}(f)`` for a configuration with state counts ``counts`` (f an array on ``E^q``)."""
    N = int(sum(counts))
    tot = 0.0
    for e in itertools.product(range(len(counts)), repeat=q):
        mult = 1
        for s in set(e):
            mult *= falling_factorial(int(counts[s]), e.count(s))
            if mult == 0:
                break
        if mult:
            tot += f[e] * mult
    return tot / falling_factorial(N, q)


def multinomial_classes(N, p):
    """Count vectors of ``N`` iid draws from ``p`` with their exact probabilities."""
    p = np.asarray(p, dtype=float)
    d = p.size
    out = []
    for counts in _compositions(N, d):
        logc = math.lgamma(N + 1) - sum(math.lgamma(k + 1) for k in counts)
        pr = math.exp(logc) * math.prod(float(p[s]) ** k for s, k in enumerate(counts))
        if pr > 0:
            out.append((counts, pr))
    return out


def _compositions(N, d):
    if d == 1:
        yield (N,)
        return
    for k in range(N + 1):
        for rest in _compositions(N - k, d - 1):
            yield (k,) + rest


def _ctx(suite, **kw):
    return {"model": suite, **kw}


# ---------------------------------------------------------------------------
# Ratio of conditional to unconditional empirical means
# ---------------------------------------------------------------------------

def _independent_laws(d, N):
    """Independent, generally non-identical one-particle laws."""
    base = {2: [(0.5, 0.5), (0.2, 0.8), (0.9, 0.1), (0.65, 0.35)],
            3: [(1 / 3, 1 / 3, 1 / 3), (0.2, 0.5, 0.3), (0.7, 0.1, 0.2), (0.05, 0.15, 0.8)]}[d]
    identical = [base[0]] * N
    mixed = [base[i % len(base)] for i in range(N)]
    return {"iid": identical, "mixed": mixed}


RATIO_FUNCTIONS = {2: {"f12": (1.0, 2.0), "f1_1.2": (1.0, 1.2), "f0.5_3": (0.5, 3.0), "const": (1.0, 1.0)},
                    3: {"f124": (1.0, 2.0, 4.0), "f113": (1.0, 1.0, 3.0), "const": (2.0, 2.0, 2.0)}}


def conditional_ratio_case(laws, f):
    """Exact ``(max_i,x |E(m f|X^i=x)/E(m f) - 1|, E(m f) E(1/m f))`` for independent X."""
    outcomes, probs = enumerate_outcomes(laws)
    f = np.asarray(f, dtype=float)
    mf = f[outcomes].mean(axis=1)
    mean = float(probs @ mf)
    product = mean * float(probs @ (1.0 / mf))
    worst = 0.0
    for i in range(outcomes.shape[1]):
        for x in np.unique(outcomes[:, i]):
            sel = outcomes[:, i] == x
            cond = float(probs[sel] @ mf[sel]) / float(probs[sel].sum())
            worst = max(worst, abs(cond / mean - 1.0))
    return worst, product


def conditional_ratio_suite(max_N=6):
    """Conditional-mean ratio and Jensen-gap bounds, exhaustively for |E| in {2,3}, N <= max_N."""
    reports = []
    for d in (2, 3):
        for N in range(1, max_N + 1):
            for law_id, laws in _independent_laws(d, N).items():
                for f_id, f in RATIO_FUNCTIONS[d].items():
                    a, b = min(f), max(f)
                    ratio, product = conditional_ratio_case(laws, f)
                    ctx = _ctx(f"iid-E{d}" if law_id == "iid" else f"mixed-E{d}", N=N, f_id=f_id)
                    reports.append(check_sandwich(Estimate.exact("L1.f1", ratio), 0.0, (b / a - 1) / N,
                                                  "L1.f1", ctx))
                    reports.append(check_sandwich(Estimate.exact("L1.f2", product), 1.0,
                                                  1 + (b / a) * (b / a - 1) ** 2 / N, "L1.f2", ctx))
    return reports


# ---------------------------------------------------------------------------
# Ratios of empirical means
# ---------------------------------------------------------------------------

RATIO_CASES = {
    2: [("f01_g1_1.2", (0.0, 1.0), (1.0, 1.2)), ("f1_2_g1_2", (1.0, 2.0), (1.0, 2.0)),
        ("f2_0.5_g1_1.5", (2.0, 0.5), (1.0, 1.5)), ("f1_0_g1_3", (1.0, 0.0), (1.0, 3.0))],
    3: [("f010_g1_1.1_1.3", (0.0, 1.0, 0.0), (1.0, 1.1, 1.3)), ("f321_g2_1_1.5", (3.0, 2.0, 1.0), (2.0, 1.0, 1.5))],
}


def ratio_case(laws, f, g):
    """Exact ``(E(m f / m g), E(m f) / E(m g))``."""
    outcomes, probs = enumerate_outcomes(laws)
    mf = np.asarray(f, dtype=float)[outcomes].mean(axis=1)
    mg = np.asarray(g, dtype=float)[outcomes].mean(axis=1)
    return float(probs @ (mf / mg)), float(probs @ mf) / float(probs @ mg)


def ratio_sandwich_suite(max_N=6):
    """Ratio sandwich with ``c1 = b/a - 1`` and the derived c2; SKIPPED unless N > 2(c1+1)."""
    reports = []
    for d, cases in RATIO_CASES.items():
        for N in range(1, max_N + 1):
            for law_id, laws in _independent_laws(d, N).items():
                for f_id, f, g in cases:
                    c1, c2 = C.ratio_mean_constants(max(g) / min(g))
                    ctx = _ctx(f"{law_id}-E{d}", N=N, f_id=f_id)
                    if not N > 2 * (c1 + 1):
                        reports.append(skipped("P4.f18", 0, 0, ctx, note=f"N <= 2(c1+1) = {2 * (c1 + 1):g}"))
                        continue
                    value, ratio = ratio_case(laws, f, g)
                    reports.append(check_sandwich(Estimate.exact("P4.f18", value), (1 - c1 / N) * ratio,
                                                  ratio * (1 + c2 / N), "P4.f18", ctx))
    return reports


# ---------------------------------------------------------------------------
# Tensor product measures
# ---------------------------------------------------------------------------

def _tensor_functions(d, q):
    """A few deterministic positive functions on ``E^q`` (not symmetric in general)."""
    grid = np.indices((d,) * q)
    out = {
        "prod": np.prod(1.0 + 0.5 * grid, axis=0),
        "sum": 1.0 + grid.sum(axis=0) + 0.25 * grid[0],
        "first": 1.0 + (grid[0] == 0) + 0.1 * grid[-1],
    }
    return out


def _symmetrize(f):
    q = f.ndim
    return sum(np.transpose(f, perm) for perm in itertools.permutations(range(q))) / math.factorial(q)


def _identity_report(inequality_id, err, ctx):
    return check_sandwich(Estimate.exact(inequality_id, err), 0.0, 0.0, inequality_id, ctx)


def coalescence_checks(max_N=6):
    """``m^{⊗q} = m^{⊙q} C`` on every configuration, both forms of C."""
    reports = []
    w = coalescence_degree_weights(4, 2)
    reports.append(_identity_report("L3.weights_N4_q2", abs(w[0] - 0.75) + abs(w[1] - 0.25),
                                    _ctx("coalescence", N=4, q=2)))
    for d in (2, 3):
        for N in range(2, max_N + 1):
            if d**N > 800:
                continue
            for q in range(1, min(3, N - 1) + 1):
                for form in ("canonical", "maps"):
                    worst = 0.0
                    for x in itertools.product(range(d), repeat=N):
                        x = np.array(x)
                        emp = np.bincount(x, minlength=d) / N
                        tensor = emp
                        for _ in range(q - 1):
                            tensor = np.multiply.outer(tensor, emp)
                        distinct = np.zeros((d,) * q)
                        for c in itertools.permutations(range(N), q):
                            distinct[tuple(x[list(c)])] += 1.0
                        distinct = distinct.ravel() / falling_factorial(N, q)
                        worst = max(worst, float(np.abs(coalesce_measure(distinct, N, q, d, form)
                                                        - tensor.ravel()).max()))
                    reports.append(_identity_report("L3.coalescence", worst,
                                                    _ctx(f"E{d}", N=N, q=q, f_id=form)))
    return reports


def decomposition_value(x, q, f, J):
    """Right-hand side of the falling-factorial decomposition for configuration x and hold-out set J."""
    N = len(x)
    J = list(J)
    rest = [j for j in range(N) if j not in J]
    total = 0.0
    for k in range(q + 1):
        # f_{k,J}: first k arguments filled by distinct elements of J
        inner = 0.0
        for c in itertools.permutations(rest, q):
            acc = 0.0
            for a in itertools.permutations(J, k):
                args = tuple(x[j] for j in a) + tuple(x[j] for j in c[k:])
                acc += f[args]
            inner += acc / falling_factorial(q, k)
        m_J = inner / falling_factorial(N - q, q)
        total += comb(q, k) * falling_factorial(q, k) * falling_factorial(N - q, q - k) * m_J
    return total / falling_factorial(N, q)


def decomposition_checks(max_N=6, d=2):
    """Decomposition of ``m^{⊙q}(f)`` over how many arguments fall in J (symmetric f, N >= 2q)."""
    reports = []
    for q in (1, 2, 3):
        for N in range(2 * q, max_N + 1):
            Js = {"first": tuple(range(q)), "spread": tuple(range(0, 2 * q, 2))[:q]}
            for f_id, f in _tensor_functions(d, q).items():
                fs = _symmetrize(f)
                for J_id, J in Js.items():
                    worst = 0.0
                    for x in itertools.product(range(d), repeat=N):
                        lhs = distinct_tuples_direct(x, q, fs)
                        worst = max(worst, abs(lhs - decomposition_value(x, q, fs, J)))
                    reports.append(_identity_report("L4.f19", worst,
                                                    _ctx(f"E{d}", N=N, q=q, f_id=f_id, z_id=J_id)))
    return reports


def tensor_conditional_case(N, q, p, f):
    """Exact ``(max_x |E(m^{⊙q} f | X_J = x)/E(m^{⊙q} f) - 1|, E(m f) E(1/m f))`` for iid X ~ p, |J| = q."""
    d = len(p)
    classes = multinomial_classes(N, p)
    vals = np.array([distinct_tuples_from_counts(c, q, f) for c, _ in classes])
    probs = np.array([pr for _, pr in classes])
    mean = float(probs @ vals)
    product = mean * float(probs @ (1.0 / vals))
    rest = multinomial_classes(N - q, p)
    worst = 0.0
    for xJ in itertools.product(range(d), repeat=q):
        held = np.bincount(np.array(xJ), minlength=d)
        cond = sum(pr * distinct_tuples_from_counts(tuple(held + np.array(c)), q, f) for c, pr in rest)
        worst = max(worst, abs(cond / mean - 1.0))
    return worst, product


def tensor_ratio_case(N, q, p, f, g):
    classes = multinomial_classes(N, p)
    probs = np.array([pr for _, pr in classes])
    vf = np.array([distinct_tuples_from_counts(c, q, f) for c, _ in classes])
    vg = np.array([distinct_tuples_from_counts(c, q, g) for c, _ in classes])
    return float(probs @ (vf / vg)), float(probs @ vf) / float(probs @ vg)


TENSOR_LAWS = {"p0.5": (0.5, 0.5), "p0.3": (0.3, 0.7)}


def tensor_conditional_checks(q_values=(2, 3), extra=4, max_N_enumerated=6):
    """Conditional-mean and Jensen-gap bounds for distinct-tuple means (N >= 2 q^2)."""
    reports = []
    for q in q_values:
        thr = 2 * q * q
        for N in range(q + 1, thr + extra + 1):
            for law_id, p in TENSOR_LAWS.items():
                for f_id, f in _tensor_functions(2, q).items():
                    ctx = _ctx(law_id, N=N, q=q, f_id=f_id)
                    if N < thr:
                        if N <= max_N_enumerated:
                            reports.append(skipped("L5.f20", 0, 0, ctx, note=f"N < 2q^2 = {thr}"))
                        continue
                    a, b = float(f.min()), float(f.max())
                    ratio, product = tensor_conditional_case(N, q, p, f)
                    reports.append(check_sandwich(Estimate.exact("L5.f20", ratio), 0.0,
                                                  2 * q * q / N * (b / a - 1), "L5.f20", ctx))
                    reports.append(check_sandwich(Estimate.exact("L5.f22", product), 1.0,
                                                  1 + 2 * q * q / N * (b / a) * (b / a - 1) ** 2, "L5.f22", ctx))
    return reports


def tensor_ratio_checks(q_values=(2, 3), extra=4, max_N_enumerated=6):
    """Tensor ratio sandwich with ``c1(q) = 2 q^2 c`` and ``c2(q) = 2 c1(q)(1 + 2c(c+1))``."""
    reports = []
    for q in q_values:
        fs = _tensor_functions(2, q)
        g = fs["prod"] ** 0.25
        c = float(g.max() / g.min()) - 1
        thr = C.tensor_ratio_threshold(c, q)
        for N in range(q + 1, int(math.floor(thr)) + extra + 1):
            for law_id, p in TENSOR_LAWS.items():
                for f_id, f in (("first", fs["first"]), ("sum", fs["sum"]), ("zero_one", (fs["first"] > 1.5) * 1.0)):
                    ctx = _ctx(law_id, N=N, q=q, f_id=f_id)
                    if not N > thr:
                        if N <= max_N_enumerated:
                            reports.append(skipped("P5.ratio", 0, 0, ctx, note=f"N <= {thr:g}"))
                        continue
                    c1, c2 = C.tensor_ratio_constants(c, q)
                    value, ratio = tensor_ratio_case(N, q, p, f, g)
                    reports.append(check_sandwich(Estimate.exact("P5.ratio", value), (1 - c1 / N) * ratio,
                                                  ratio * (1 + c2 / N), "P5.ratio", ctx))
    return reports


# ---------------------------------------------------------------------------
# Combinatorial facts (exact rational arithmetic)
# ---------------------------------------------------------------------------

def _fraction_report(inequality_id, margins, context):
    """PASS iff every exact margin is >= 0; the estimate is the smallest margin."""
    worst_key = min(margins, key=margins.get)
    worst = margins[worst_key]
    verdict = PASS if worst >= 0 else FAIL
    est = Estimate.exact(inequality_id, float(worst))
    return BoundsReport(inequality_id, 0.0, math.inf, est, verdict, {**context, "f_id": str(worst_key)},
                        note=f"{len(margins)} cases, exact rationals")


def combinatorial_checks(max_N=64):
    """Distinct-draw, overlap, Vandermonde and Stirling bounds over ``2 <= q < N <= max_N``."""
    grid = [(N, q) for N in range(3, max_N + 1) for q in range(2, N)]
    chain_low, chain_mid, chain_top, overlap_q2, overlap_2q2, vdm = {}, {}, {}, {}, {}, {}
    for N, q in grid:
        frac = distinct_fraction(N, q)
        power = Fraction(N - q + 1, N) ** (q - 1)
        chain_low[(N, q)] = power - (1 - Fraction((q - 1) ** 2, N))
        chain_mid[(N, q)] = frac - power
        chain_top[(N, q)] = 1 - frac
        diff = Fraction(falling_factorial(N, q) - falling_factorial(N - q, q), N**q)
        # [(N)_q - (N-q)_q] / N^q <= 1 - (1 - q/N)^q <= q^2/N
        overlap_q2[(N, q)] = min(Fraction(q * q, N) - (1 - Fraction(N - q, N) ** q),
                                 (1 - Fraction(N - q, N) ** q) - diff)
        if N >= 2 * (q - 1) ** 2:
            overlap_2q2[(N, q)] = Fraction(2 * q * q, N) - overlap_fraction(N, q)
        vdm[(N, q)] = -abs(vandermonde_ratio(N, q) - 1)
    ctx = _ctx("combinatorics")
    reports = [
        _fraction_report("B.f26.lower", chain_low, ctx),
        _fraction_report("B.f26.middle", chain_mid, ctx),
        _fraction_report("B.f26.upper", chain_top, ctx),
        _fraction_report("B.overlap_over_Nq", overlap_q2, ctx),
        _fraction_report("B.f21", overlap_2q2, ctx),
        _fraction_report("B.vandermonde", vdm, ctx),
    ]
    # the worked example: (10)_3 = 720 and the convolution sums to it
    total = sum(comb(3, k) * falling_factorial(3, k) * falling_factorial(7, 3 - k) for k in range(4))
    reports.append(_fraction_report("B.vandermonde_N10_q3",
                                    {"sum=720": -abs(Fraction(total) - 720),
                                     "(10)_3=720": -abs(Fraction(falling_factorial(10, 3)) - 720)}, ctx))
    half, crude = {}, {}
    for q in range(1, max_N + 1):
        for l in range(0, q):
            s = stirling2(q, q - l)
            crude[(q, l)] = Fraction(comb(q, l) * q**l) - s
            if l >= 1:
                half[(q, l)] = Fraction(comb(q, l) * (q - l) ** l, 2) - s
    reports.append(_fraction_report("C.stirling_half", half, ctx))
    reports.append(_fraction_report("C.stirling_crude", crude, ctx))
    return reports


def tensor_suite(max_N=6):
    """All tensor-product checks: coalescence formula, decomposition, ratio estimates, combinatorics."""
    return (coalescence_checks(max_N) + decomposition_checks(max_N) + tensor_conditional_checks() + tensor_ratio_checks()
            + combinatorial_checks())
