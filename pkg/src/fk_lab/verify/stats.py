"""Replicated means, confidence intervals and sandwich verdicts."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import norm

from ..errors import NonFiniteReplicateError

DEFAULT_CI_LEVEL = 0.9999
EXACT_SLACK = 1e-9
# Floating-point rounding allowance for replicate means (differences of equal quantities).
ROUNDING_SLACK = 1e-12

PASS = "PASS"
FAIL = "FAIL"
INCONCLUSIVE = "INCONCLUSIVE"
SKIPPED = "SKIPPED"
CONSTANT_DISPUTED = "CONSTANT_DISPUTED"
VERDICTS = (PASS, FAIL, INCONCLUSIVE, SKIPPED, CONSTANT_DISPUTED)


def z_value(ci_level):
    if not 0 < ci_level < 1:
        raise ValueError(f"ci_level must lie in (0, 1), got {ci_level}")
    return float(norm.ppf(0.5 + ci_level / 2))


@dataclass(frozen=True)
class Estimate:
    """Replicate mean with its standard error; exact values have ``std_error = 0``."""

    name: str
    point: float
    std_error: float
    replicates: int
    ci_level: float = DEFAULT_CI_LEVEL

    def __post_init__(self):
        if not self.std_error >= 0:
            raise ValueError(f"std_error must be >= 0, got {self.std_error}")

    @property
    def half_width(self):
        return z_value(self.ci_level) * self.std_error

    @property
    def ci(self):
        h = self.half_width
        return self.point - h, self.point + h

    @classmethod
    def exact(cls, name, value):
        return cls(name, float(value), 0.0, 0)

    def scaled(self, factor, name=None):
        return Estimate(name or self.name, self.point * factor, self.std_error * abs(factor),
                        self.replicates, self.ci_level)


class MomentAccumulator:
    """Running mean and centred second moment, merged batch by batch (Chan et al.)."""

    def __init__(self, width):
        self.count = 0
        self.mean = np.zeros(width)
        self.m2 = np.zeros(width)

    def add(self, values):
        values = np.asarray(values, dtype=float)
        if values.ndim == 1:
            values = values[:, None]
        nb = values.shape[0]
        if nb == 0:
            return
        mb = values.mean(axis=0)
        m2b = ((values - mb) ** 2).sum(axis=0)
        total = self.count + nb
        delta = mb - self.mean
        self.mean = self.mean + delta * (nb / total)
        self.m2 = self.m2 + m2b + delta**2 * (self.count * nb / total)
        self.count = total

    def estimates(self, names, ci_level=DEFAULT_CI_LEVEL):
        if self.count < 2:
            raise ValueError("need at least 2 replicates for a standard error")
        var = self.m2 / (self.count - 1)
        se = np.sqrt(np.maximum(var, 0.0) / self.count)
        return [Estimate(nm, float(m), float(s), self.count, ci_level)
                for nm, m, s in zip(names, self.mean, se)]


def iter_batches(R, batch_size):
    """Consecutive replicate-id blocks ``[start, start+size)`` covering ``range(R)``."""
    for start in range(0, R, batch_size):
        yield np.arange(start, min(R, start + batch_size), dtype=np.int64)


def check_finite(values, rep_ids):
    values = np.asarray(values, dtype=float)
    bad = ~np.isfinite(values)
    if bad.any():
        row = int(np.argwhere(bad)[0][0])
        raise NonFiniteReplicateError(int(rep_ids[row]), values.reshape(len(rep_ids), -1)[row].tolist())


def replicate_mean(experiment, R, master_seed, ci_level=DEFAULT_CI_LEVEL):
    """Mean and standard error of every estimator of ``experiment`` over R replicates.

    ``experiment`` provides ``names``, ``batch_size`` and
    ``evaluate(master_seed, replicate_ids) -> (B, len(names))``.  Batches are
    fixed blocks of replicate ids merged in order, so the result depends only
    on ``(experiment, R, master_seed)``.
    """
    if R < 2:
        raise ValueError(f"need R >= 2 replicates, got {R}")
    acc = MomentAccumulator(len(experiment.names))
    for ids in iter_batches(R, experiment.batch_size):
        vals = np.asarray(experiment.evaluate(master_seed, ids), dtype=float).reshape(ids.size, -1)
        check_finite(vals, ids)
        acc.add(vals)
    return acc.estimates(experiment.names, ci_level)


def mean_of_values(name, values, ci_level=DEFAULT_CI_LEVEL):
    """Estimate from an explicit vector of replicate values."""
    acc = MomentAccumulator(1)
    values = np.asarray(values, dtype=float)
    check_finite(values, np.arange(values.size))
    acc.add(values)
    return acc.estimates([name], ci_level)[0]


@dataclass
class BoundsReport:
    """One checked inequality ``lower <= estimate <= upper``."""

    inequality_id: str
    lower: float
    upper: float
    estimate: Estimate | None
    verdict: str
    context: dict = field(default_factory=dict)
    note: str = ""

    def row(self):
        est = self.estimate
        c = self.context
        return {
            "inequality_id": self.inequality_id,
            "model": c.get("model", ""),
            "n": c.get("n", ""),
            "N": c.get("N", ""),
            "q": c.get("q", ""),
            "f_id": c.get("f_id", ""),
            "z_id": c.get("z_id", ""),
            "lower": self.lower,
            "upper": self.upper,
            "estimate": "" if est is None else est.point,
            "stderr": "" if est is None else est.std_error,
            "verdict": self.verdict,
        }


def sandwich_verdict(point, half_width, lower, upper, slack=0.0):
    """Three-valued verdict for a confidence interval against ``[lower, upper]``.

    FAIL when the interval ``point +- half_width`` is disjoint from the
    bounds; PASS when it lies inside them, or when it covers them entirely
    (bounds narrower than the statistical resolution, e.g. zero width);
    INCONCLUSIVE when it straddles an edge.
    """
    for v in (point, half_width, lower, upper):
        if math.isnan(v):
            raise ValueError("NaN in sandwich check")
    if lower > upper:
        raise ValueError(f"lower bound {lower} exceeds upper bound {upper}")
    lo, hi = point - half_width, point + half_width
    lo_b, hi_b = lower - slack, upper + slack
    if hi < lo_b or lo > hi_b:
        return FAIL
    if lo_b <= lo and hi <= hi_b:
        return PASS
    if lo <= lower and upper <= hi:
        return PASS
    return INCONCLUSIVE


def check_sandwich(estimate, lower, upper, inequality_id="sandwich", context=None, slack=None):
    """Compare an estimate (or an exact value, ``std_error = 0``) with a theoretical interval."""
    if slack is None:
        slack = EXACT_SLACK if estimate.std_error == 0 else ROUNDING_SLACK
    verdict = sandwich_verdict(estimate.point, estimate.half_width, float(lower), float(upper), slack)
    return BoundsReport(inequality_id, float(lower), float(upper), estimate, verdict, dict(context or {}))


def skipped(inequality_id, lower, upper, context=None, note=""):
    return BoundsReport(inequality_id, float(lower), float(upper), None, SKIPPED, dict(context or {}), note)


def count_verdicts(reports):
    counts = {v: 0 for v in VERDICTS}
    for r in reports:
        counts[r.verdict] += 1
    return counts
