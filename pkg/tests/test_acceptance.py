"""Acceptance criteria 1-12 at their stated parameters.

Each test records one line ``C<k> PASS|FAIL <detail>``; the lines are printed
together in the terminal summary (see ``conftest.py``).  Tolerances: exact
identities 1e-10 relative, exact bounds 1e-9 absolute slack, statistical
checks at 99.99% normal intervals (4 sigma for unbiasedness), R = 1e5.
"""

import os
import subprocess
import sys
import time
from pathlib import Path

import pytest

from fk_lab.cli import SUITE_PLAN, main
from fk_lab.verify.corpus import CORPUS, corpus_model, mixing_model
from fk_lab.verify.experiments import run_bound_experiment
from fk_lab.verify.stats import CONSTANT_DISPUTED, FAIL, INCONCLUSIVE, PASS, SKIPPED

pytestmark = pytest.mark.acceptance

R = 100_000
SEED = 20_241_014
RESULTS = {}
GOLDEN = Path(__file__).parent / "golden"


def _record(key, ok, detail):
    RESULTS[key] = f"{key} {'PASS' if ok else 'FAIL'}  {detail}"
    print(RESULTS[key])
    assert ok, RESULTS[key]


def _counts(reports, ids=None):
    out = {}
    for r in reports:
        if ids is None or r.inequality_id in ids:
            out[r.verdict] = out.get(r.verdict, 0) + 1
    return out


def _fmt(counts):
    return " ".join(f"{k}={v}" for k, v in sorted(counts.items()))


def _timed(fn):
    t0 = time.perf_counter()
    out = fn()
    return out, time.perf_counter() - t0


def _exact_suite(suite):
    models, horizons = SUITE_PLAN[suite]
    reports = []
    for m in models:
        for h in horizons:
            reports += run_bound_experiment(suite, corpus_model(m, h), {"name": m})
    return reports


class TestExactCriteria:
    def test_c01_oracle_identities(self):
        reports, dt = _timed(lambda: [r for m in CORPUS
                                      for r in run_bound_experiment("oracle", corpus_model(m), {"name": m})])
        c = _counts(reports)
        _record("C1", c == {PASS: len(reports)} and dt < 10, f"oracle identities {_fmt(c)} in {dt:.1f}s (<10s)")

    def test_c02_exhaustive_suites(self):
        reports, dt = _timed(lambda: run_bound_experiment("lemmas", None))
        c = _counts(reports)
        ok = FAIL not in c and INCONCLUSIVE not in c and c.get(PASS, 0) > 0 and dt < 60
        _record("C2", ok, f"exhaustive lemma suites {_fmt(c)} in {dt:.1f}s (<60s)")

    def test_c03_frozen_matrix_checks(self):
        reports, dt = _timed(lambda: [r for s in ("frozen_semigroup", "frozen_measure", "oscillation") for r in _exact_suite(s)])
        c = _counts(reports)
        ok = FAIL not in c and INCONCLUSIVE not in c and c.get(PASS, 0) > 0 and dt < 120
        _record("C3", ok, f"frozen semigroup/measure/oscillation {_fmt(c)} in {dt:.1f}s (<120s)")


class TestStatisticalCriteria:
    def test_c04_unbiasedness(self):
        def run():
            return [r for m in CORPUS for r in run_bound_experiment(
                "unbiasedness", corpus_model(m, 5), {"name": m, "N": 100, "R": R, "seed": SEED})]
        reports, dt = _timed(run)
        c = _counts(reports)
        _record("C4", c == {PASS: len(reports)} and dt < 60,
                f"E[Z m(g)] = gamma(g), n=5 N=100 R=1e5, 4 sigma: {_fmt(c)} in {dt:.1f}s (<60s)")

    def test_c05_bias_sandwich(self):
        reports, dt = _timed(lambda: run_bound_experiment(
            "bias", mixing_model(8), {"name": "mixing", "N_values": (100, 200, 400, 800), "R": R,
                                          "seed": SEED}))
        sandwich = _counts(reports, {"T1.f10", "T1.f11"})
        scaling = {r.inequality_id: r.verdict for r in reports if r.inequality_id in ("T1.slope", "T1.ratio")}
        ratio_800 = [r for r in reports if r.inequality_id == "T1.ratio" and r.context.get("N") == "800/200"]
        ok = (sandwich == {PASS: sum(sandwich.values())} and scaling.get("T1.slope") == PASS
              and ratio_800 and all(r.verdict == PASS for r in ratio_800) and dt < 600)
        _record("C5", ok, f"sandwich+bias {_fmt(sandwich)}; slope={scaling.get('T1.slope')} "
                          f"ratio(800 vs 200)={[r.verdict for r in ratio_800]} in {dt:.0f}s (<600s)")

    def test_c06_backward_equals_ancestral(self):
        reports, dt = _timed(lambda: run_bound_experiment(
            "backward", mixing_model(8), {"name": "mixing", "N": 100, "R": R, "seed": SEED}))
        c = _counts(reports)
        _record("C6", c == {PASS: len(reports)}, f"paired backward - ancestral means {_fmt(c)} in {dt:.0f}s")

    def test_c07_propagation_of_chaos(self):
        reports, dt = _timed(lambda: run_bound_experiment(
            "chaos", mixing_model(2), {"name": "mixing", "q_values": (2, 3), "R": R, "seed": SEED}))
        c16, c17 = _counts(reports, {"C.f16"}), _counts(reports, {"C.f17"})
        qs = {r.context["q"] for r in reports if r.verdict == PASS}
        ok = set(c16) == {PASS} and set(c17) == {PASS} and qs == {2, 3} and dt < 600
        _record("C7", ok, f"q in (2,3), n=2: vs eta^q {_fmt(c16)}; vs eta^(q) {_fmt(c17)} in {dt:.0f}s (<600s)")

    def test_c08_pg_kernels(self):
        reports, dt = _timed(lambda: run_bound_experiment(
            "pg_kernels", mixing_model(4), {"name": "mixing", "N_values": (50, 200), "R": R, "seed": SEED}))
        c = _counts(reports)
        f23 = _counts(reports, {"T2.f23.K", "T2.f23.Kb"})
        ok = set(c) <= {PASS, CONSTANT_DISPUTED, SKIPPED} and f23.get(PASS, 0) > 0 and set(f23) <= {PASS, SKIPPED}
        _record("C8", ok, f"particle Gibbs kernels n=4 N in (50,200): {_fmt(c)}; minorisation {_fmt(f23)} "
                          f"in {dt:.0f}s")

    def test_c09_invariance_and_contraction(self):
        model = mixing_model(3)
        params = {"name": "mixing", "R": R, "seed": SEED}
        (inv, con), dt = _timed(lambda: (run_bound_experiment("invariance", model, {**params, "N": 50}),
                                         run_bound_experiment("contraction", model, {**params, "N": 60})))
        ci = _counts(inv)
        decay = _counts(con, {"T2.f14.decay"})
        rate = _counts(con, {"T2.f14.rate"})
        ok = (ci == {PASS: len(inv)} and set(decay) == {PASS} and set(rate) <= {PASS, CONSTANT_DISPUTED}
              and rate and dt < 900)
        _record("C9", ok, f"invariance {_fmt(ci)}; TV decay {_fmt(decay)}; rate vs 1-eps {_fmt(rate)} "
                          f"in {dt:.0f}s (<900s)")

    def test_c10_dual_chaos(self):
        def run():
            stat = run_bound_experiment("dual_chaos", mixing_model(2), {"name": "mixing", "q": 2, "R": R,
                                                                         "seed": SEED})
            exact = [r for m in ("mixing", "sticky") for r in run_bound_experiment(
                "dual_identity", corpus_model(m, 1), {"name": m, "N": 3, "q": 2})]
            return stat, exact
        (stat, exact), dt = _timed(run)
        cs, ce = _counts(stat), _counts(exact)
        ok = ce == {PASS: len(exact)} and set(cs) == {PASS}
        _record("C10", ok, f"dual q=2 vs frozen tensor {_fmt(cs)}; one-step N=3 identity {_fmt(ce)} in {dt:.0f}s")


class TestContractCriteria:
    def test_c11_determinism(self, tmp_path):
        argv = ["simulate", "--corpus", "mixing", "--horizon", "3", "--N", "10", "--R", "6", "--seed", "7"]
        outs = []
        for i in range(2):
            assert main(argv + ["--out", str(tmp_path / f"r{i}")]) == 0
            outs.append((tmp_path / f"r{i}" / "replicates.csv").read_bytes())
        env = {**os.environ, "NUMBA_NUM_THREADS": "4"}
        for t in (1, 4):
            subprocess.run([sys.executable, "-m", "fk_lab.cli", *argv, "--threads", str(t),
                            "--out", str(tmp_path / f"t{t}")], check=True, env=env, capture_output=True)
            outs.append((tmp_path / f"t{t}" / "replicates.csv").read_bytes())
        vargs = ["verify", "--suite", "unbiasedness", "--corpus", "mixing", "--horizon", "3", "--R", "200",
                 "--N", "20", "--seed", "7", "--out", str(tmp_path / "v")]
        assert main(vargs) == 0
        golden_sim = (GOLDEN / "simulate_mixing_n3_N10_R6_seed7.csv").read_bytes()
        golden_ver = (GOLDEN / "verify_unbiasedness_mixing_n3_R200_seed7.csv").read_bytes()
        ok = all(o == golden_sim for o in outs) and (tmp_path / "v" / "verify.csv").read_bytes() == golden_ver
        _record("C11", ok, "reruns and --threads 1/4 byte-identical to golden CSVs")

    def test_c12_negative_control(self, tmp_path):
        code = main(["verify", "--corrupt", "--seed", str(SEED), "--R", str(R), "--out", str(tmp_path)])
        rows = (tmp_path / "verify.csv").read_text().splitlines()[1:]
        fails = sum(r.endswith(",FAIL") for r in rows)
        _record("C12", code == 1 and fails >= 1, f"corrupted bias constant: {fails} FAIL, exit code {code}")
