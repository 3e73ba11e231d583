"""CSV/JSON output format, golden files, determinism and the command-line contract."""

import json
import os
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from fk_lab.cli import main
from fk_lab.model import save_model
from fk_lab.verify.corpus import mixing_model, unit_model
from fk_lab.verify.report import csv_text, format_value, read_bounds_csv, summary, write_reports
from fk_lab.verify.stats import Estimate, check_sandwich

GOLDEN = Path(__file__).parent / "golden"


def _run(*argv):
    return main([str(a) for a in argv])


class TestFormat:
    def test_values(self):
        assert format_value(0.1) == "0.1"
        assert format_value(float("inf")) == "inf" and format_value(-np.inf) == "-inf"
        assert format_value(np.float64(1.5)) == "1.5" and format_value(np.int64(3)) == "3"
        assert format_value(float("nan")) == "nan"

    def test_csv_uses_lf_and_header(self):
        text = csv_text(("a", "b"), [(1, 0.25), {"a": 2, "b": 1e-20}])
        assert text == "a,b\n1,0.25\n2,1e-20\n"
        assert "\r" not in text

    def test_reports_roundtrip(self, tmp_path):
        r = check_sandwich(Estimate("x", 0.5, 0.01, 100), 0.0, 1.0, "T.x", {"model": "m", "N": 10})
        doc = write_reports(tmp_path, "v", [r])
        rows = read_bounds_csv(tmp_path / "v.csv")
        assert rows[0]["verdict"] == "PASS" and rows[0]["N"] == "10" and rows[0]["q"] == ""
        assert doc == json.loads((tmp_path / "v_summary.json").read_text())
        assert summary([r])["counts"]["PASS"] == 1


class TestOracleCommand:
    def test_unit_potential_prints_unit_mass(self, tmp_path, capsys):
        assert _run("oracle", "--corpus", "unit", "--out", tmp_path) == 0
        lines = capsys.readouterr().out.splitlines()
        last_level = [ln for ln in lines if ln.strip().startswith("5 ")][0]
        assert last_level.split()[1] == "1"
        assert "rho_n = 1\n" in "\n".join(lines) + "\n"

    def test_mixing_rho_matches_golden(self, tmp_path, capsys):
        assert _run("oracle", "--corpus", "mixing", "--out", tmp_path) == 0
        golden = json.loads((GOLDEN / "oracle_mixing_n8.json").read_text())
        doc = json.loads((tmp_path / "oracle.json").read_text())
        assert doc == golden
        assert f"rho_n = {golden['rho_n']:.10g}" in capsys.readouterr().out

    def test_golden_rho_by_path_enumeration(self):
        # independent check of the golden: Q_{p,q}(1) by explicit sums over next states
        model = mixing_model(8)
        golden = json.loads((GOLDEN / "oracle_mixing_n8.json").read_text())
        worst = 1.0
        for p in range(9):
            for q in range(p, 9):
                h = np.ones(2)
                for k in range(q, p, -1):
                    h = np.array([sum(model.potentials[k - 1][x] * model.kernel_dense(k)[x, y] * h[y]
                                      for y in range(2)) for x in range(2)])
                worst = max(worst, h.max() / h.min())
        assert golden["rho_n"] == pytest.approx(worst, rel=1e-12)

    def test_model_file_and_missing_file(self, tmp_path, capsys):
        save_model(unit_model(2), tmp_path / "m.json")
        assert _run("oracle", "--model", tmp_path / "m.json", "--out", tmp_path / "o") == 0
        assert _run("oracle", "--model", tmp_path / "nope.json", "--out", tmp_path / "o") == 2
        assert "not found" in capsys.readouterr().err

    def test_invalid_model_file(self, tmp_path, capsys):
        (tmp_path / "bad.json").write_text(json.dumps({"horizon": 0, "space_sizes": [2], "kernels": [],
                                                       "potentials": [[1, -1]], "initial": [0.5, 0.5]}))
        assert _run("oracle", "--model", tmp_path / "bad.json", "--out", tmp_path) == 2
        assert "potentials[0][1]" in capsys.readouterr().err

    def test_capacity_error_exit_code(self, tmp_path):
        assert _run("oracle", "--corpus", "lattice", "--tensor-q", "12", "--N-values", "100",
                    "--out", tmp_path) == 3

    def test_usage_errors(self, tmp_path):
        assert _run("oracle", "--out", tmp_path) == 2
        assert _run("oracle", "--corpus", "nosuch", "--out", tmp_path) == 2
        assert _run("frobnicate") == 2


class TestSimulateCommand:
    def test_seed_is_mandatory(self, tmp_path):
        assert _run("simulate", "--corpus", "mixing", "--out", tmp_path) == 2

    def test_single_particle_single_replicate(self, tmp_path):
        assert _run("simulate", "--corpus", "mixing", "--N", 1, "--R", 1, "--seed", 0, "--out", tmp_path) == 0
        lines = (tmp_path / "replicates.csv").read_text().splitlines()
        assert lines[0] == "replicate_id,estimator_name,value"
        assert {ln.split(",")[0] for ln in lines[1:]} == {"0"}

    def test_replicates_golden(self, tmp_path):
        assert _run("simulate", "--corpus", "mixing", "--horizon", 3, "--N", 10, "--R", 6, "--seed", 7,
                    "--out", tmp_path) == 0
        golden = (GOLDEN / "simulate_mixing_n3_N10_R6_seed7.csv").read_bytes()
        assert (tmp_path / "replicates.csv").read_bytes() == golden

    def test_chain_golden(self, tmp_path):
        assert _run("simulate", "--corpus", "sticky", "--horizon", 3, "--N", 8, "--mode", "backward",
                    "--steps", 5, "--chains", 3, "--seed", 7, "--out", tmp_path) == 0
        golden = (GOLDEN / "chain_sticky_n3_N8_backward_seed7.csv").read_bytes()
        assert (tmp_path / "chain.csv").read_bytes() == golden

    def test_rerun_is_byte_identical(self, tmp_path):
        for d in ("a", "b"):
            _run("simulate", "--corpus", "lattice", "--horizon", 2, "--N", 5, "--R", 20, "--seed", 3,
                 "--mode", "dual", "--frozen", "1,2,3", "--out", tmp_path / d)
        assert (tmp_path / "a/replicates.csv").read_bytes() == (tmp_path / "b/replicates.csv").read_bytes()

    def test_bad_frozen_path(self, tmp_path):
        assert _run("simulate", "--corpus", "mixing", "--horizon", 2, "--mode", "dual", "--frozen", "0,1",
                    "--seed", 1, "--out", tmp_path) == 2

    def test_config_file_and_flag_override(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"corpus": "mixing", "horizon": 2, "N": 4, "R": 3, "seed": 5}))
        assert _run("simulate", "--config", cfg, "--R", 2, "--out", tmp_path / "o") == 0
        manifest = json.loads((tmp_path / "o/manifest.json").read_text())
        assert manifest["R"] == 2 and manifest["N"] == 4
        cfg.write_text(json.dumps({"bogus": 1}))
        assert _run("simulate", "--config", cfg, "--out", tmp_path / "o") == 2

    def test_thread_count_does_not_change_output(self, tmp_path):
        env = {**os.environ, "NUMBA_NUM_THREADS": "4"}
        outs = []
        for t in (1, 4):
            out = tmp_path / f"t{t}"
            subprocess.run([sys.executable, "-m", "fk_lab.cli", "simulate", "--corpus", "mixing", "--horizon", "3",
                            "--N", "10", "--R", "6", "--seed", "7", "--threads", str(t), "--out", str(out)],
                           check=True, env=env, capture_output=True)
            outs.append((out / "replicates.csv").read_bytes())
        assert outs[0] == outs[1] == (GOLDEN / "simulate_mixing_n3_N10_R6_seed7.csv").read_bytes()


class TestVerifyCommand:
    def test_exact_lemma_suites_exit_zero(self, tmp_path):
        assert _run("verify", "--suite", "lemmas", "--seed", 0, "--out", tmp_path) == 0
        doc = json.loads((tmp_path / "verify_summary.json").read_text())
        assert doc["counts"]["FAIL"] == 0 and doc["counts"]["PASS"] > 0

    def test_unit_model_bias_zero_width_pass(self, tmp_path):
        assert _run("verify", "--suite", "bias", "--corpus", "unit", "--horizon", 3, "--R", 500,
                    "--N-values", "20,40", "--seed", 1, "--out", tmp_path) == 0
        rows = read_bounds_csv(tmp_path / "verify.csv")
        assert rows and {r["verdict"] for r in rows} == {"PASS"}
        assert all(r["lower"] == r["upper"] for r in rows if r["inequality_id"] == "T1.f11")

    def test_statistical_golden(self, tmp_path):
        assert _run("verify", "--suite", "unbiasedness", "--corpus", "mixing", "--horizon", 3, "--R", 200,
                    "--N", 20, "--seed", 7, "--out", tmp_path) == 0
        golden = (GOLDEN / "verify_unbiasedness_mixing_n3_R200_seed7.csv").read_bytes()
        assert (tmp_path / "verify.csv").read_bytes() == golden

    def test_corrupted_constant_exits_nonzero(self, tmp_path):
        assert _run("verify", "--corrupt", "--seed", 1, "--R", 100_000, "--out", tmp_path) == 1

    def test_unknown_suite(self, tmp_path):
        assert _run("verify", "--suite", "nope", "--seed", 0, "--out", tmp_path) == 2

    def test_report_aggregates(self, tmp_path, capsys):
        _run("verify", "--suite", "lemmas", "--seed", 0, "--out", tmp_path)
        assert _run("report", "--input", tmp_path, "--out", tmp_path) == 0
        doc = json.loads((tmp_path / "report_summary.json").read_text())
        assert doc["total"] > 0 and "L3.coalescence" in doc["by_inequality"]
        assert _run("report", "--input", tmp_path / "missing", "--out", tmp_path) == 2
