"""Command-line entry point ``fk-lab``.

Subcommands::

    fk-lab oracle   --corpus mixing --horizon 8 --out out/
    fk-lab simulate --corpus mixing --N 100 --R 1000 --seed 1 --out out/
    fk-lab verify   --suite lemmas --seed 1 --out out/
    fk-lab report   --input out/ --out out/

Every option can also come from a JSON file given with ``--config``
(keys are the option names with dashes replaced by underscores); explicit
flags win over the file.  Exit codes: 0 success, 1 FAIL verdicts present,
2 usage or configuration error, 3 capacity error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .errors import CapacityError, FkLabError, ModelValidationError
from .model import decode_paths, load_model, path_space_sizes

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_CAPACITY = 0, 1, 2, 3

# Corpus models and horizons each suite runs on when no model file is given.
SUITE_PLAN = {
    "lemmas": ((None,), (None,)),
    "oracle": (("unit", "mixing", "sticky", "lattice"), (None,)),
    "frozen_semigroup": (("unit", "mixing", "sticky", "lattice"), (1, 2, 3, 4, 5)),
    "frozen_measure": (("unit", "mixing", "sticky", "lattice"), (1, 2, 3, 4, 5)),
    "oscillation": (("unit", "mixing", "sticky", "lattice"), (1, 2, 3, 4, 5)),
    "transfer": (("mixing", "sticky", "lattice"), (3,)),
    "dual_identity": (("mixing", "sticky"), (1,)),
    "unbiasedness": (("unit", "mixing", "sticky", "lattice"), (5,)),
    "bias": (("mixing",), (8,)),
    "negative_control": (("mixing",), (8,)),
    "backward": (("mixing",), (8,)),
    "chaos": (("mixing",), (2,)),
    "pg_kernels": (("mixing",), (4,)),
    "invariance": (("mixing",), (3,)),
    "contraction": (("mixing",), (3,)),
    "dual_chaos": (("mixing",), (2,)),
}
SUITE_GROUPS = {
    "exact": ("lemmas", "oracle", "frozen_semigroup", "frozen_measure", "oscillation", "transfer", "dual_identity"),
    "statistical": ("unbiasedness", "bias", "backward", "chaos", "pg_kernels", "invariance", "contraction",
                    "dual_chaos"),
}
SUITE_GROUPS["all"] = SUITE_GROUPS["exact"] + SUITE_GROUPS["statistical"]

DEFAULTS = {
    "oracle": {"out": "fk_lab_out", "tensor_q": "", "N_values": ""},
    "simulate": {"out": "fk_lab_out", "N": 100, "R": 1000, "mode": "smc", "steps": 10, "chains": 1},
    "verify": {"out": "fk_lab_out", "suite": "lemmas", "N_values": ""},
    "report": {"out": "fk_lab_out"},
}


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# Argument handling
# ---------------------------------------------------------------------------

def _common(p, model=True):
    p.add_argument("--config", help="JSON file with option values (flags override it)")
    p.add_argument("--out", help="output directory (default: fk_lab_out)")
    p.add_argument("--threads", type=int, help="cap on worker threads (default: FK_LAB_THREADS or all cores)")
    if model:
        g = p.add_argument_group("model")
        g.add_argument("--model", help="model JSON file")
        g.add_argument("--corpus", help="corpus model name (unit, mixing, sticky, lattice)")
        g.add_argument("--horizon", type=int, help="horizon for corpus models")


def build_parser():
    parser = argparse.ArgumentParser(prog="fk-lab", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("oracle", help="exact measures, ratio and contraction constants")
    _common(p)
    p.add_argument("--tensor-q", dest="tensor_q", help="comma-separated tensor orders to dump")
    p.add_argument("--N-values", dest="N_values", help="comma-separated N for the tensor dumps")

    p = sub.add_parser("simulate", help="replicated particle runs or particle Gibbs chains")
    _common(p)
    p.add_argument("--mode", choices=("smc", "dual", "ancestral", "backward"))
    p.add_argument("--N", type=int, help="number of particles")
    p.add_argument("--R", type=int, help="replicates (smc/dual modes)")
    p.add_argument("--seed", type=int, help="master seed (mandatory)")
    p.add_argument("--frozen", help="frozen/start path as comma-separated states (default all zeros)")
    p.add_argument("--steps", type=int, help="particle Gibbs sweeps")
    p.add_argument("--chains", type=int, help="independent particle Gibbs chains")

    p = sub.add_parser("verify", help="run bound-checking suites")
    _common(p)
    p.add_argument("--suite", help="comma-separated suites or groups: " + ", ".join(
        list(SUITE_PLAN) + list(SUITE_GROUPS)))
    p.add_argument("--seed", type=int, help="master seed (mandatory)")
    p.add_argument("--R", type=int, help="replicates for statistical suites (default 100000)")
    p.add_argument("--N", type=int, help="population size where a suite takes a single N")
    p.add_argument("--N-values", dest="N_values", help="comma-separated population sizes")
    p.add_argument("--corrupt", action="store_true", default=None,
                   help="negative control: divide the bias constant by 100 (must produce a FAIL)")

    p = sub.add_parser("report", help="summarise bound CSV files")
    _common(p, model=False)
    p.add_argument("--input", help="bounds CSV file or directory of them")
    return parser


def _merge_config(args):
    if args.config:
        try:
            doc = json.loads(Path(args.config).read_text())
        except FileNotFoundError:
            raise UsageError(f"config file not found: {args.config}") from None
        except json.JSONDecodeError as exc:
            raise UsageError(f"config file {args.config}: invalid JSON ({exc})") from None
        if not isinstance(doc, dict):
            raise UsageError("config file must hold a JSON object")
        for key, value in doc.items():
            if not hasattr(args, key):
                raise UsageError(f"config file: unknown option {key!r}")
            if getattr(args, key) is None:
                setattr(args, key, value)
    for key, value in DEFAULTS[args.command].items():
        if getattr(args, key) is None:
            setattr(args, key, value)
    return args


def _int_list(text):
    if text in (None, ""):
        return []
    if isinstance(text, (list, tuple)):
        return [int(v) for v in text]
    try:
        return [int(v) for v in str(text).split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"expected comma-separated integers, got {text!r}") from None


def configure_threads(requested):
    """Apply ``--threads`` (or ``FK_LAB_THREADS``); returns the thread count in use."""
    import numba

    from . import _kernels  # noqa: F401  (selects the threading layer before numba starts threads)

    if requested is None:
        env = os.environ.get("FK_LAB_THREADS")
        if env:
            try:
                requested = int(env)
            except ValueError:
                raise UsageError(f"FK_LAB_THREADS must be an integer, got {env!r}") from None
    limit = numba.config.NUMBA_NUM_THREADS
    if requested is None:
        return numba.get_num_threads()
    if requested < 1:
        raise UsageError("--threads must be >= 1")
    numba.set_num_threads(min(requested, limit))
    return numba.get_num_threads()


def _load(args):
    from .verify.corpus import corpus_model

    if args.model and args.corpus:
        raise UsageError("give either --model or --corpus, not both")
    if args.model:
        path = Path(args.model)
        if not path.is_file():
            raise UsageError(f"model file not found: {path}")
        model = load_model(path)
        if args.horizon is not None:
            model = model.truncate(args.horizon)
        return path.stem, model
    if args.corpus:
        try:
            return args.corpus, corpus_model(args.corpus, args.horizon)
        except KeyError as exc:
            raise UsageError(str(exc.args[0])) from None
    raise UsageError("a model is required: --model FILE or --corpus NAME")


def _require_seed(args):
    if args.seed is None:
        raise UsageError("--seed is mandatory (no wall-clock default)")
    if args.seed < 0:
        raise UsageError("--seed must be non-negative")
    return args.seed


def _out_dir(args):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _manifest(args, out, extra):
    from .verify.report import write_json

    doc = {"command": args.command, "version": __version__,
           "options": {k: v for k, v in sorted(vars(args).items()) if k not in ("command",)}}
    doc.update(extra)
    write_json(out / "manifest.json", doc)


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def cmd_oracle(args):
    from .oracle.dump import write_oracle_dump

    name, model = _load(args)
    out = _out_dir(args)
    qs, Ns = _int_list(args.tensor_q), _int_list(args.N_values)
    doc = write_oracle_dump(model, out / "oracle.json", tensor_orders=qs, N_values=Ns)
    print(f"model {name}  hash {doc['model_hash'][:12]}  horizon {doc['horizon']}")
    print(f"{'k':>3} {'gamma_k(1)':>14} {'rho_k':>10} {'alpha(k)':>10}")
    for k in range(doc["horizon"] + 1):
        print(f"{k:>3} {doc['gamma_mass'][k]:>14.8g} {doc['rho_by_horizon'][k]:>10.6g} {doc['alpha'][k]:>10.6g}")
    print(f"rho_n = {doc['rho_n']:.10g}")
    _manifest(args, out, {"model_hash": doc["model_hash"]})
    return EXIT_OK


def _frozen_path(args, model):
    n = model.horizon
    if args.frozen in (None, ""):
        return np.zeros(n + 1, dtype=np.int64)
    z = np.array(_int_list(args.frozen), dtype=np.int64)
    if z.size != n + 1:
        raise UsageError(f"--frozen needs {n + 1} states, got {z.size}")
    for k, d in enumerate(model.space_sizes):
        if not 0 <= z[k] < d:
            raise UsageError(f"--frozen state {k} = {z[k]} outside [0, {d})")
    return z


def cmd_simulate(args):
    from .dual import pg_sweeps, run_dual_batch
    from .smc import simulate_batch
    from .verify.report import CHAIN_FIELDS, REPLICATE_FIELDS, csv_text

    seed = _require_seed(args)
    name, model = _load(args)
    if args.N < 1:
        raise UsageError("--N must be >= 1")
    out = _out_dir(args)
    n = model.horizon
    d = model.space_sizes[n]
    extra = {"model": name, "model_hash": model.fingerprint(), "seed": seed, "N": args.N}
    if args.mode in ("smc", "dual"):
        if args.R < 1:
            raise UsageError("--R must be >= 1")
        z = _frozen_path(args, model) if args.mode == "dual" else None
        names = ["log_normalizer"] + [f"m_n(1_{s})" for s in range(d)] + [f"Z_n*m_n(1_{s})" for s in range(d)]
        path = out / "replicates.csv"
        batch = max(1, min(5000, 4_000_000 // ((n + 1) * args.N)))
        with open(path, "w", newline="") as fh:
            fh.write(csv_text(REPLICATE_FIELDS, []))
            for start in range(0, args.R, batch):
                ids = np.arange(start, min(args.R, start + batch), dtype=np.int64)
                if z is None:
                    b = simulate_batch(model, args.N, seed, ids)
                else:
                    b = run_dual_batch(model, z, args.N, seed, ids)
                m = np.stack([np.bincount(row, minlength=d) for row in b.particles[:, n, :]]) / args.N
                vals = np.column_stack([b.log_normalizer, m, np.exp(b.log_normalizer)[:, None] * m])
                rows = [(int(r), nm, float(v)) for r, row in zip(ids, vals) for nm, v in zip(names, row)]
                fh.write(csv_text(REPLICATE_FIELDS, rows).split("\n", 1)[1])
        extra.update({"R": args.R, "mode": args.mode, "frozen": None if z is None else z.tolist()})
        print(f"wrote {args.R} replicates x {len(names)} estimators to {path}")
    else:
        if args.steps < 0 or args.chains < 1:
            raise UsageError("--steps must be >= 0 and --chains >= 1")
        z0 = _frozen_path(args, model)
        chains = np.arange(args.chains, dtype=np.int64)
        hist = pg_sweeps(model, z0, args.N, args.steps, args.mode, seed, chains)
        sizes = model.space_sizes
        radix = np.array([int(np.prod(sizes[k + 1:])) for k in range(n + 1)], dtype=np.int64)
        rows = []
        for t in range(args.steps + 1):
            if t == 0:
                norms = [""] * args.chains
            else:
                # the dual run of sweep t-1 is keyed by (seed, chain, stream=t-1): recompute its normalizer
                prev = decode_paths(hist[t - 1], sizes)
                b = run_dual_batch(model, prev, args.N, seed, chains, stream=t - 1)
                norms = [float(v) for v in np.exp(b.log_normalizer)]
            for c in range(args.chains):
                rows.append({"step": t, "path_linear_index": int(hist[t, c]), "mode": args.mode,
                             "normalizer": norms[c], "chain": c})
        fields = CHAIN_FIELDS if args.chains == 1 else CHAIN_FIELDS + ("chain",)
        path = out / "chain.csv"
        with open(path, "w", newline="") as fh:
            fh.write(csv_text(fields, rows))
        extra.update({"steps": args.steps, "chains": args.chains, "mode": args.mode, "start": z0.tolist(),
                      "path_space_size": path_space_sizes(sizes)[-1], "radix": radix.tolist()})
        print(f"wrote {args.chains} chain(s) x {args.steps} sweeps to {path}")
    _manifest(args, out, extra)
    return EXIT_OK


def _suites(text):
    names = []
    for s in str(text).split(","):
        s = s.strip()
        if not s:
            continue
        if s in SUITE_GROUPS:
            names += [x for x in SUITE_GROUPS[s] if x not in names]
        elif s in SUITE_PLAN:
            if s not in names:
                names.append(s)
        else:
            raise UsageError(f"unknown suite {s!r}")
    if not names:
        raise UsageError("no suite selected")
    return names


def cmd_verify(args):
    from .verify.corpus import corpus_model
    from .verify.experiments import DEFAULT_R, run_bound_experiment
    from .verify.report import write_reports
    from .verify.stats import INCONCLUSIVE, count_verdicts

    seed = _require_seed(args)
    suites = ["negative_control"] if args.corrupt else _suites(args.suite)
    R = DEFAULT_R if args.R is None else args.R
    if R < 2:
        raise UsageError("--R must be >= 2")
    out = _out_dir(args)
    params = {"R": R, "seed": seed}
    if args.N is not None:
        params["N"] = args.N
    if _int_list(args.N_values):
        params["N_values"] = _int_list(args.N_values)
    reports, hashes = [], {}
    for suite in suites:
        models, horizons = SUITE_PLAN[suite]
        if args.model or args.corpus:
            name, model = _load(args)
            targets = [(name, model)] if suite != "lemmas" else [(None, None)]
        elif suite == "lemmas":
            targets = [(None, None)]
        else:
            targets = [(m, corpus_model(m, h if args.horizon is None else args.horizon))
                       for m in models for h in (horizons if args.horizon is None else (args.horizon,))]
        for name, model in targets:
            label = name if model is None else f"{name}@n{model.horizon}"
            got = run_bound_experiment(suite, model, {**params, "name": name})
            if model is not None:
                hashes[label] = model.fingerprint()
            counts = count_verdicts(got)
            print(f"{suite:<17} {label or '-':<14} " + " ".join(f"{k}={v}" for k, v in counts.items() if v))
            reports += got
    doc = write_reports(out, "verify", reports, {"suites": suites, "seed": seed, "R": R})
    _manifest(args, out, {"model_hashes": hashes, "seed": seed, "suites": suites})
    counts = doc["counts"]
    if counts[INCONCLUSIVE]:
        print(f"warning: {counts[INCONCLUSIVE]} INCONCLUSIVE verdict(s)", file=sys.stderr)
    print("verdicts: " + " ".join(f"{k}={v}" for k, v in counts.items()))
    return EXIT_FAIL if counts["FAIL"] else EXIT_OK


def cmd_report(args):
    from .verify.report import read_bounds_csv, summary_from_rows, write_json

    if not args.input:
        raise UsageError("--input is required")
    src = Path(args.input)
    if src.is_dir():
        files = sorted(p for p in src.glob("*.csv") if p.name not in ("replicates.csv", "chain.csv"))
    elif src.is_file():
        files = [src]
    else:
        raise UsageError(f"input not found: {src}")
    rows = []
    for f in files:
        rows += read_bounds_csv(f)
    if not rows:
        raise UsageError(f"no bound reports found in {src}")
    doc = summary_from_rows(rows)
    by_id = {}
    for r in rows:
        c = by_id.setdefault(r["inequality_id"], {})
        c[r["verdict"]] = c.get(r["verdict"], 0) + 1
    doc["by_inequality"] = dict(sorted(by_id.items()))
    doc["files"] = [str(f) for f in files]
    out = _out_dir(args)
    write_json(out / "report_summary.json", doc)
    for iid, c in doc["by_inequality"].items():
        print(f"{iid:<20} " + " ".join(f"{k}={v}" for k, v in sorted(c.items())))
    print("total: " + " ".join(f"{k}={v}" for k, v in doc["counts"].items()))
    return EXIT_FAIL if doc["counts"].get("FAIL") else EXIT_OK


COMMANDS = {"oracle": cmd_oracle, "simulate": cmd_simulate, "verify": cmd_verify, "report": cmd_report}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:          # argparse uses 2 for usage errors already
        return int(exc.code or 0)
    try:
        args = _merge_config(args)
        configure_threads(args.threads)
        return COMMANDS[args.command](args)
    except (UsageError, ModelValidationError, ValueError) as exc:
        print(f"fk-lab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (CapacityError, OverflowError, MemoryError) as exc:
        print(f"fk-lab: capacity error: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    except FkLabError as exc:
        print(f"fk-lab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
