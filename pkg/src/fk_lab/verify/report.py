"""CSV and JSON serialisation of bound reports, replicate values and chains.

All CSV files use ``'.'`` decimals (``repr`` of Python floats, locale
independent), LF line endings and a header row, so that fixed-seed runs
produce byte-identical files.
"""

from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path

from .stats import FAIL, INCONCLUSIVE, count_verdicts

REPORT_FIELDS = ("inequality_id", "model", "n", "N", "q", "f_id", "z_id", "lower", "upper", "estimate", "stderr",
                 "verdict")
REPLICATE_FIELDS = ("replicate_id", "estimator_name", "value")
CHAIN_FIELDS = ("step", "path_linear_index", "mode", "normalizer")


def format_value(v):
    """Deterministic text form: shortest round-trip repr for floats, ``inf``/``-inf``/``nan`` spelled out."""
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, float):
        v = float(v)                # numpy float64 subclasses float but reprs differently
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return repr(v)
    if hasattr(v, "item"):          # numpy scalars
        return format_value(v.item())
    return str(v)


def csv_text(fields, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(fields)
    for row in rows:
        values = [row[f] for f in fields] if isinstance(row, dict) else list(row)
        w.writerow([format_value(v) for v in values])
    return buf.getvalue()


def write_csv(path, fields, rows):
    text = csv_text(fields, rows)
    with open(path, "w", newline="") as fh:
        fh.write(text)
    return text


def write_bounds_csv(path, reports):
    return write_csv(path, REPORT_FIELDS, [r.row() for r in reports])


def read_bounds_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def summary(reports, extra=None):
    """Counts per verdict plus the ids of failing and inconclusive checks."""
    counts = count_verdicts(reports)
    doc = {
        "total": len(reports),
        "counts": counts,
        "failed": sorted({r.inequality_id for r in reports if r.verdict == FAIL}),
        "inconclusive": sorted({r.inequality_id for r in reports if r.verdict == INCONCLUSIVE}),
    }
    if extra:
        doc.update(extra)
    return doc


def summary_from_rows(rows):
    counts = {}
    for r in rows:
        counts[r["verdict"]] = counts.get(r["verdict"], 0) + 1
    return {"total": len(rows), "counts": dict(sorted(counts.items())),
            "failed": sorted({r["inequality_id"] for r in rows if r["verdict"] == FAIL})}


def write_json(path, doc):
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True, default=_json_default) + "\n")


def _json_default(o):
    if hasattr(o, "item"):
        return o.item()
    if hasattr(o, "tolist"):
        return o.tolist()
    raise TypeError(f"not JSON serialisable: {type(o).__name__}")


def write_reports(out_dir, stem, reports, extra=None):
    """``<stem>.csv`` with one row per report and ``<stem>_summary.json``; returns the summary."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_bounds_csv(out / f"{stem}.csv", reports)
    doc = summary(reports, extra)
    write_json(out / f"{stem}_summary.json", doc)
    return doc
