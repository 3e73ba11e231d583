"""JSON dumps of oracle quantities (used as golden files)."""

from __future__ import annotations

import json
from pathlib import Path

from .measures import assumption_constants, exact_measures
from .tensor import tensor_fk


def oracle_summary(model, tensor_orders=(), N_values=()):
    """Dictionary with gamma, eta, rho and alpha, plus optional tensor measures."""
    gammas, etas = exact_measures(model)
    report = assumption_constants(model)
    doc = {
        "model_hash": model.fingerprint(),
        "horizon": model.horizon,
        "gamma": [g.values.tolist() for g in gammas],
        "gamma_mass": [g.mass for g in gammas],
        "eta": [e.values.tolist() for e in etas],
        "rho_n": report.rho_n,
        "rho_by_horizon": list(report.rho_by_horizon),
        "alpha": list(report.alpha),
        "alpha_uniform": list(report.alpha_uniform),
        "beta1": report.beta1,
        "beta2": report.beta2,
    }
    tensors = []
    for q in tensor_orders:
        for N in N_values:
            if q >= N:
                continue
            t = tensor_fk(model, q, N)
            tensors.append({"q": q, "N": N, "eta_n": t.etas[-1].values.tolist()})
    if tensors:
        doc["tensor"] = tensors
    return doc


def write_oracle_dump(model, path, **kwargs):
    doc = oracle_summary(model, **kwargs)
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return doc
