"""Finite-state Feynman-Kac models and their path-space (historical) lift.

A model is the tuple ``(eta_0, (M_k)_{1<=k<=n}, (G_k)_{0<=k<=n})`` on finite
state spaces ``S_0, ..., S_n`` of sizes ``d_0, ..., d_n``.  States are plain
integer indices.  Paths ``(x_0, ..., x_k)`` are linearised in mixed radix with
``x_0`` the most significant digit, which coincides with C-order flattening of
an array of shape ``(d_0, ..., d_k)``.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from .errors import CapacityError, ModelValidationError

STOCHASTIC_TOL = 1e-12
DEFAULT_CAPACITY = 10**7


def _frozen_array(a, dtype=float):
    arr = np.array(a, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


def _frozen_kernel(k):
    if sp.issparse(k):
        k = sp.csr_array(k, dtype=float)
        k.data.setflags(write=False)
        return k
    return _frozen_array(k)


@dataclass(frozen=True, eq=False)
class FiniteFkModel:
    """Feynman-Kac parameters on finite state spaces.

    ``kernels[k-1]`` is the ``d_{k-1} x d_k`` Markov matrix ``M_k`` (dense, or
    scipy sparse for path-space lifts); ``potentials[k]`` is ``G_k``.
    """

    horizon: int
    space_sizes: tuple
    kernels: tuple
    potentials: tuple
    initial: np.ndarray
    # Set on path-space lifts: the marginal model this one was lifted from.
    marginal: "FiniteFkModel | None" = field(default=None, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "space_sizes", tuple(int(d) for d in self.space_sizes))
        object.__setattr__(self, "kernels", tuple(_frozen_kernel(k) for k in self.kernels))
        object.__setattr__(self, "potentials", tuple(_frozen_array(g) for g in self.potentials))
        object.__setattr__(self, "initial", _frozen_array(self.initial))
        validate(self)

    @property
    def is_path_model(self):
        return self.marginal is not None

    def kernel_dense(self, k):
        """``M_k`` as a dense array (``1 <= k <= horizon``)."""
        m = self.kernels[k - 1]
        return m.toarray() if sp.issparse(m) else np.asarray(m)

    def truncate(self, horizon):
        """The same model restricted to levels ``0..horizon``."""
        if not 0 <= horizon <= self.horizon:
            raise ValueError(f"horizon {horizon} outside [0, {self.horizon}]")
        marginal = self.marginal.truncate(horizon) if self.marginal is not None else None
        return FiniteFkModel(
            horizon=horizon,
            space_sizes=self.space_sizes[: horizon + 1],
            kernels=self.kernels[:horizon],
            potentials=self.potentials[: horizon + 1],
            initial=self.initial,
            marginal=marginal,
        )

    def with_potentials(self, potentials):
        marginal = self.marginal
        return FiniteFkModel(self.horizon, self.space_sizes, self.kernels, tuple(potentials),
                             self.initial, marginal=marginal)

    def to_dict(self):
        if self.is_path_model:
            raise ValueError("path-space lifts are not serialised; store the marginal model")
        return {
            "horizon": self.horizon,
            "space_sizes": list(self.space_sizes),
            "kernels": [self.kernel_dense(k).tolist() for k in range(1, self.horizon + 1)],
            "potentials": [g.tolist() for g in self.potentials],
            "initial": self.initial.tolist(),
        }

    def fingerprint(self):
        """Short SHA-256 of the canonical JSON form; used in reports and manifests."""
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


def validate(model):
    """Check every model invariant; raise :class:`ModelValidationError` on the first failure."""
    n = model.horizon
    if not isinstance(n, (int, np.integer)) or n < 0:
        raise ModelValidationError("horizon", f"must be a non-negative integer, got {n!r}")
    sizes = model.space_sizes
    if len(sizes) != n + 1:
        raise ModelValidationError("space_sizes", f"expected {n + 1} entries, got {len(sizes)}")
    for k, d in enumerate(sizes):
        if d < 1:
            raise ModelValidationError(f"space_sizes[{k}]", f"must be positive, got {d}")
    if len(model.kernels) != n:
        raise ModelValidationError("kernels", f"expected {n} matrices, got {len(model.kernels)}")
    if len(model.potentials) != n + 1:
        raise ModelValidationError("potentials", f"expected {n + 1} vectors, got {len(model.potentials)}")

    eta0 = model.initial
    if eta0.shape != (sizes[0],):
        raise ModelValidationError("initial", f"shape {eta0.shape} does not match d_0={sizes[0]}")
    _check_probability(eta0, "initial")

    for k, m in enumerate(model.kernels, start=1):
        where = f"kernels[{k - 1}]"
        if m.shape != (sizes[k - 1], sizes[k]):
            raise ModelValidationError(where, f"shape {m.shape} != ({sizes[k - 1]}, {sizes[k]})")
        if sp.issparse(m):
            data = m.data
            if not np.all(np.isfinite(data)) or np.any(data < 0):
                raise ModelValidationError(where, "entries must be finite and non-negative")
            rows = np.asarray(m.sum(axis=1)).ravel()
        else:
            bad = np.argwhere(~np.isfinite(m) | (m < 0))
            if bad.size:
                i, j = bad[0]
                raise ModelValidationError(f"{where}[{i}][{j}]", f"invalid entry {m[i, j]!r}")
            rows = m.sum(axis=1)
        off = np.flatnonzero(np.abs(rows - 1.0) > STOCHASTIC_TOL)
        if off.size:
            i = off[0]
            raise ModelValidationError(f"{where}[{i}]", f"row sums to {rows[i]!r}, expected 1")

    for k, g in enumerate(model.potentials):
        where = f"potentials[{k}]"
        if g.shape != (sizes[k],):
            raise ModelValidationError(where, f"shape {g.shape} does not match d_{k}={sizes[k]}")
        bad = np.flatnonzero(~np.isfinite(g) | (g <= 0))
        if bad.size:
            i = bad[0]
            raise ModelValidationError(f"{where}[{i}]", f"potential must be finite and > 0, got {g[i]!r}")


def _check_probability(v, where):
    bad = np.flatnonzero(~np.isfinite(v) | (v < 0))
    if bad.size:
        i = bad[0]
        raise ModelValidationError(f"{where}[{i}]", f"invalid probability {v[i]!r}")
    if abs(v.sum() - 1.0) > STOCHASTIC_TOL:
        raise ModelValidationError(where, f"sums to {v.sum()!r}, expected 1")


# ---------------------------------------------------------------------------
# Paths
# ---------------------------------------------------------------------------

def path_space_sizes(space_sizes):
    """Cumulative products ``prod_{j<=k} d_j`` for k = 0..n (Python ints)."""
    out, acc = [], 1
    for d in space_sizes:
        acc *= int(d)
        out.append(acc)
    return out


def encode_path(coords, sizes):
    """Mixed-radix index of ``coords`` with ``coords[0]`` most significant."""
    if len(coords) > len(sizes):
        raise ValueError("path longer than the available levels")
    linear = 0
    for k, x in enumerate(coords):
        x = int(x)
        if not 0 <= x < sizes[k]:
            raise IndexError(f"coordinate {k}: state {x} outside [0, {sizes[k]})")
        linear = linear * int(sizes[k]) + x
    return linear


def decode_path(linear, sizes):
    """Inverse of :func:`encode_path` for a path through levels ``0..len(sizes)-1``."""
    total = math.prod(int(d) for d in sizes)
    linear = int(linear)
    if not 0 <= linear < total:
        raise IndexError(f"linear index {linear} outside [0, {total})")
    coords = []
    for d in reversed(sizes):
        linear, x = divmod(linear, int(d))
        coords.append(x)
    return tuple(reversed(coords))


def encode_paths(coords, sizes):
    """Vectorised :func:`encode_path`; ``coords`` has the level on its last axis."""
    coords = np.asarray(coords, dtype=np.int64)
    linear = np.zeros(coords.shape[:-1], dtype=np.int64)
    for k in range(coords.shape[-1]):
        linear = linear * int(sizes[k]) + coords[..., k]
    return linear


def decode_paths(linear, sizes):
    linear = np.asarray(linear, dtype=np.int64)
    out = np.empty(linear.shape + (len(sizes),), dtype=np.int64)
    for k in range(len(sizes) - 1, -1, -1):
        linear, out[..., k] = np.divmod(linear, int(sizes[k]))
    return out


@dataclass(frozen=True)
class PathIndex:
    """A point ``(x_0, ..., x_k)`` of the path space ``S_0 x ... x S_k``."""

    coords: tuple
    sizes: tuple

    def __post_init__(self):
        object.__setattr__(self, "coords", tuple(int(x) for x in self.coords))
        object.__setattr__(self, "sizes", tuple(int(d) for d in self.sizes[: len(self.coords)]))
        encode_path(self.coords, self.sizes)

    @classmethod
    def from_linear(cls, linear, sizes):
        return cls(decode_path(linear, sizes), sizes)

    @property
    def level(self):
        return len(self.coords) - 1

    @property
    def linear(self):
        return encode_path(self.coords, self.sizes)

    @property
    def terminal(self):
        return self.coords[-1]

    def prefix(self, k):
        return PathIndex(self.coords[: k + 1], self.sizes)

    def prefix_indices(self):
        """Linear index of every prefix ``(x_0..x_k)``, k = 0..level."""
        out, acc = [], 0
        for d, x in zip(self.sizes, self.coords):
            acc = acc * d + x
            out.append(acc)
        return out


def as_path(path, model):
    if isinstance(path, PathIndex):
        return path
    return PathIndex(tuple(path), model.space_sizes)


# ---------------------------------------------------------------------------
# Model transformations
# ---------------------------------------------------------------------------

def lift_to_path(model, capacity=DEFAULT_CAPACITY):
    """Historical version of ``model``: the state at time k is the path ``(x_0..x_k)``.

    Lifted kernels are sparse: a path is extended by one ``M_k`` step and its
    first k coordinates are kept.  Lifted potentials read the terminal state.
    """
    if model.is_path_model:
        raise ValueError("model is already a path-space lift")
    sizes = path_space_sizes(model.space_sizes)
    if sizes[-1] > capacity:
        raise CapacityError(f"path space at level {model.horizon} has {sizes[-1]} states (cap {capacity})")
    kernels = []
    for k in range(1, model.horizon + 1):
        m = model.kernel_dense(k)
        d_prev, d_k = m.shape
        rows_in = sizes[k - 1]
        # Path r lives in level k-1; its terminal state is r % d_prev.
        block = m[np.arange(rows_in) % d_prev]
        cols = np.arange(rows_in)[:, None] * d_k + np.arange(d_k)[None, :]
        lifted = sp.csr_array(
            (block.ravel(), cols.ravel(), np.arange(0, rows_in * d_k + 1, d_k)),
            shape=(rows_in, sizes[k]),
        )
        lifted.eliminate_zeros()
        kernels.append(lifted)
    potentials = [np.tile(g, sizes[k] // model.space_sizes[k]) for k, g in enumerate(model.potentials)]
    return FiniteFkModel(model.horizon, sizes, tuple(kernels), tuple(potentials), model.initial,
                         marginal=model)


def normalize_potentials(model, exact_etas):
    """Rescale ``G_k`` by ``eta_k(G_k)`` so that every ``eta_k(G_k) = 1``.

    The normalised laws ``eta_k`` and semigroups are unchanged; only the
    unnormalised measures are affected.
    """
    if len(exact_etas) != model.horizon + 1:
        raise ValueError(f"expected {model.horizon + 1} marginals, got {len(exact_etas)}")
    new = []
    for k, (g, eta) in enumerate(zip(model.potentials, exact_etas)):
        eta = np.asarray(getattr(eta, "values", eta), dtype=float)
        if eta.shape != g.shape:
            raise ValueError(f"eta_{k} has shape {eta.shape}, potential has {g.shape}")
        new.append(g / float(eta @ g))
    marginal = model.marginal
    if marginal is not None:
        # keep the marginal in sync: a lifted potential only reads the terminal coordinate
        scales = [float(np.asarray(getattr(e, "values", e)) @ g) for e, g in zip(exact_etas, model.potentials)]
        marginal = marginal.with_potentials([g / s for g, s in zip(marginal.potentials, scales)])
    return FiniteFkModel(model.horizon, model.space_sizes, model.kernels, tuple(new), model.initial,
                         marginal=marginal)


def eval_product_weight(model, path, upto):
    """``prod_{p < upto} G_p(x_p)`` along a marginal path (empty product is 1)."""
    coords = as_path(path, model).coords
    if len(coords) < upto:
        raise ValueError(f"path of level {len(coords) - 1} too short for upto={upto}")
    w = 1.0
    for p in range(upto):
        w *= float(model.potentials[p][coords[p]])
    return w


def log_product_weight(model, path, upto):
    """Log-domain recomputation of :func:`eval_product_weight` (input cross-check)."""
    coords = as_path(path, model).coords
    return math.fsum(math.log(model.potentials[p][coords[p]]) for p in range(upto))


# ---------------------------------------------------------------------------
# JSON model files
# ---------------------------------------------------------------------------

def model_from_dict(doc):
    """Build a model from the JSON document layout, validating every field."""
    if not isinstance(doc, dict):
        raise ModelValidationError("$", "model document must be a JSON object")
    for key in ("horizon", "space_sizes", "kernels", "potentials", "initial"):
        if key not in doc:
            raise ModelValidationError(key, "missing field")
    kernels = []
    for k, m in enumerate(doc["kernels"]):
        try:
            kernels.append(np.array(m, dtype=float).reshape(len(m), -1))
        except (TypeError, ValueError) as exc:
            raise ModelValidationError(f"kernels[{k}]", f"not a rectangular matrix ({exc})") from None
    try:
        potentials = [np.array(g, dtype=float) for g in doc["potentials"]]
        initial = np.array(doc["initial"], dtype=float)
    except (TypeError, ValueError) as exc:
        raise ModelValidationError("potentials", f"not numeric ({exc})") from None
    return FiniteFkModel(int(doc["horizon"]), tuple(doc["space_sizes"]), tuple(kernels),
                         tuple(potentials), initial)


def load_model(path):
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ModelValidationError("$", f"invalid JSON ({exc})") from None
    return model_from_dict(doc)


def save_model(model, path):
    Path(path).write_text(json.dumps(model.to_dict(), indent=2) + "\n")


def homogeneous_model(n, kernel, potential, initial):
    """Time-homogeneous model with the same kernel and potential at every step."""
    kernel = np.asarray(kernel, dtype=float)
    d = kernel.shape[0]
    return FiniteFkModel(n, (d,) * (n + 1), (kernel,) * n, (np.asarray(potential, dtype=float),) * (n + 1),
                         np.asarray(initial, dtype=float))


def frozen_state_indices(model, path: Sequence[int] | PathIndex):
    """Per-level frozen states ``z_k`` in ``model``'s own state spaces.

    For a marginal model these are the path coordinates; for a path-space lift
    they are the linear indices of the prefixes ``(z_0..z_k)``.
    """
    if model.is_path_model:
        p = path if isinstance(path, PathIndex) else PathIndex(tuple(path), model.marginal.space_sizes)
        if p.level < model.horizon:
            raise ValueError(f"frozen path has level {p.level} < horizon {model.horizon}")
        return np.array(p.prefix_indices()[: model.horizon + 1], dtype=np.int64)
    coords = path.coords if isinstance(path, PathIndex) else tuple(path)
    if len(coords) < model.horizon + 1:
        raise ValueError(f"frozen path has {len(coords)} coordinates, need {model.horizon + 1}")
    z = np.array(coords[: model.horizon + 1], dtype=np.int64)
    for k, x in enumerate(z):
        if not 0 <= x < model.space_sizes[k]:
            raise IndexError(f"frozen state z_{k}={x} outside [0, {model.space_sizes[k]})")
    return z
