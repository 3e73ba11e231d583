"""Counter-based random numbers keyed by draw coordinates.

Every uniform is a pure function of ``(master_seed, replicate, stream,
generation, particle, purpose)``: the key is folded through the SplitMix64
finaliser one component at a time and the top 53 bits of the result give a
double in ``[0, 1)``.  No generator state is carried around, so replicates,
chains and particles can be processed in any order or in parallel and the
draws never change.

``stream`` separates independent uses of the same replicate id (e.g. the
sweep index of a particle Gibbs chain).  Purposes are the constants below.
"""

from __future__ import annotations

import numba
import numpy as np

INIT = 0        # initial particle draw
SELECT = 1      # ancestor (selection) draw
MUTATE = 2      # kernel (mutation) draw
LINE = 3        # uniform choice of an ancestral line
BACKWARD = 4    # backward-kernel draws
SLOT = 5        # frozen-slot index of the dual system
START = 6       # exact draws of chain starting points

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_INV53 = 1.0 / 9007199254740992.0

# Key components must fit these bounds so that distinct draws get distinct keys.
MAX_PARTICLES = 2**40
MAX_GENERATIONS = 2**24


@numba.njit(inline="always")
def _mix(x):
    x = x ^ (x >> _S30)
    x = x * _M1
    x = x ^ (x >> _S27)
    x = x * _M2
    return x ^ (x >> _S31)


@numba.njit(inline="always")
def _fold(h, v):
    return _mix(h ^ (np.uint64(v) + _GOLDEN))


@numba.njit(inline="always")
def uniform(seed, rep, stream, gen, particle, purpose):
    """One uniform in [0, 1) for the given key (scalar, compiled)."""
    h = _mix(np.uint64(seed) + _GOLDEN)
    h = _fold(h, rep)
    h = _fold(h, stream)
    h = _fold(h, gen)
    h = _fold(h, particle)
    h = _fold(h, purpose)
    return float(h >> _S11) * _INV53


def _mix_np(x):
    x = x ^ (x >> _S30)
    x = x * _M1
    x = x ^ (x >> _S27)
    x = x * _M2
    return x ^ (x >> _S31)


def uniform_np(seed, rep, stream, gen, particle, purpose):
    """Vectorised uniforms with exactly the same values as :func:`uniform`.

    Arguments broadcast against each other; all must be non-negative integers.
    """
    parts = np.broadcast_arrays(*(np.asarray(a, dtype=np.uint64)
                                  for a in (seed, rep, stream, gen, particle, purpose)))
    with np.errstate(over="ignore"):
        h = _mix_np(parts[0] + _GOLDEN)
        for v in parts[1:]:
            h = _mix_np(h ^ (v + _GOLDEN))
    return (h >> _S11).astype(np.float64) * _INV53


def check_seed(seed):
    """Validate a master seed (non-negative integer below 2**63)."""
    if isinstance(seed, bool) or not isinstance(seed, (int, np.integer)):
        raise TypeError(f"master seed must be an integer, got {type(seed).__name__}")
    if not 0 <= int(seed) < 2**63:
        raise ValueError(f"master seed must lie in [0, 2**63), got {seed}")
    return int(seed)


def check_key_capacity(N, n, replicates=0):
    """Raise if a run would exceed the key space of the generator."""
    if N >= MAX_PARTICLES or n + 1 >= MAX_GENERATIONS or replicates >= 2**62:
        raise OverflowError(
            f"random stream exhausted: N={N}, n={n}, replicates={replicates} exceed key bounds")
