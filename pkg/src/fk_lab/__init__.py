"""Feynman-Kac particle algorithms with an exact finite-state oracle.

Subpackages: :mod:`fk_lab.oracle` (exact linear algebra), :mod:`fk_lab.verify`
(replicated experiments and bound checks).  Modules :mod:`fk_lab.model`,
:mod:`fk_lab.smc` and :mod:`fk_lab.dual` hold the models and the samplers.
"""

from .errors import CapacityError, FkLabError, ModelValidationError, UnreachableTransitionError
from .model import FiniteFkModel, PathIndex, lift_to_path, load_model, normalize_potentials

__version__ = "0.1.0"

__all__ = [
    "CapacityError", "FiniteFkModel", "FkLabError", "ModelValidationError", "PathIndex",
    "UnreachableTransitionError", "lift_to_path", "load_model", "normalize_potentials",
]
