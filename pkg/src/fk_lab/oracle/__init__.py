"""Exact finite-state computations of every deterministic quantity."""

from .combinatorics import (distinct_fraction, falling_factorial, overlap_fraction, set_partitions,
                            stirling2, vandermonde_ratio)
from .frozen import (INFINITE_N, FrozenMeasures, expansion_semigroup, frozen_fk_measures,
                     frozen_semigroup, frozen_terminal_table)
from .measures import (AssumptionReport, Measure, SemigroupMatrix, assumption_constants,
                       dobrushin_beta, exact_measures, semigroup, semigroup_ones)
from .tensor import (TensorMeasure, coalesce_function, coalesce_measure, coalescent_operator,
                     frozen_tensor_fk, product_function, tensor_fk, tensor_semigroup_ones)

__all__ = [
    "AssumptionReport", "FrozenMeasures", "INFINITE_N", "Measure", "SemigroupMatrix", "TensorMeasure",
    "assumption_constants", "coalesce_function", "coalesce_measure", "coalescent_operator",
    "distinct_fraction", "dobrushin_beta", "exact_measures", "expansion_semigroup", "falling_factorial",
    "frozen_fk_measures", "frozen_semigroup", "frozen_tensor_fk", "frozen_terminal_table",
    "overlap_fraction", "product_function", "semigroup", "semigroup_ones", "set_partitions", "stirling2",
    "tensor_fk", "tensor_semigroup_ones", "vandermonde_ratio",
]
