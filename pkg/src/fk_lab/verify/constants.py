"""Bound constants and their precondition thresholds, as functions of rho.

Each function returns plain floats.  Where the theoretical statement only
asserts existence of a constant, the value here is the one produced by the
corresponding proof and the docstring says so.
"""

from __future__ import annotations

import math


def _c2_of(c1):
    return 2.0 * c1 * (2.0 * c1 * (c1 + 1.0) + 1.0)


# -- forward particle system -------------------------------------------------

def bias_constants(rho):
    """``(c1, c2)`` of the first-order bias sandwich: ``c1 = rho^2 - 1``."""
    c1 = rho**2 - 1.0
    return c1, _c2_of(c1)


def bias_threshold(rho, n):
    """Smallest admissible N for the bias sandwich: ``N >= c2(rho) n``."""
    return bias_constants(rho)[1] * n


def ratio_mean_constants(b_over_a):
    """``(c1, c2)`` of the ratio-of-empirical-means estimate, ``c1 = b/a - 1``."""
    c1 = b_over_a - 1.0
    return c1, _c2_of(c1)


def tensor_ratio_constants(c, q):
    """``(c1(q), c2(q)) = (2 q^2 c, 2 c1(q) (1 + 2c(c+1)))`` with ``c = b/a - 1``."""
    c1 = 2.0 * q * q * c
    return c1, 2.0 * c1 * (1.0 + 2.0 * c * (c + 1.0))


def tensor_ratio_threshold(c, q):
    """N must exceed ``max(4 c q^2, 2 q^2, 2 q)`` for the tensor ratio estimates."""
    return max(4.0 * c * q * q, 2.0 * q * q, 2.0 * q)


def chaos_constant(q, rho, ratio_c):
    """Constant ``a`` of the q-particle chaos sandwich around ``eta_n(f)^q``.

    Derived by iterating the tensor ratio estimates n times (factor
    ``e c2(q)``, with ``c`` the exact spread of ``Q^{(q)}_{p,n}(1)`` minus one)
    and combining with the coalescence bounds ``q^2 n/N`` and
    ``e q^2 rho^{q+1} n/N``: ``a = e c2(q) + 4 q^2 (1 + e rho^{q+1})``.
    """
    _, c2 = tensor_ratio_constants(ratio_c, q)
    return math.e * c2 + 4.0 * q * q * (1.0 + math.e * rho ** (q + 1))


def chaos_tensor_constant(q, ratio_c):
    """Constant of the sandwich around ``eta^{(q)}_n``: ``e c2(q)`` (iterated ratio estimates)."""
    return math.e * tensor_ratio_constants(ratio_c, q)[1]


def chaos_threshold(q, rho, ratio_c, n):
    """Largest of the N-conditions used when deriving :func:`chaos_constant`."""
    _, c2 = tensor_ratio_constants(ratio_c, q)
    return max(tensor_ratio_threshold(ratio_c, q), math.e * c2 * n, math.e * q * q * n * rho,
               2.0 * q * q * n, chaos_constant(q, rho, ratio_c) * n)


# -- frozen-path semigroups --------------------------------------------------

def frozen_step_bounds(q, rho, N):
    """Multiplicative lower factor and additive upper slack for ``q`` frozen steps (N >= 3 q rho)."""
    return 1.0 - q / N, 2.0 * q * rho**2 / N


def frozen_step_threshold(q, rho):
    return 3.0 * q * rho


def frozen_ones_bounds(rho, n, N):
    """``(1 - n/N)/rho <= Qz_{p,n}(1) <= (1 + 2 n rho/N) rho`` and the outer ``2/(3 rho), 5 rho/3``."""
    return (1.0 - n / N) / rho, (1.0 + 2.0 * n * rho / N) * rho, 2.0 / (3.0 * rho), 5.0 * rho / 3.0


def frozen_initial_threshold(rho, n):
    return (1.0 + 2.0 * rho**2) * (n + 1)


def frozen_measure_threshold(rho, n):
    """``N >= 2 (1 + 2 rho^2) n`` for the frozen-measure sandwiches."""
    return 2.0 * (1.0 + 2.0 * rho**2) * n


def oscillation_constant(rho):
    """``osc(F_n f) <= 6 (1 + 2 rho^2) n/N`` for ``osc(f) <= 1``.

    Follows from the frozen normalised-measure sandwich: the lower and upper
    deviations ``2(1+2rho^2) eta(f) n/N`` and ``4(1+2rho^2) n/N`` add up to at
    most ``6(1+2rho^2) n/N`` for [0,1]-valued f.
    """
    return 6.0 * (1.0 + 2.0 * rho**2)


# -- particle Gibbs kernels (proof-derived constants) ------------------------

def pg_forward_constants(rho):
    """``(c1, c2)`` with ``c1 = (5/2) rho^2 - 1`` for the ancestral kernel vs ``z -> eta_{z,n}``.

    The proof bounds the kernel by ``(1 - c1/N)^n F_n`` below and
    ``(1 + c2/N)^n F_n`` above.
    """
    c1 = 2.5 * rho**2 - 1.0
    return c1, _c2_of(c1)


def pg_forward_factors(rho, n, N):
    c1, c2 = pg_forward_constants(rho)
    return (1.0 - c1 / N) ** n, (1.0 + c2 / N) ** n


def pg_backward_constant(rho):
    """``c = (5/2) rho^2 + 1``: backward kernel ``>= (1 - c n/N) eta_n / gamma_{z,n}(1)`` (n >= 1)."""
    return 2.5 * rho**2 + 1.0


def pg_minorization_constant(rho):
    """Constant of the joint minorisation of both kernels by ``(1 - c n/N) eta_n``."""
    c1, _ = pg_forward_constants(rho)
    return max(c1 + 2.0 * (1.0 + 2.0 * rho**2), 2.5 * rho**2 + 3.0)


def pg_threshold(rho, n):
    """N-condition used with the particle Gibbs constants: ``N >= c n`` with the minorisation c."""
    return pg_minorization_constant(rho) * n


def crude_minorization(epsilon, n, N):
    """``(epsilon (1 - 1/N))^n`` for potentials with ``epsilon <= G <= 1`` (N >= 2)."""
    return (epsilon * (1.0 - 1.0 / N)) ** n


def contraction_rate_bound(minorization):
    """Geometric rate implied by a minorisation constant ``eps``: ``1 - eps``."""
    return 1.0 - minorization
