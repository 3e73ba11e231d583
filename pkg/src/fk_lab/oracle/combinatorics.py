"""Exact integer combinatorics: falling factorials, Stirling numbers, set partitions.

All functions return Python integers (arbitrary precision), so there is no
64-bit overflow threshold; callers that need floats convert explicitly.
"""

from __future__ import annotations

from fractions import Fraction
from functools import lru_cache
from math import comb


def falling_factorial(m, p):
    """``(m)_p = m (m-1) ... (m-p+1)``; ``(m)_0 = 1`` and ``(m)_p = 0`` for p > m >= 0."""
    if p < 0:
        raise ValueError(f"p must be >= 0, got {p}")
    out = 1
    for i in range(p):
        out *= m - i
    return out


@lru_cache(maxsize=None)
def stirling2(q, k):
    """Stirling number of the second kind: partitions of a q-set into k non-empty blocks."""
    if q < 0 or k < 0:
        raise ValueError("arguments must be non-negative")
    if q == k:
        return 1
    if k == 0 or k > q:
        return 0
    return k * stirling2(q - 1, k) + stirling2(q - 1, k - 1)


def set_partitions(q):
    """All set partitions of ``{0..q-1}`` as tuples of tuples (blocks ordered by minimum)."""
    def rec(i, blocks):
        if i == q:
            yield tuple(tuple(b) for b in blocks)
            return
        for b in blocks:
            b.append(i)
            yield from rec(i + 1, blocks)
            b.pop()
        blocks.append([i])
        yield from rec(i + 1, blocks)
        blocks.pop()
    return list(rec(0, []))


def vandermonde_ratio(N, q):
    """``(1/(N)_q) sum_k C(q,k) (q)_k (N-q)_{q-k}`` as an exact fraction (equals 1)."""
    total = sum(comb(q, k) * falling_factorial(q, k) * falling_factorial(N - q, q - k) for k in range(q + 1))
    return Fraction(total, falling_factorial(N, q))


def distinct_fraction(N, q):
    """``(N)_q / N^q`` exactly: probability that q uniform draws from N are distinct."""
    return Fraction(falling_factorial(N, q), N**q)


def overlap_fraction(N, q):
    """``[(N)_q - (N-q)_q] / (N)_q`` exactly: share of tuple pairs that intersect."""
    fq = falling_factorial(N, q)
    return Fraction(fq - falling_factorial(N - q, q), fq)
