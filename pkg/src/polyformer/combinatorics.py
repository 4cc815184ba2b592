"""Multi-indices, rank tuples and the counting functions around them.

A multi-index is a tuple of ``d`` nonnegative ints (the exponents of one
column's monomial). A rank tuple is a tuple of ``r`` nonzero multi-indices
in non-increasing lexicographic order; it names one monomial
column-symmetric polynomial.

The orders produced here are the canonical basis order used everywhere
else in the package (row allocation, decomposition output, manifests).
"""
from __future__ import annotations

import itertools
from collections import Counter
from math import comb, factorial, perm
from typing import Tuple

MultiIndex = Tuple[int, ...]
RankTuple = Tuple[MultiIndex, ...]


def degree(p: MultiIndex) -> int:
    return sum(p)


def tuple_degree(t: RankTuple) -> int:
    return sum(sum(p) for p in t)


def count_compositions(n: int, k: int) -> int:
    """Number of ``(p_1..p_n)`` in N^n with ``sum p_i == k``."""
    if n < 1 or k < 0:
        raise ValueError(f"need n >= 1 and k >= 0, got n={n}, k={k}")
    return comb(k + n - 1, n - 1)


def falling_factorial(n: int, r: int) -> int:
    """``n! / (n - r)!``, and 0 when ``r > n``."""
    if n < 0 or r < 0:
        raise ValueError(f"need nonnegative arguments, got n={n}, r={r}")
    return perm(n, r) if r <= n else 0


def compositions(d: int, j: int) -> list[MultiIndex]:
    """All multi-indices of length ``d`` and degree ``j``, lexicographically descending."""
    if j == 0:
        return [(0,) * d]
    if d == 1:
        return [(j,)]
    out = []
    for first in range(j, -1, -1):
        out.extend((first,) + rest for rest in compositions(d - 1, j - first))
    return out


def enumerate_multi_indices(d: int, s: int) -> list[MultiIndex]:
    """Every ``p`` with ``1 <= |p| <= s``: by degree, then lexicographically descending."""
    if d < 1 or s < 0:
        raise ValueError(f"need d >= 1 and s >= 0, got d={d}, s={s}")
    out: list[MultiIndex] = []
    for j in range(1, s + 1):
        out.extend(compositions(d, j))
    return out


def is_canonical_tuple(t: RankTuple) -> bool:
    return all(any(p) for p in t) and all(t[i] >= t[i + 1] for i in range(len(t) - 1))


def canonical_tuple(parts) -> RankTuple:
    """Sort parts into non-increasing lexicographic order."""
    return tuple(sorted((tuple(p) for p in parts), reverse=True))


def enumerate_rank_tuples(d: int, s: int) -> list[RankTuple]:
    """Every canonical rank tuple with total degree at most ``s``.

    Ordered by rank, then total degree, then the positions of the parts in
    :func:`enumerate_multi_indices`.
    """
    graded = enumerate_multi_indices(d, s)
    pos = {p: i for i, p in enumerate(graded)}
    lex_desc = sorted(graded, reverse=True)
    out: list[RankTuple] = []
    for r in range(1, s + 1):
        rank = [
            t for t in itertools.combinations_with_replacement(lex_desc, r)
            if tuple_degree(t) <= s
        ]
        rank.sort(key=lambda t: (tuple_degree(t), tuple(pos[p] for p in t)))
        out.extend(rank)
    return out


def symmetry_coefficient(t: RankTuple, n: int, include_zero_part: bool = False) -> int:
    """Coefficient of the leading term ``x_1^{p_1} ... x_r^{p_r}`` in ``m_t``.

    ``m_t`` sums over ordered choices of distinct columns, so a term is hit
    once per rearrangement of equal parts: the product of the factorials of
    the multiplicities of the distinct nonzero parts. With
    ``include_zero_part`` the ``n - r`` zero columns are counted as one more
    repeated part, giving the coefficient in the sum over all of ``S_n``.
    """
    if len(t) > n:
        raise ValueError(f"a tuple of {len(t)} parts does not fit in {n} columns")
    nonzero = [tuple(p) for p in t if any(p)]
    r = len(nonzero)
    coef = 1
    for mult in Counter(nonzero).values():
        coef *= factorial(mult)
    if include_zero_part:
        coef *= factorial(n - r)
    return coef
