import itertools
from math import comb

import pytest
from hypothesis import given, strategies as st

from polyformer.combinatorics import (
    canonical_tuple,
    compositions,
    count_compositions,
    enumerate_multi_indices,
    enumerate_rank_tuples,
    falling_factorial,
    is_canonical_tuple,
    symmetry_coefficient,
    tuple_degree,
)


def brute_compositions(n, k):
    return sum(1 for v in itertools.product(range(k + 1), repeat=n) if sum(v) == k)


class TestCounts:
    def test_frozen(self):
        assert count_compositions(3, 2) == 6
        assert count_compositions(2, 3) == 4
        assert all(count_compositions(1, k) == 1 for k in range(8))

    @pytest.mark.parametrize("n", range(1, 6))
    def test_brute_force(self, n):
        for k in range(7):
            assert count_compositions(n, k) == brute_compositions(n, k)

    def test_binomial_row_sum(self):
        for n in range(21):
            assert sum(comb(n, k) for k in range(n + 1)) == 2 ** n

    def test_falling_factorial(self):
        assert falling_factorial(3, 2) == 6
        assert all(falling_factorial(n, 0) == 1 for n in range(6))
        assert falling_factorial(2, 3) == 0
        # arbitrary precision: no wrap-around
        assert falling_factorial(40, 30) == 40 * falling_factorial(39, 29)

    def test_errors(self):
        with pytest.raises(ValueError):
            count_compositions(0, 2)
        with pytest.raises(ValueError):
            falling_factorial(-1, 0)


class TestMultiIndices:
    def test_one_row(self):
        assert enumerate_multi_indices(1, 3) == [(1,), (2,), (3,)]

    def test_two_rows(self):
        assert enumerate_multi_indices(2, 2) == [(1, 0), (0, 1), (2, 0), (1, 1), (0, 2)]

    @pytest.mark.parametrize("d,s", list(itertools.product(range(1, 5), range(1, 5))))
    def test_count_and_order(self, d, s):
        out = enumerate_multi_indices(d, s)
        assert len(out) == len(set(out)) == sum(comb(j + d - 1, d - 1) for j in range(1, s + 1))
        assert len(out) <= s * d ** s
        keys = [(sum(p), tuple(-e for e in p)) for p in out]
        assert keys == sorted(keys)

    def test_compositions_descending(self):
        assert compositions(3, 1) == [(1, 0, 0), (0, 1, 0), (0, 0, 1)]


class TestRankTuples:
    def test_hand_enumeration(self):
        assert enumerate_rank_tuples(1, 2) == [((1,),), ((2,),), ((1,), (1,))]

    @pytest.mark.parametrize("d,s", [(1, 4), (2, 2), (2, 3), (3, 2), (2, 4)])
    def test_invariants(self, d, s):
        out = enumerate_rank_tuples(d, s)
        assert len(out) == len(set(out))
        assert all(is_canonical_tuple(t) and tuple_degree(t) <= s for t in out)
        ranks = [len(t) for t in out]
        assert ranks == sorted(ranks)
        for r in range(1, s + 1):
            assert ranks.count(r) <= d ** s * comb(s, r)

    def test_complete(self):
        d, s = 2, 3
        graded = enumerate_multi_indices(d, s)
        brute = {canonical_tuple(c) for r in range(1, s + 1)
                 for c in itertools.product(graded, repeat=r) if tuple_degree(c) <= s}
        assert set(enumerate_rank_tuples(d, s)) == brute

    def test_frozen_count_d2_s3(self):
        # 9 rank-1, 9 rank-2 (3 of degree 2, 6 of degree 3), 4 rank-3
        assert len(enumerate_rank_tuples(2, 3)) == 22


class TestSymmetryCoefficient:
    def test_repeated_parts(self):
        assert symmetry_coefficient(((2,), (2,), (1,), (1,), (1,)), 5) == 12

    def test_distinct(self):
        assert symmetry_coefficient(((2, 0), (1, 1), (0, 1)), 3) == 1

    def test_padded_pair(self):
        assert symmetry_coefficient(((1, 0), (1, 0), (0, 0)), 3) == 2
        assert symmetry_coefficient(((1, 0), (1, 0), (0, 0)), 3, include_zero_part=True) == 2

    def test_zero_part_counting_differs_when_padding_repeats(self):
        t = ((1,),)
        assert symmetry_coefficient(t, 4) == 1
        assert symmetry_coefficient(t, 4, include_zero_part=True) == 6

    def test_too_many_parts(self):
        with pytest.raises(ValueError):
            symmetry_coefficient(((1,), (1,), (1,)), 2)


@given(st.lists(st.tuples(st.integers(0, 3), st.integers(0, 3)), min_size=1, max_size=4))
def test_canonical_tuple_idempotent(parts):
    t = canonical_tuple(parts)
    assert canonical_tuple(t) == t
    assert sorted(t) == sorted(tuple(p) for p in parts)
