import itertools
import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hutchkit.combinat import (
    bits_to_int,
    canonical,
    int_to_bits,
    is_permutation,
    lemma1_bruteforce,
    lemma1_exhaustive_check,
    outer_power,
    tensor_sum,
    tensor_sum_equal,
)
from hutchkit.limits import ResourceCapError

CE_M = [(1, 0, 0), (0, 1, 0), (0, 0, 1), (1, 1, 1)]
CE_N = [(1, 0, 1), (0, 0, 0), (1, 1, 0), (0, 1, 1)]


def tuples(Q, d):
    bit = st.integers(0, 1)
    return st.lists(st.lists(bit, min_size=Q, max_size=Q), min_size=d, max_size=d)


def naive_tensor_sum(ts, r):
    """Entry-by-entry oracle: sum_i prod_k t_i[a_k]."""
    Q = len(ts[0])
    out = np.zeros((Q,) * r, dtype=int)
    for idx in itertools.product(range(Q), repeat=r):
        out[idx] = sum(int(np.prod([t[a] for a in idx])) for t in ts)
    return out


def test_outer_power_examples():
    assert np.array_equal(outer_power([1, 0], 2), [[1, 0], [0, 0]])
    assert np.array_equal(outer_power([1, 1, 1], 2), np.ones((3, 3)))
    assert not outer_power([0, 0, 0, 0], 3).any()


def test_outer_power_rejects_bad_input():
    with pytest.raises(ValueError):
        outer_power([1, 0], 0)
    with pytest.raises(ValueError):
        outer_power([1, 2], 2)


@given(tuples(3, 3), st.integers(1, 3))
def test_tensor_sum_matches_entrywise_oracle(ts, r):
    assert np.array_equal(tensor_sum(ts, r), naive_tensor_sum(ts, r))


@given(tuples(3, 1), st.integers(1, 3))
def test_outer_power_is_symmetric(ts, r):
    T = outer_power(ts[0], r)
    for perm in itertools.permutations(range(r)):
        assert np.array_equal(T, np.transpose(T, perm))


def test_counterexample_pair():
    assert tensor_sum_equal(CE_M, CE_N, 2)
    assert not tensor_sum_equal(CE_M, CE_N, 3)
    assert not is_permutation(CE_M, CE_N)


def test_is_permutation_examples():
    assert is_permutation([(0, 1), (1, 0)], [(1, 0), (0, 1)])
    assert not is_permutation([(1, 1)], [(1, 0)])


def test_shape_mismatch_raises():
    with pytest.raises(ValueError):
        tensor_sum_equal([(0, 1)], [(0, 1), (1, 0)], 2)
    with pytest.raises(ValueError):
        is_permutation([(0, 1)], [(0, 1, 1)])


@given(tuples(3, 4), st.integers(1, 3), st.randoms(use_true_random=False))
def test_reordering_implies_equal_tensor_sums(ts, r, rnd):
    perm = list(ts)
    rnd.shuffle(perm)
    assert is_permutation(ts, perm)
    assert tensor_sum_equal(ts, perm, r)


@given(tuples(2, 3), tuples(2, 3), st.integers(2, 3))
def test_higher_rank_equality_implies_lower(ms, ns, r):
    if tensor_sum_equal(ms, ns, r):
        for lower in range(1, r):
            assert tensor_sum_equal(ms, ns, lower)


@given(st.integers(0, 255))
def test_bit_roundtrip(n):
    assert bits_to_int(int_to_bits(n, 8)) == n
    assert int_to_bits(n, 8)[0] == n & 1


@pytest.mark.parametrize("Q,d,r", [(1, 3, 1), (2, 2, 1), (2, 3, 1), (2, 2, 2), (1, 2, 2), (2, 3, 2)])
def test_multiset_check_agrees_with_bruteforce(Q, d, r):
    rep = lemma1_exhaustive_check(Q, d, r)
    assert rep.ordered_violations == lemma1_bruteforce(Q, d, r)


def test_bruteforce_known_counts():
    assert lemma1_bruteforce(2, 2, 2) == 0
    # r=1 cannot tell (00,11) from (01,10) and similar swaps
    assert lemma1_bruteforce(2, 3, 1) == 144


@pytest.mark.parametrize("Q,d", [(2, 2), (3, 3), (2, 3), (3, 2)])
def test_rank_two_equivalence_small(Q, d):
    assert lemma1_exhaustive_check(Q, d, 2).holds


def test_rank_two_fails_at_four():
    rep = lemma1_exhaustive_check(3, 4, 2)
    assert not rep.holds
    assert rep.contains(CE_M, CE_N)
    assert rep.contains(CE_N, list(reversed(CE_M)))
    assert len(rep.violations) == 1
    # 4! orderings of each side, both directions
    assert rep.ordered_violations == 2 * 24 * 24


def test_jsonl_format():
    rep = lemma1_exhaustive_check(3, 4, 2)
    rec = json.loads(rep.to_jsonl().splitlines()[0])
    assert rec["r"] == 2
    assert all(b in ("0", "1") for m in rec["ms"] for b in m)
    ms = [tuple(int(b) for b in m) for m in rec["ms"]]
    ns = [tuple(int(b) for b in n) for n in rec["ns"]]
    assert canonical(ms) == canonical(CE_N) and canonical(ns) == canonical(CE_M)
    assert lemma1_exhaustive_check(2, 2, 2).to_jsonl() == ""


def test_cap_enforced():
    with pytest.raises(ResourceCapError):
        lemma1_exhaustive_check(3, 4, 2, cap=10)
    with pytest.raises(ResourceCapError):
        lemma1_bruteforce(3, 4, 2, cap=10)
