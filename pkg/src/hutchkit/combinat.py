"""Bitstring tensor algebra and the permutation characterization checks.

A bitstring is any length-Q sequence of 0/1 values; a tuple is a sequence of
d bitstrings of equal length. Tuples are compared as multisets through a
sorted canonical form.

The central question answered here: for which (Q, d, r) does equality of the
summed rank-r outer powers, sum_i m_i^{(x)r} == sum_i n_i^{(x)r}, force the
two tuples to be reorderings of each other?
"""

import itertools
import json
from dataclasses import dataclass, field
from math import comb

import numpy as np

from .limits import DEFAULT_TUPLE_PAIR_CAP, check_count


def as_bits(v):
    arr = np.asarray(v, dtype=np.int64)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError("a bitstring must be a non-empty 1-D sequence")
    if not np.all((arr == 0) | (arr == 1)):
        raise ValueError("bitstring entries must be 0 or 1")
    return arr


def as_tuple(ts):
    arr = np.asarray(ts, dtype=np.int64)
    if arr.ndim != 2 or arr.shape[0] == 0 or arr.shape[1] == 0:
        raise ValueError("a bitstring tuple must be a non-empty d x Q array")
    if not np.all((arr == 0) | (arr == 1)):
        raise ValueError("bitstring entries must be 0 or 1")
    return arr


def int_to_bits(n, Q):
    """Bits of basis index ``n``; qubit 0 is the least-significant bit."""
    return tuple((int(n) >> q) & 1 for q in range(Q))


def bits_to_int(bits):
    return sum(int(b) << q for q, b in enumerate(bits))


def outer_power(v, r):
    """Rank-r tensor with entry (a1..ar) = prod_k v[a_k]."""
    if r < 1:
        raise ValueError("order r must be >= 1")
    v = as_bits(v)
    out = v
    for _ in range(r - 1):
        out = np.multiply.outer(out, v)
    return out


def tensor_sum(ts, r):
    ts = as_tuple(ts)
    return sum(outer_power(t, r) for t in ts)


def _check_pair(ms, ns):
    ms, ns = as_tuple(ms), as_tuple(ns)
    if ms.shape != ns.shape:
        raise ValueError(f"tuple shapes differ: {ms.shape} vs {ns.shape}")
    return ms, ns


def tensor_sum_equal(ms, ns, r):
    ms, ns = _check_pair(ms, ns)
    return bool(np.array_equal(tensor_sum(ms, r), tensor_sum(ns, r)))


def canonical(ts):
    """Sorted tuple-of-tuples form; equal iff the tuples are reorderings."""
    return tuple(sorted(tuple(int(x) for x in t) for t in as_tuple(ts)))


def is_permutation(ms, ns):
    ms, ns = _check_pair(ms, ns)
    return canonical(ms) == canonical(ns)


@dataclass
class Lemma1Report:
    Q: int
    d: int
    r: int
    classes_checked: int
    # canonical (ms, ns) multiset pairs, ms < ns lexicographically
    violations: list = field(default_factory=list)
    # number of ordered tuple pairs (ms, ns) the violations stand for
    ordered_violations: int = 0

    @property
    def holds(self):
        return not self.violations

    def contains(self, ms, ns):
        a, b = canonical(ms), canonical(ns)
        key = (a, b) if a <= b else (b, a)
        return key in set(self.violations)

    def to_jsonl(self):
        lines = []
        for ms, ns in self.violations:
            rec = {
                "ms": [[str(b) for b in m] for m in ms],
                "ns": [[str(b) for b in n] for n in ns],
                "r": self.r,
            }
            lines.append(json.dumps(rec))
        return "\n".join(lines) + ("\n" if lines else "")


def _arrangements(multiset):
    """Number of distinct orderings of a multiset of bitstrings."""
    counts = {}
    for m in multiset:
        counts[m] = counts.get(m, 0) + 1
    total = len(multiset)
    out = 1
    for c in counts.values():
        out *= comb(total, c)
        total -= c
    return out


def lemma1_exhaustive_check(Q, d, r, cap=DEFAULT_TUPLE_PAIR_CAP):
    """Every tuple pair on which rank-r tensor equality and reordering disagree.

    Both predicates are invariant under reordering either tuple, so the
    search runs over multisets: a pair of ordered tuples violates the
    equivalence iff their multisets are distinct yet share a tensor sum.
    That covers all N^(2d) ordered pairs exactly while enumerating only
    C(N+d-1, d) multisets. ``cap`` bounds the multiset count.
    """
    if Q < 1 or r < 1 or d < 1:
        raise ValueError("need Q, d, r >= 1")
    N = 2**Q
    n_classes = comb(N + d - 1, d)
    check_count(n_classes, cap, "multiset enumeration")
    basis = [int_to_bits(n, Q) for n in range(N)]
    groups = {}
    for idx in itertools.combinations_with_replacement(range(N), d):
        ms = tuple(basis[i] for i in idx)
        key = tensor_sum(ms, r).tobytes()
        groups.setdefault(key, []).append(tuple(sorted(ms)))
    report = Lemma1Report(Q=Q, d=d, r=r, classes_checked=n_classes)
    for members in groups.values():
        if len(members) < 2:
            continue
        members.sort()
        for a, b in itertools.combinations(members, 2):
            report.violations.append((a, b))
            report.ordered_violations += 2 * _arrangements(a) * _arrangements(b)
    report.violations.sort()
    return report


def lemma1_bruteforce(Q, d, r, cap=DEFAULT_TUPLE_PAIR_CAP):
    """Literal scan over all N^(2d) ordered tuple pairs.

    Slow reference for :func:`lemma1_exhaustive_check`; returns the count of
    disagreeing ordered pairs.
    """
    N = 2**Q
    check_count(N ** (2 * d), cap, "ordered tuple-pair enumeration")
    basis = [int_to_bits(n, Q) for n in range(N)]
    tuples = [tuple(basis[i] for i in idx) for idx in itertools.product(range(N), repeat=d)]
    sums = [tensor_sum(t, r) for t in tuples]
    canon = [canonical(t) for t in tuples]
    bad = 0
    for i in range(len(tuples)):
        for j in range(len(tuples)):
            if np.array_equal(sums[i], sums[j]) != (canon[i] == canon[j]):
                bad += 1
    return bad
