"""Exact and empirical d-th moment operators E[(|chi><chi|)^{(x)d}].

Rows and columns of a moment operator are indexed by d-tuples of basis
states. A tuple (t_1, ..., t_d) is encoded as the integer
``sum_k t_k * N**(d-1-k)``, which is exactly the row index of the Kronecker
power v^{(x)d}; the dense and sparse routes therefore share one layout.

Three routes produce moments:

* :func:`classical_moment` and :func:`quantum_moment_analytic` assign
  weight 1/N^d to every pair of tuples in the same equivalence class
  (equal as multisets, or equal rank-r tensor sums respectively).
* :func:`quantum_moment_exact` literally averages v v^dagger over every
  angle tuple of a discrete ensemble.
* :func:`monte_carlo_moment` averages over sampled states.
"""

import itertools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .hamiltonians import basis_bits
from .limits import DEFAULT_TUPLE_PAIR_CAP, DENSE_DIM_CAP, ResourceCapError, check_count, check_elements
from .states import enumerate_quantum_ensemble

DEFAULT_TOL = 1e-10


def encode(tuples, N):
    """Integer codes of an (M, d) array of basis indices."""
    tuples = np.atleast_2d(np.asarray(tuples, dtype=np.int64))
    d = tuples.shape[1]
    weights = N ** np.arange(d - 1, -1, -1, dtype=np.int64)
    return tuples @ weights


def decode(codes, N, d):
    codes = np.asarray(codes, dtype=np.int64)
    powers = N ** np.arange(d - 1, -1, -1, dtype=np.int64)
    return (codes[:, None] // powers[None, :]) % N


def _as_index_tuple(ts, Q):
    """Accept a tuple of bitstrings or of basis integers."""
    out = []
    for t in ts:
        if np.ndim(t) == 0:
            out.append(int(t))
        else:
            bits = [int(b) for b in t]
            if len(bits) != Q:
                raise ValueError(f"bitstring length {len(bits)} does not match Q={Q}")
            out.append(sum(b << q for q, b in enumerate(bits)))
    return out


@dataclass
class MomentTensor:
    Q: int
    d: int
    matrix: sp.csr_matrix
    _factors: tuple = field(default=None, init=False, repr=False, compare=False)

    @property
    def N(self):
        return 2**self.Q

    @property
    def dim(self):
        return self.N**self.d

    @classmethod
    def from_dense(cls, Q, d, dense):
        return cls(Q, d, sp.csr_matrix(dense))

    def entry(self, ms, ns):
        a = encode(_as_index_tuple(ms, self.Q), self.N)[0]
        b = encode(_as_index_tuple(ns, self.Q), self.N)[0]
        return complex(self.matrix[a, b])

    def to_dense(self, limit=DENSE_DIM_CAP):
        if self.dim > limit:
            raise ValueError(f"dense view of dimension {self.dim} exceeds {limit}")
        return self.matrix.toarray()

    def trace(self):
        return complex(self.matrix.diagonal().sum())

    def hermiticity_error(self):
        diff = self.matrix - self.matrix.conj().T
        return float(abs(diff).max()) if diff.nnz else 0.0

    def max_abs_diff(self, other):
        if (self.Q, self.d) != (other.Q, other.d):
            raise ValueError("moment tensors have different shapes")
        diff = (self.matrix - other.matrix).tocsr()
        diff.eliminate_zeros()
        return float(abs(diff).max()) if diff.nnz else 0.0

    def partial_trace(self):
        """Trace out the last tensor factor, giving a (d-1)-th moment."""
        if self.d < 2:
            raise ValueError("need d >= 2 to trace out a factor")
        coo = self.matrix.tocoo()
        N = self.N
        keep = (coo.row % N) == (coo.col % N)
        dim = N ** (self.d - 1)
        m = sp.coo_matrix((coo.data[keep], (coo.row[keep] // N, coo.col[keep] // N)), shape=(dim, dim))
        return MomentTensor(self.Q, self.d - 1, m.tocsr())

    def factor_indices(self):
        """(data, flat) with flat[k] = n_k * N + m_k for every stored entry; cached."""
        if self._factors is None:
            coo = self.matrix.tocoo()
            ms = decode(coo.row, self.N, self.d)
            ns = decode(coo.col, self.N, self.d)
            flat = (ns * self.N + ms).T.astype(np.int32)
            self._factors = (coo.data.astype(complex), flat)
        return self._factors

    def min_eigenvalue(self):
        return float(np.linalg.eigvalsh(self.to_dense()).min())

    def differing_entries(self, other, tol=DEFAULT_TOL):
        """(m_tuple, n_tuple, self_value, other_value) where |self - other| > tol."""
        diff = (self.matrix - other.matrix).tocoo()
        mask = np.abs(diff.data) > tol
        rows, cols = diff.row[mask], diff.col[mask]
        order = np.lexsort((cols, rows))
        rows, cols = rows[order], cols[order]
        ms = decode(rows, self.N, self.d)
        ns = decode(cols, self.N, self.d)
        out = []
        for a, b, m, n in zip(rows, cols, ms, ns):
            out.append((tuple(m.tolist()), tuple(n.tolist()), complex(self.matrix[a, b]), complex(other.matrix[a, b])))
        return out


def _all_tuples(N, d, cap):
    check_count(N**d, cap, "tuple enumeration")
    return decode(np.arange(N**d, dtype=np.int64), N, d)


def _class_moment(Q, d, class_ids, cap):
    """Weight 1/N^d on every (row, col) pair sharing a class id."""
    N = 2**Q
    dim = N**d
    order = np.argsort(class_ids, kind="stable")
    sorted_ids = class_ids[order]
    bounds = np.flatnonzero(np.diff(sorted_ids)) + 1
    groups = np.split(order, bounds)
    nnz = sum(len(g) ** 2 for g in groups)
    check_count(nnz, cap, "moment nonzeros")
    check_elements(nnz, itemsize=24, what="sparse moment")
    rows = np.concatenate([np.repeat(g, len(g)) for g in groups])
    cols = np.concatenate([np.tile(g, len(g)) for g in groups])
    data = np.full(nnz, 1.0 / dim, dtype=complex)
    return MomentTensor(Q, d, sp.csr_matrix((data, (rows, cols)), shape=(dim, dim)))


def classical_moment(Q, d, cap=DEFAULT_TUPLE_PAIR_CAP):
    """Moment of the random-phase ensemble: tuples related by a reordering."""
    if d < 1:
        raise ValueError("need d >= 1")
    N = 2**Q
    tuples = _all_tuples(N, d, cap)
    canon = encode(np.sort(tuples, axis=1), N)
    return _class_moment(Q, d, canon, cap)


def _subset_monomials(Q, r):
    """(N, M) matrix of prod_{i in A} n_i over all subsets 1 <= |A| <= r."""
    bits = basis_bits(Q)
    cols = []
    for size in range(1, min(r, Q) + 1):
        for A in itertools.combinations(range(Q), size):
            cols.append(np.bitwise_and.reduce(bits[:, list(A)], axis=1))
    return np.stack(cols, axis=1)


def quantum_moment_analytic(Q, r, d, cap=DEFAULT_TUPLE_PAIR_CAP):
    """Moment under continuous uniform couplings: tuples with equal rank-r tensor sums.

    The entries of sum_k t_k^{(x)r} are the counts sum_k prod_{i in A} t_{k,i}
    over index sets A with |A| <= r, which is what gets compared.
    """
    if d < 1 or r < 1:
        raise ValueError("need d >= 1 and r >= 1")
    N = 2**Q
    tuples = _all_tuples(N, d, cap)
    mono = _subset_monomials(Q, r)
    signature = mono[tuples].sum(axis=1)
    _, class_ids = np.unique(signature, axis=0, return_inverse=True)
    return _class_moment(Q, d, class_ids.ravel(), cap)


def _kron_rows(states, d):
    """Row-wise d-fold Kronecker power of a (K, N) batch."""
    out = states
    for _ in range(d - 1):
        out = (out[:, :, None] * states[:, None, :]).reshape(states.shape[0], -1)
    return out


def dense_moment(states, d, weights=None, workers=1, chunk_elems=2**22):
    """sum_k w_k (v_k v_k^dagger) with v_k the d-fold Kronecker power of row k.

    Chunk boundaries do not depend on ``workers`` and partial sums are merged
    in chunk order, so the result is identical for any worker count.
    """
    states = np.asarray(states, dtype=complex)
    K, N = states.shape
    dim = N**d
    check_elements(dim * dim, what="dense moment")
    if weights is None:
        weights = np.full(K, 1.0 / K)
    rows = max(1, chunk_elems // dim)
    starts = list(range(0, K, rows))

    def part(s):
        V = _kron_rows(states[s : s + rows], d)
        return (V.T * weights[s : s + rows]) @ V.conj()

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(part, starts))
    else:
        parts = [part(s) for s in starts]
    acc = np.zeros((dim, dim), dtype=complex)
    for p in parts:
        acc += p
    return acc


def quantum_moment_exact(Q, r, d, dist, workers=1, dim_cap=DENSE_DIM_CAP):
    """Average of (|chi><chi|)^{(x)d} over every angle tuple of a discrete law."""
    N = 2**Q
    if N**d > dim_cap:
        _raise_dense_cap(N**d, dim_cap)
    states = enumerate_quantum_ensemble(Q, r, dist)
    check_elements(states.shape[0] * N**d, what="Kronecker-power enumeration")
    return MomentTensor.from_dense(Q, d, dense_moment(states, d, workers=workers))


def _raise_dense_cap(dim, cap):
    raise ResourceCapError(f"moment dimension {dim} exceeds dense cap {cap}")


def ensemble_entry(states, ms, ns, Q):
    """E[prod_k chi(m_k) conj(chi(n_k))] over equally weighted ensemble rows."""
    mi = _as_index_tuple(ms, Q)
    ni = _as_index_tuple(ns, Q)
    if len(mi) != len(ni):
        raise ValueError("tuples have different lengths")
    states = np.asarray(states)
    prod = np.ones(states.shape[0], dtype=complex)
    for a, b in zip(mi, ni):
        prod *= states[:, a] * states[:, b].conj()
    return complex(prod.mean())


def moment_entry_exact(Q, r, dist, ms, ns):
    """One entry of the exact discrete-ensemble moment, without the dense operator."""
    return ensemble_entry(enumerate_quantum_ensemble(Q, r, dist), ms, ns, Q)


def monte_carlo_moment(sampler, d, K, seed, dim_cap=DENSE_DIM_CAP):
    """(1/K) sum_k (|chi_k><chi_k|)^{(x)d}; ``sampler(K, seed)`` returns a (K, N) batch."""
    if K < 1:
        raise ValueError("need K >= 1")
    states = np.asarray(sampler(K, seed))
    N = states.shape[1]
    if N**d > dim_cap:
        _raise_dense_cap(N**d, dim_cap)
    Q = int(round(np.log2(N)))
    return MomentTensor.from_dense(Q, d, dense_moment(states, d))


def certify_design_order(Q, r, d_max=None, tol=DEFAULT_TOL, cap=DEFAULT_TUPLE_PAIR_CAP):
    """Largest d <= d_max at which the analytic quantum moment equals the classical one.

    Matching is monotone in d, so the scan stops at the first mismatch.
    """
    if d_max is None:
        d_max = 2**r
    for d in range(1, d_max + 1):
        gap = quantum_moment_analytic(Q, r, d, cap).max_abs_diff(classical_moment(Q, d, cap))
        if gap > tol:
            return d - 1
    return d_max


def moment_contraction(M, observables):
    """Tr[M (A_1 (x) ... (x) A_d)] = E[prod_k <chi|A_k|chi>] when M is a moment."""
    if len(observables) != M.d:
        raise ValueError(f"need {M.d} observables, got {len(observables)}")
    obs = [np.asarray(A) for A in observables]
    for A in obs:
        if A.shape != (M.N, M.N):
            raise ValueError(f"observable shape {A.shape} does not match N={M.N}")
    data, flat = M.factor_indices()
    prod = data
    for k, A in enumerate(obs):
        prod = prod * A.ravel()[flat[k]]
    return complex(prod.sum())


def ensemble_contraction(states, observables, weights=None):
    """E[prod_k <chi|A_k|chi>] straight from a batch of states."""
    states = np.asarray(states)
    vals = np.ones(states.shape[0], dtype=complex)
    for A in observables:
        vals *= np.einsum("ki,ij,kj->k", states.conj(), np.asarray(A), states)
    if weights is None:
        return complex(vals.mean())
    return complex(np.dot(weights, vals))


def _bits_label(idx, Q):
    return "".join(str((idx >> q) & 1) for q in range(Q))


def write_diff_csv(quantum, classical, path, tol=DEFAULT_TOL):
    """CSV of entries where the two moments differ by more than ``tol``."""
    rows = quantum.differing_entries(classical, tol)
    with open(path, "w") as fh:
        fh.write("m_tuple,n_tuple,re_q,im_q,re_c,im_c,abs_diff\n")
        for m, n, q, c in rows:
            ml = " ".join(_bits_label(x, quantum.Q) for x in m)
            nl = " ".join(_bits_label(x, quantum.Q) for x in n)
            fh.write(f"{ml},{nl},{q.real:.17g},{q.imag:.17g},{c.real:.17g},{c.imag:.17g},{abs(q - c):.17g}\n")
    return len(rows)
