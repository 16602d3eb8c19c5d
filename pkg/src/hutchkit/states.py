"""Random-state families as dense amplitude vectors.

Basis index n encodes the bitstring with qubit 0 as the least-significant
bit. States are plain complex128 numpy arrays of length N = 2**Q; batches
are (K, N) arrays with one state per row.

Families:

* ``classical``: independent phases per amplitude (uniform or Rademacher);
  exponential cost, kept behind ``MAX_CLASSICAL_QUBITS``.
* ``quantum``: exp(-iG)|+>^Q with a freshly sampled diagonal G.
* ``clean-qubit``: a uniformly random computational basis state.
"""

import itertools

import numpy as np

from .hamiltonians import AngleDistribution, monomial_matrix, term_multisets
from .limits import check_elements
from .rng import as_generator

MAX_CLASSICAL_QUBITS = 24
FAMILIES = ("classical", "quantum", "clean-qubit")


def plus_state(Q):
    if Q < 1:
        raise ValueError("need Q >= 1")
    N = 2**Q
    return np.full(N, 1 / np.sqrt(N), dtype=complex)


def phase_state(phases):
    """Uniform-modulus state with amplitudes exp(-i * phases) / sqrt(N)."""
    phases = np.asarray(phases, dtype=float)
    return np.exp(-1j * phases) / np.sqrt(phases.shape[-1])


def classical_hutchinson(Q, phase_kind="uniform-phase", seed=0, K=None):
    """Random-phase state(s); ``K`` gives a (K, N) batch instead of one vector."""
    if Q < 1:
        raise ValueError("need Q >= 1")
    if Q > MAX_CLASSICAL_QUBITS:
        raise ValueError(f"classical Hutchinson states are capped at Q={MAX_CLASSICAL_QUBITS}")
    rng = as_generator(seed)
    N = 2**Q
    shape = (N,) if K is None else (K, N)
    if phase_kind == "uniform-phase":
        return phase_state(rng.uniform(0, 2 * np.pi, size=shape))
    if phase_kind == "rademacher":
        signs = rng.choice(np.array([-1.0, 1.0]), size=shape)
        return (signs / np.sqrt(N)).astype(complex)
    raise ValueError(f"unknown phase kind {phase_kind!r}")


def quantum_hutchinson(G, Q=None):
    if Q is not None and Q != G.Q:
        raise ValueError(f"Hamiltonian acts on {G.Q} qubits, not {Q}")
    return phase_state(G.spectrum())


def one_clean_qubit_sample(Q, seed=0, K=None):
    rng = as_generator(seed)
    N = 2**Q
    idx = rng.integers(0, N, size=1 if K is None else K)
    out = np.zeros((idx.size, N), dtype=complex)
    out[np.arange(idx.size), idx] = 1.0
    return out[0] if K is None else out


def sample_states(family, Q, K, seed, *, r=2, dist=None, phase_kind="uniform-phase"):
    """(K, N) batch of states from ``family``.

    Quantum draws use the same term order as :func:`hamiltonians.sample_G`
    (one coupling per multiset of size ``r``).
    """
    if K < 1:
        raise ValueError("need K >= 1")
    check_elements(K * 2**Q, what="state batch")
    rng = as_generator(seed)
    if family == "classical":
        return classical_hutchinson(Q, phase_kind, rng, K=K)
    if family == "clean-qubit":
        return one_clean_qubit_sample(Q, rng, K=K)
    if family == "quantum":
        dist = dist or AngleDistribution.uniform()
        terms = term_multisets(Q, r)
        mono = monomial_matrix(terms, Q).astype(float)
        gammas = dist.sample(rng, (K, len(terms)))
        return phase_state(gammas @ mono)
    raise ValueError(f"unknown family {family!r}; expected one of {FAMILIES}")


def enumerate_quantum_ensemble(Q, r, dist):
    """Every state of the discrete ensemble, one row per angle tuple.

    Angle tuples run as an odometer over the terms in lexicographic multiset
    order (last term fastest). Each row is equally likely.
    """
    if not dist.is_discrete:
        raise ValueError("full enumeration needs a discrete angle distribution")
    terms = term_multisets(Q, r)
    k, T = dist.modulus, len(terms)
    check_elements(k**T * 2**Q, what="ensemble enumeration")
    grid = np.array(list(itertools.product(range(k), repeat=T)), dtype=float).reshape(k**T, T)
    gammas = 2 * np.pi * grid / k
    mono = monomial_matrix(terms, Q).astype(float)
    return phase_state(gammas @ mono)


def fidelity(a, b):
    """|<a|b>|; 1 iff the states agree up to a global phase."""
    return float(abs(np.vdot(a, b)))


def write_state_csv(state, path):
    with open(path, "w") as fh:
        for i, amp in enumerate(np.asarray(state)):
            fh.write(f"{i},{amp.real:.17g},{amp.imag:.17g}\n")


def read_state_csv(path):
    rows = np.loadtxt(path, delimiter=",", ndmin=2)
    out = np.zeros(rows.shape[0], dtype=complex)
    out[rows[:, 0].astype(int)] = rows[:, 1] + 1j * rows[:, 2]
    return out
