import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hutchkit.hamiltonians import AngleDistribution, DiagonalHamiltonian, sample_G
from hutchkit.states import (
    classical_hutchinson,
    enumerate_quantum_ensemble,
    fidelity,
    one_clean_qubit_sample,
    plus_state,
    quantum_hutchinson,
    read_state_csv,
    sample_states,
    write_state_csv,
)


def test_plus_state():
    assert np.allclose(plus_state(1), [2**-0.5] * 2)
    assert np.allclose(plus_state(2), [0.5] * 4)
    assert abs(np.linalg.norm(plus_state(7)) - 1) < 1e-15


def test_classical_modulus_and_rademacher():
    v = classical_hutchinson(4, seed=1)
    assert np.allclose(np.abs(v), 0.25)
    w = classical_hutchinson(4, "rademacher", seed=1)
    assert set(np.round(w.real * 4).astype(int)) <= {-1, 1}
    assert not w.imag.any()
    assert np.array_equal(classical_hutchinson(3, seed=5), classical_hutchinson(3, seed=5))
    with pytest.raises(ValueError):
        classical_hutchinson(25)


def test_quantum_examples():
    G0 = DiagonalHamiltonian(3, 2, {(0, 0): 0.0})
    assert np.allclose(quantum_hutchinson(G0), plus_state(3))
    G = DiagonalHamiltonian(2, 2, {(0, 1): np.pi})
    assert np.allclose(quantum_hutchinson(G), np.array([1, 1, 1, -1]) / 2)
    with pytest.raises(ValueError):
        quantum_hutchinson(G, Q=3)


@given(st.integers(1, 6), st.integers(0, 2**31))
def test_quantum_constant_modulus(Q, seed):
    G = sample_G(Q, min(2, Q), AngleDistribution.uniform(), seed)
    v = quantum_hutchinson(G)
    assert np.allclose(np.abs(v), 2 ** (-Q / 2), atol=1e-14)
    assert abs(v[0] - 2 ** (-Q / 2)) < 1e-15


def test_termwise_evolution_matches():
    G = sample_G(4, 2, AngleDistribution.uniform(), 2)
    v = plus_state(4)
    for S, g in reversed(list(G.terms.items())):
        single = DiagonalHamiltonian(4, 2, {S: g})
        v = v * np.exp(-1j * single.spectrum())
    assert fidelity(v, quantum_hutchinson(G)) == pytest.approx(1, abs=1e-14)


def test_clean_qubit():
    v = one_clean_qubit_sample(3, seed=4)
    assert sorted(np.abs(v)) == [0] * 7 + [1]
    batch = one_clean_qubit_sample(2, seed=0, K=40000)
    freq = np.abs(batch).sum(axis=0) / 40000
    assert np.allclose(freq, 0.25, atol=0.02)
    full = np.eye(4)
    assert np.allclose(full.T @ full / 4, np.eye(4) / 4)


def test_batch_families():
    for fam in ("classical", "quantum", "clean-qubit"):
        b = sample_states(fam, 3, 6, 11)
        assert b.shape == (6, 8)
        assert np.allclose(np.linalg.norm(b, axis=1), 1)
        assert np.array_equal(b, sample_states(fam, 3, 6, 11))
    with pytest.raises(ValueError):
        sample_states("haar", 3, 2, 0)


def test_batch_quantum_matches_sample_G():
    # the batch path and sample_G consume draws in the same term order
    from hutchkit.rng import derive

    rng = derive(3)
    b = sample_states("quantum", 3, 1, rng, dist=AngleDistribution.discrete(4))
    G = sample_G(3, 2, AngleDistribution.discrete(4), derive(3))
    assert fidelity(b[0], quantum_hutchinson(G)) == pytest.approx(1, abs=1e-14)


def test_enumeration_covers_all_tuples():
    ens = enumerate_quantum_ensemble(2, 2, AngleDistribution.discrete(4))
    assert ens.shape == (64, 4)
    assert np.allclose(ens[0], plus_state(2))
    # the odometer runs the last term fastest: row 1 sets gamma_(1,1) = pi/2
    assert np.allclose(ens[1], plus_state(2) * np.exp(-1j * np.pi / 2 * np.array([0, 0, 1, 1])))


def test_csv_roundtrip(tmp_path):
    v = quantum_hutchinson(sample_G(3, 2, AngleDistribution.uniform(), 1))
    write_state_csv(v, tmp_path / "s.csv")
    assert np.array_equal(read_state_csv(tmp_path / "s.csv"), v)
