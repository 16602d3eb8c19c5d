import json
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from hutchkit.hamiltonians import AngleDistribution, DiagonalHamiltonian, golomb_hamiltonians, sample_G
from hutchkit.limits import ResourceCapError
from hutchkit.singletime import (
    TimeDistribution,
    bias_operator,
    golomb_check,
    ideal_variance,
    sample_single_time_state,
    sample_single_time_states,
    singletime_variance,
    variance_cancellation_sigma,
)
from hutchkit.states import plus_state
from hutchkit.trace import quadratic_forms, random_hermitian


def golomb_values(N):
    return [Fraction(N * n * n + n, N + 1) for n in range(N)]


def brute_gap_report(lam):
    """All ordered-pair gaps by double loop, exact for Fractions."""
    gaps = [lam[n] - lam[m] for m in range(len(lam)) for n in range(len(lam)) if m != n]
    return len(set(gaps)) == len(gaps), min(abs(g) for g in gaps)


def test_char_function_shapes():
    g = TimeDistribution.gaussian(1.5)
    assert g.char(0) == 1
    assert g.char(2.0) == pytest.approx(math.exp(-4 * 2.25 / 2))
    f = TimeDistribution.fejer(2)
    assert f.char(0) == 1
    assert f.char(0.5) == pytest.approx(0.5)
    assert f.char(1.0) == 0 and f.char(-3.0) == 0
    with pytest.raises(ValueError):
        TimeDistribution("cauchy", 1)
    with pytest.raises(ValueError):
        TimeDistribution.fejer(0)


@pytest.mark.parametrize("sigma", [0.5, 1, 2, 3.7])
def test_fejer_density_normalised(sigma):
    f = TimeDistribution.fejer(sigma)
    T = 400 * sigma
    core, _ = integrate.quad(f.density, -T, T, limit=2000)
    # tail beyond T: sin^2 averages to 1/2, so each side is about sigma / (2 pi T)
    tail = 2 * sigma / (2 * math.pi * T)
    assert core + tail == pytest.approx(1, abs=2e-4)


@pytest.mark.parametrize("sigma", [0.7, 2.0])
def test_fejer_char_matches_density_transform(sigma):
    f = TimeDistribution.fejer(sigma)
    T = 500 * sigma
    for s in (0.0, 0.3 / sigma, 1.0 / sigma, 1.7 / sigma, 2.5 / sigma):
        val, _ = integrate.quad(lambda t: f.density(t) * math.cos(s * t), -T, T, limit=4000)
        assert val == pytest.approx(float(f.char(s)), abs=2e-3)


@pytest.mark.parametrize("kind", ["gaussian", "fejer"])
def test_sampler_char_convergence(kind):
    dist = TimeDistribution(kind, 1.3)
    gaps = np.array([0.2, 0.6, 1.0, 1.4])
    errs = []
    Ks = [1000, 10000, 100000]
    for K in Ks:
        e = []
        for seed in range(6):
            t = dist.sample(np.random.default_rng(seed), K)
            emp = np.exp(1j * np.outer(gaps, t)).mean(axis=1)
            e.append(np.abs(emp - dist.char(gaps)).max())
        errs.append(np.mean(e))
    slope = np.polyfit(np.log(Ks), np.log(errs), 1)[0]
    assert abs(slope + 0.5) < 0.15
    assert errs[-1] < 0.01


def test_fejer_sample_quantiles():
    dist = TimeDistribution.fejer(1.0)
    t = dist.sample(np.random.default_rng(3), 200000)
    # P(|t| <= 1) = (2/pi) * integral_0^1 sin^2 u / u^2 du
    p, _ = integrate.quad(lambda u: np.sinc(u / np.pi) ** 2, 0, 1)
    assert np.mean(np.abs(t) <= 1) == pytest.approx(2 * p / math.pi, abs=5e-3)
    assert abs(np.median(t)) < 0.02


def test_golomb_check_examples():
    assert not golomb_check(list(range(8))).gaps_distinct
    rep = golomb_check([0, 1, 3])
    assert rep.gaps_distinct and rep.gap_differences_nonzero and rep.min_gap == 1
    rep = golomb_check([0.0, 1.0, 3.0])
    assert rep.gaps_distinct
    assert not golomb_check([0, 0, 5]).gap_differences_nonzero
    data = json.loads(golomb_check(golomb_values(4)).to_json())
    assert data["gaps_distinct"] and data["eigenvalues"][1] == "1"


@pytest.mark.parametrize("N", [2, 4, 8, 16, 32])
def test_golomb_matches_bruteforce(N):
    lam = golomb_values(N)
    distinct, min_gap = brute_gap_report(lam)
    rep = golomb_check(lam)
    assert rep.gaps_distinct == distinct
    assert rep.min_gap == float(min_gap) == 1


@given(st.lists(st.integers(-40, 40), min_size=2, max_size=7, unique=True))
@settings(max_examples=60)
def test_golomb_random_integer_sets(vals):
    distinct, _ = brute_gap_report(vals)
    assert golomb_check(vals).gaps_distinct == distinct
    assert golomb_check([float(v) for v in vals]).gaps_distinct == distinct


def test_bias_examples():
    _, G2 = golomb_hamiltonians(3)
    assert not bias_operator(G2, TimeDistribution.fejer(2)).any()
    assert not bias_operator(G2, TimeDistribution.fejer(5)).any()
    B = bias_operator(G2, TimeDistribution.gaussian(1.0))
    assert np.abs(B).max() == pytest.approx(math.exp(-0.5))
    G = DiagonalHamiltonian(2, 2, {(0, 0): 1, (1, 1): 1})
    assert bias_operator(G, TimeDistribution.gaussian(3.0)).max() == 1


def test_bias_is_gap_function():
    G = sample_G(3, 2, AngleDistribution.uniform(), 2)
    dist = TimeDistribution.gaussian(0.8)
    B = bias_operator(G, dist)
    lam = G.spectrum()
    for m in range(8):
        for n in range(8):
            if m != n:
                assert B[m, n] == pytest.approx(float(dist.char(lam[n] - lam[m])))
    assert np.allclose(B, B.T)


def test_variance_examples():
    _, G2 = golomb_hamiltonians(2)
    dist = TimeDistribution.fejer(variance_cancellation_sigma(G2))
    assert singletime_variance(np.eye(4), G2, dist) == pytest.approx(0, abs=1e-15)
    A = random_hermitian(4, 0)
    assert singletime_variance(A, G2, dist) == pytest.approx(ideal_variance(A), abs=1e-12)
    with pytest.raises(ValueError):
        singletime_variance(np.eye(8), G2, dist)


def test_cancellation_sigma_values():
    expect = {1: 2, 2: 10 / 3, 3: 9, 4: 17}
    for Q, sigma in expect.items():
        _, G2 = golomb_hamiltonians(Q)
        assert variance_cancellation_sigma(G2) == pytest.approx(sigma)
    G1, _ = golomb_hamiltonians(2)
    with pytest.raises(ValueError):
        variance_cancellation_sigma(G1)


def quadrature_variance(A, G, dist, T):
    """Direct time integral of the quadratic form's variance (Gaussian only)."""
    lam = G.spectrum()
    ts = np.linspace(-T, T, 20001)
    w = dist.density(ts) * (ts[1] - ts[0])
    states = np.exp(-1j * np.outer(ts, lam)) / np.sqrt(len(lam))
    vals = quadratic_forms(A, states)
    mean = np.dot(w, vals)
    return float(np.dot(w, np.abs(vals - mean) ** 2))


def test_variance_against_quadrature():
    G = sample_G(2, 2, AngleDistribution.uniform(), 7)
    dist = TimeDistribution.gaussian(0.9)
    A = random_hermitian(4, 3)
    assert singletime_variance(A, G, dist) == pytest.approx(quadrature_variance(A, G, dist, 9.0), abs=1e-9)


def test_single_time_state():
    G1, G2 = golomb_hamiltonians(3)
    state, t = sample_single_time_state(G2, TimeDistribution.gaussian(1.0), 4)
    assert np.allclose(np.abs(state), 8**-0.5)
    expect = np.exp(-1j * np.array([float(x) for x in G2.exact_spectrum()]) * t) / np.sqrt(8)
    assert abs(np.vdot(state, expect)) == pytest.approx(1, abs=1e-9)
    tiny = TimeDistribution.gaussian(1e-300)
    state, _ = sample_single_time_state(G1, tiny, 0)
    assert np.allclose(state, plus_state(3))


def test_monte_carlo_first_moment():
    _, G2 = golomb_hamiltonians(2)
    dist = TimeDistribution.gaussian(0.6)
    K = 40000
    states, _ = sample_single_time_states(G2, dist, K, 1)
    rho = states.T @ states.conj() / K
    target = (np.eye(4) + bias_operator(G2, dist)) / 4
    # each entry is a mean of unit-modulus terms / N, std <= 1/(N sqrt K)
    assert np.abs(rho - target).max() < 3 * 4 / (4 * np.sqrt(K))


def test_monte_carlo_variance():
    _, G2 = golomb_hamiltonians(2)
    dist = TimeDistribution.fejer(variance_cancellation_sigma(G2))
    A = random_hermitian(4, 9)
    states, _ = sample_single_time_states(G2, dist, 50000, 2)
    vals = quadratic_forms(A, states).real
    assert vals.mean() == pytest.approx(np.trace(A).real / 4, abs=4 * vals.std() / np.sqrt(50000))
    assert vals.var() == pytest.approx(ideal_variance(A), rel=0.05)


def test_dense_guard():
    G = DiagonalHamiltonian(11, 2, {})
    with pytest.raises(ResourceCapError):
        bias_operator(G, TimeDistribution.fejer(2))
    with pytest.raises(ResourceCapError):
        sample_single_time_state(G, TimeDistribution.fejer(2), 0)
