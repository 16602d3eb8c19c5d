"""Random states from one random evolution time.

|chi(t)> = exp(-iGt)|+>^Q with t drawn from a symmetric time distribution.
Averaging over t gives E[|chi><chi|] = (I + B)/N, where the bias operator B
holds the characteristic function of t at every spectral gap. A spectrum
with distinct gaps plus a characteristic function of bounded support makes
B vanish and, for a wide enough distribution, restores the variance of the
random-phase estimator.

Rational spectra (integer or Fraction coefficients, e.g. the Golomb
Hamiltonians) are handled on an integer grid so that gaps landing exactly on
the edge of the Fejer support give exactly zero.
"""

import json
import math
from dataclasses import asdict, dataclass
from fractions import Fraction

import numpy as np

from .hamiltonians import mod_two_pi
from .limits import ResourceCapError, check_elements
from .rng import as_generator
from .states import phase_state

MAX_DENSE_QUBITS = 10


@dataclass(frozen=True)
class TimeDistribution:
    kind: str
    sigma: float

    def __post_init__(self):
        if self.kind not in ("gaussian", "fejer"):
            raise ValueError(f"unknown time distribution {self.kind!r}")
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")

    @classmethod
    def gaussian(cls, sigma):
        return cls("gaussian", float(sigma))

    @classmethod
    def fejer(cls, sigma):
        return cls("fejer", float(sigma))

    def density(self, t):
        t = np.asarray(t, dtype=float)
        s = self.sigma
        if self.kind == "gaussian":
            return np.exp(-(t**2) / (2 * s * s)) / (s * math.sqrt(2 * math.pi))
        # sin^2(t/s) / (pi t^2 / s), with the t -> 0 limit 1/(pi s)
        u = t / s
        return np.sinc(u / math.pi) ** 2 / (math.pi * s)

    def char(self, s):
        """E[exp(i s t)]."""
        return self.char_scaled(np.asarray(s, dtype=float), 1)

    def char_scaled(self, k, D):
        """Characteristic function at k / D, with k integer-valued (or float) and D > 0."""
        k = np.abs(np.asarray(k, dtype=float))
        if self.kind == "gaussian":
            x = k / D
            return np.exp(-(x**2) * self.sigma**2 / 2)
        reach = self.sigma * k
        return np.where(reach >= 2 * D, 0.0, 1.0 - reach / (2 * D))

    def sample(self, rng, size=None):
        rng = as_generator(rng)
        if self.kind == "gaussian":
            return rng.normal(0.0, self.sigma, size=size)
        n = 1 if size is None else int(np.prod(size))
        out = _sample_sinc2(rng, n) * self.sigma
        return out[0] if size is None else out.reshape(size)

    def __str__(self):
        return f"{self.kind}({self.sigma:g})"


def _sample_sinc2(rng, n):
    """Exact draws from sin^2(u)/(pi u^2) by rejection.

    Proposal density min(1, 1/u^2)/4: uniform on [-1, 1] with probability
    1/2, otherwise +-1/V with V uniform on (0, 1]. Acceptance rate pi/4.
    """
    out = np.empty(0)
    while out.size < n:
        m = 2 * (n - out.size) + 16
        core = rng.random(m) < 0.5
        v = 1.0 - rng.random(m)  # (0, 1]
        sign = np.where(rng.random(m) < 0.5, -1.0, 1.0)
        u = np.where(core, 2 * rng.random(m) - 1, sign / v)
        envelope = np.minimum(1.0, 1.0 / np.maximum(u * u, 1e-300))
        target = np.sinc(u / math.pi) ** 2
        keep = rng.random(m) * envelope < target
        out = np.concatenate([out, u[keep]])
    return out[:n]


def _is_exact(x):
    return isinstance(x, (int, Fraction)) and not isinstance(x, bool)


def _integer_grid(lambdas):
    """(numerators, D) with lambdas = numerators / D exactly, or None for float input."""
    if not all(_is_exact(x) for x in lambdas):
        return None
    fr = [Fraction(x) for x in lambdas]
    D = 1
    for f in fr:
        D = D * f.denominator // math.gcd(D, f.denominator)
    return [f.numerator * (D // f.denominator) for f in fr], D


def scaled_spectrum(G):
    """Spectrum of G as (k, D) with eigenvalue n = k[n]/D; D = 1.0 and float k for float coefficients."""
    if all(_is_exact(g) for g in G.terms.values()):
        k, D = _integer_grid(G.exact_spectrum())
        return np.array(k, dtype=object), D
    return G.spectrum(), 1.0


@dataclass
class SpectrumReport:
    eigenvalues: list
    min_gap: float
    gaps_distinct: bool
    gap_differences_nonzero: bool
    min_gap_difference: float

    def gap(self, m, n):
        return self.eigenvalues[n] - self.eigenvalues[m]

    def to_json(self):
        d = asdict(self)
        d["eigenvalues"] = [str(x) if isinstance(x, Fraction) else x for x in self.eigenvalues]
        return json.dumps(d)


def golomb_check(lambdas, tol=1e-12):
    """Gap structure of a spectrum.

    ``gaps_distinct``: every nonzero gap lambda_n - lambda_m (m != n) occurs
    for exactly one ordered pair. ``gap_differences_nonzero``: every
    difference of two gaps is nonzero unless it is trivially so, i.e. the
    same ordered pair or both gaps of the form lambda_m - lambda_m. That is
    equivalent to a nondegenerate spectrum with distinct gaps.

    Integer and Fraction inputs are compared exactly; floats with ``tol``
    relative to the spectral width.
    """
    lam = list(lambdas)
    if len(lam) < 2:
        raise ValueError("need at least two eigenvalues")
    grid = _integer_grid(lam)
    if grid is not None:
        k, D = grid
        vals = np.array(k, dtype=object)
        eps = 0
    else:
        vals = np.asarray(lam, dtype=float)
        D = 1.0
        eps = tol * max(float(np.ptp(vals)), 1.0)
    n = len(lam)
    off = ~np.eye(n, dtype=bool)
    gaps = (vals[None, :] - vals[:, None])[off]
    gaps_sorted = np.sort(gaps)
    steps = np.diff(gaps_sorted)
    gaps_distinct = bool(np.all(np.abs(steps) > eps)) if steps.size else True
    nondegenerate = bool(np.all(np.abs(gaps) > eps))
    # all gaps including the n zero gaps of m == n
    every = np.sort(np.concatenate([gaps, np.zeros(1, dtype=gaps.dtype)]))
    jumps = np.diff(every)
    jumps = jumps[np.abs(jumps) > eps]

    def value(x):
        return float(Fraction(int(x), D)) if grid is not None else float(x)

    nonzero = np.abs(gaps)[np.abs(gaps) > eps]
    min_gap = value(nonzero.min()) if nonzero.size else 0.0
    min_gd = value(jumps.min()) if jumps.size else 0.0
    return SpectrumReport(
        eigenvalues=lam,
        min_gap=min_gap,
        gaps_distinct=gaps_distinct,
        gap_differences_nonzero=gaps_distinct and nondegenerate,
        min_gap_difference=min_gd,
    )


def _dense_guard(Q):
    if Q > MAX_DENSE_QUBITS:
        raise ResourceCapError(f"dense single-time analysis is capped at Q={MAX_DENSE_QUBITS}, got {Q}")


def bias_operator(G, dist):
    """B[m, n] = char(lambda_n - lambda_m) off the diagonal, zero on it."""
    _dense_guard(G.Q)
    k, D = scaled_spectrum(G)
    k = np.asarray(k, dtype=object if isinstance(D, int) else float)
    gaps = (k[None, :] - k[:, None]).astype(float)
    B = dist.char_scaled(gaps, D)
    np.fill_diagonal(B, 0.0)
    return B


def _gap_coefficients(A, k):
    """Group off-diagonal entries of A by gap: returns (gap values, summed A entries)."""
    N = len(k)
    gaps = {}
    for m in range(N):
        for n in range(N):
            if m != n:
                g = k[n] - k[m]
                gaps[g] = gaps.get(g, 0) + A[m, n]
    keys = sorted(gaps)
    return keys, np.array([gaps[g] for g in keys], dtype=complex)


def singletime_variance(A, G, dist):
    """Exact variance of <chi(t)|A|chi(t)> over the time distribution.

    With c_g the sum of A[m, n] over pairs whose gap is g, the variance is
    (1/N^2) [ sum_{g, g'} conj(c_g) c_g' char(g - g') - |sum_g c_g char(g)|^2 ].
    """
    _dense_guard(G.Q)
    A = np.asarray(A, dtype=complex)
    N = G.N
    if A.shape != (N, N):
        raise ValueError(f"operator shape {A.shape} does not match N={N}")
    k, D = scaled_spectrum(G)
    keys, c = _gap_coefficients(A, list(k))
    check_elements(len(keys) ** 2, itemsize=8, what="gap-difference table")
    gk = np.array(keys, dtype=object if isinstance(D, int) else float)
    diff = (gk[:, None] - gk[None, :]).astype(float)
    phi = dist.char_scaled(diff, D)
    second = np.real(np.conj(c) @ phi @ c)
    mean_off = c @ dist.char_scaled(gk.astype(float), D)
    return float((second - abs(mean_off) ** 2) / N**2)


def ideal_variance(A):
    A = np.asarray(A)
    N = A.shape[0]
    sq = np.abs(A) ** 2
    return float(sq.sum() - np.trace(sq)) / N**2


def variance_cancellation_sigma(G):
    """Smallest Fejer width making every nontrivial gap-difference term vanish.

    Equals 2 / (min nonzero gap-difference). Raises if two gap-differences
    are trivially degenerate, since then no width can cancel them.
    """
    rep = golomb_check(G.exact_spectrum() if all(_is_exact(g) for g in G.terms.values()) else G.spectrum())
    if not rep.gap_differences_nonzero:
        raise ValueError("spectrum has degenerate gaps; no width cancels the bias terms")
    return 2.0 / rep.min_gap_difference


def evolution_phases(G, t):
    """lambda_n * t reduced mod 2pi; exact products for rational spectra."""
    if all(_is_exact(g) for g in G.terms.values()):
        tf = Fraction(float(t))
        return np.array([mod_two_pi(lam * tf) for lam in G.exact_spectrum()])
    return np.mod(G.spectrum() * t, 2 * math.pi)


def sample_single_time_state(G, dist, seed):
    """exp(-iGt)|+>^Q for one draw of t; returns (state, t)."""
    _dense_guard(G.Q)
    t = float(dist.sample(as_generator(seed)))
    return phase_state(evolution_phases(G, t)), t


def sample_single_time_states(G, dist, K, seed):
    """(K, N) batch of single-time states from one generator."""
    _dense_guard(G.Q)
    ts = dist.sample(as_generator(seed), K)
    k, D = scaled_spectrum(G)
    lam = np.array([float(Fraction(int(x), D)) for x in k]) if isinstance(D, int) else np.asarray(k)
    big = float(np.abs(lam).max() * np.abs(ts).max()) > 2**26
    if big:
        rows = [evolution_phases(G, t) for t in ts]
        return phase_state(np.array(rows)), ts
    return phase_state(np.mod(np.outer(ts, lam), 2 * math.pi)), ts
