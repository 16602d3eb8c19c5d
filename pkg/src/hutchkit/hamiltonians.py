"""Diagonal generating Hamiltonians built from number operators.

A :class:`DiagonalHamiltonian` maps sorted qubit multisets ``S`` (0-based,
``len(S) <= r``) to coefficients ``gamma_S`` in radians. Its eigenvalue on
basis state ``n`` is ``sum_S gamma_S * prod_{i in S} n_i``; since
``Gamma_i**2 == Gamma_i`` repeated indices collapse.

Coefficients may be floats or :class:`fractions.Fraction`; the Golomb
Hamiltonians keep exact rationals so their (exponentially large) couplings
can be reduced modulo 2 pi without rounding.
"""

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from math import comb

import mpmath
import numpy as np

from .rng import as_generator

TWO_PI = 2 * math.pi


def mod_two_pi(x):
    """Reduce an angle into [0, 2pi) as a float.

    Ints and Fractions are reduced in extended precision sized to their
    magnitude, so huge exact coefficients keep every significant bit.
    """
    if isinstance(x, (int, Fraction)) and not isinstance(x, bool):
        x = Fraction(x)
        digits = max(len(str(abs(x.numerator))) - len(str(x.denominator)), 0)
        with mpmath.workdps(digits + 30):
            y = mpmath.mpf(x.numerator) / x.denominator
            y = float(y - 2 * mpmath.pi * mpmath.floor(y / (2 * mpmath.pi)))
    else:
        y = math.fmod(float(x), TWO_PI)
        y = y + TWO_PI if y < 0 else y
    # tiny negatives round up to exactly 2pi
    return 0.0 if y >= TWO_PI else y


@dataclass(frozen=True)
class AngleDistribution:
    """Law of each coupling: continuous uniform on [0, 2pi) or uniform on Z_k."""

    kind: str = "uniform"
    modulus: int = 0

    def __post_init__(self):
        if self.kind not in ("uniform", "discrete"):
            raise ValueError(f"unknown angle distribution {self.kind!r}")
        if self.kind == "discrete" and self.modulus < 1:
            raise ValueError("discrete distribution needs modulus >= 1")

    @classmethod
    def uniform(cls):
        return cls("uniform", 0)

    @classmethod
    def discrete(cls, k):
        return cls("discrete", int(k))

    @classmethod
    def parse(cls, text):
        """``"uniform"`` or ``"Z<k>"`` (e.g. ``"Z4"``)."""
        text = str(text).strip()
        if text.lower() in ("uniform", "continuous", "u"):
            return cls.uniform()
        if text[:1] in ("Z", "z") and text[1:].isdigit():
            return cls.discrete(int(text[1:]))
        raise ValueError(f"cannot parse angle distribution {text!r}")

    @property
    def is_discrete(self):
        return self.kind == "discrete"

    def support(self):
        if not self.is_discrete:
            raise ValueError("continuous distribution has no finite support")
        return TWO_PI * np.arange(self.modulus) / self.modulus

    def sample(self, rng, size):
        rng = as_generator(rng)
        if self.is_discrete:
            return TWO_PI * rng.integers(0, self.modulus, size=size) / self.modulus
        return rng.uniform(0.0, TWO_PI, size=size)

    def __str__(self):
        return f"Z{self.modulus}" if self.is_discrete else "uniform"


def term_multisets(Q, r):
    """Sorted multisets of size exactly ``r`` over ``range(Q)``, lexicographic."""
    return list(itertools.combinations_with_replacement(range(Q), r))


def basis_bits(Q):
    """(N, Q) array of occupation numbers; row n holds the bits of n."""
    n = np.arange(2**Q)
    return (n[:, None] >> np.arange(Q)[None, :]) & 1


def monomial_matrix(terms, Q):
    """(len(terms), N) 0/1 matrix: entry [t, n] = prod_{i in terms[t]} n_i."""
    bits = basis_bits(Q)
    out = np.ones((len(terms), 2**Q), dtype=np.int64)
    for t, S in enumerate(terms):
        for i in set(S):
            out[t] &= bits[:, i]
    return out


@dataclass(frozen=True)
class DiagonalHamiltonian:
    Q: int
    r: int
    terms: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.Q < 1 or self.r < 1:
            raise ValueError("need Q >= 1 and r >= 1")
        clean = {}
        for S, g in self.terms.items():
            S = tuple(sorted(int(i) for i in S))
            if not S or len(S) > self.r:
                raise ValueError(f"term {S} has locality outside 1..{self.r}")
            if S[0] < 0 or S[-1] >= self.Q:
                raise ValueError(f"term {S} has a qubit index outside 0..{self.Q - 1}")
            clean[S] = clean.get(S, 0) + g
        object.__setattr__(self, "terms", clean)

    @property
    def N(self):
        return 2**self.Q

    def eigenvalue(self, n):
        n = np.asarray(n)
        if n.shape != (self.Q,):
            raise ValueError(f"bitstring length {n.shape} does not match Q={self.Q}")
        total = 0.0
        for S, g in self.terms.items():
            if all(n[i] for i in S):
                total += float(g)
        return total

    def spectrum(self):
        """All N eigenvalues as floats, indexed by basis integer."""
        if not self.terms:
            return np.zeros(self.N)
        keys = list(self.terms)
        gam = np.array([float(self.terms[S]) for S in keys])
        return gam @ monomial_matrix(keys, self.Q)

    def exact_spectrum(self):
        """Eigenvalues as Fractions (coefficients converted exactly)."""
        out = []
        bits = basis_bits(self.Q)
        for n in range(self.N):
            tot = Fraction(0)
            for S, g in self.terms.items():
                if all(bits[n, i] for i in S):
                    tot += Fraction(g)
            out.append(tot)
        return out


def sample_G(Q, r, dist, seed):
    """One draw per multiset of size ``r``, consumed in lexicographic order."""
    if Q < 1 or not 1 <= r <= Q:
        raise ValueError("need Q >= 1 and 1 <= r <= Q")
    terms = term_multisets(Q, r)
    gammas = dist.sample(as_generator(seed), len(terms))
    return DiagonalHamiltonian(Q, r, dict(zip(terms, gammas.tolist())))


def n_terms(Q, r):
    return comb(Q + r - 1, r)


@dataclass(frozen=True)
class IsingForm:
    """G = sum_{i<j} h_ij Z_i Z_j + sum_i h_i Z_i + constant."""

    Q: int
    couplings: dict
    fields: tuple
    constant: float

    def energy(self, n):
        z = 1 - 2 * np.asarray(n)
        e = self.constant
        for (i, j), h in self.couplings.items():
            e += h * z[i] * z[j]
        for i, h in enumerate(self.fields):
            e += h * z[i]
        return float(e)

    def spectrum(self):
        z = 1 - 2 * basis_bits(self.Q)
        e = np.full(2**self.Q, float(self.constant))
        for (i, j), h in self.couplings.items():
            e += float(h) * z[:, i] * z[:, j]
        for i, h in enumerate(self.fields):
            e += float(h) * z[:, i]
        return e


def to_ising(G):
    """Rewrite a (at most) two-body G with Gamma_i Gamma_j = (1 - Z_i - Z_j + Z_i Z_j)/4.

    Every pair containing i feeds the field h_i, whichever side of i the
    partner sits on.
    """
    if G.r > 2:
        raise ValueError(f"Ising rewrite needs r <= 2, got r={G.r}")
    Q = G.Q
    couplings = {}
    fields = [0] * Q
    const = 0
    for S, g in G.terms.items():
        if len(S) == 1 or S[0] == S[1]:
            i = S[0]
            fields[i] -= g / 2
            const += g / 2
        else:
            i, j = S
            couplings[(i, j)] = couplings.get((i, j), 0) + g / 4
            fields[i] -= g / 4
            fields[j] -= g / 4
            const += g / 4
    return IsingForm(Q, couplings, tuple(fields), const)


def golomb_hamiltonians(Q):
    """(G1, G2): G1 = sum_k 2^k Gamma_k, G2 = (N G1^2 + G1)/(N+1), exact rationals.

    G1 has spectrum n; G2 has spectrum (N n^2 + n)/(N+1).
    """
    if Q < 1:
        raise ValueError("need Q >= 1")
    N = 2**Q
    g1 = {(k,): Fraction(2**k) for k in range(Q)}
    g2 = {}
    for k in range(Q):
        # n_k^2 = n_k: square terms fold into the one-body coefficient
        g2[(k, k)] = Fraction(N * 4**k + 2**k, N + 1)
        for l in range(k + 1, Q):
            g2[(k, l)] = Fraction(2 * N * 2 ** (k + l), N + 1)
    return DiagonalHamiltonian(Q, 1, g1), DiagonalHamiltonian(Q, 2, g2)


def write_hamiltonian(G, path):
    with open(path, "w") as fh:
        fh.write(f"Q {G.Q} r {G.r}\n")
        for S in sorted(G.terms):
            idx = " ".join(str(i + 1) for i in S)
            fh.write(f"{idx} {float(G.terms[S]):.17g}\n")


def read_hamiltonian(path):
    with open(path) as fh:
        head = fh.readline().split()
        if len(head) != 4 or head[0] != "Q" or head[2] != "r":
            raise ValueError(f"bad Hamiltonian header: {' '.join(head)!r}")
        Q, r = int(head[1]), int(head[3])
        terms = {}
        for line in fh:
            parts = line.split()
            if not parts:
                continue
            S = tuple(int(p) - 1 for p in parts[:-1])
            terms[S] = float(parts[-1])
    return DiagonalHamiltonian(Q, r, terms)
