"""Hutchinson-style trace estimation and identity-resolution diagnostics."""

from dataclasses import dataclass

import numpy as np

from .rng import as_generator

# Heatmap endpoints: |Pi_ij| = 0 -> dark blue, |Pi_ij| = 1 -> yellow.
LOW_RGB = np.array([0, 0, 139], dtype=float)
HIGH_RGB = np.array([255, 255, 0], dtype=float)


def _check_square(A):
    A = np.asarray(A)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {A.shape}")
    N = A.shape[0]
    if N < 2 or N & (N - 1):
        raise ValueError(f"matrix dimension {N} is not a power of two")
    return A


@dataclass
class TraceEstimate:
    mean: complex
    empirical_variance: float
    K: int
    chebyshev_epsilon: float
    target: complex
    frobenius_scale: float

    @property
    def error(self):
        return abs(self.mean - self.target)

    @property
    def chebyshev_radius(self):
        """Deviation bound (1/N)||A||_F * eps, holding with probability >= 1 - delta."""
        return self.frobenius_scale * self.chebyshev_epsilon


def quadratic_forms(A, states):
    """<chi_k|A|chi_k> for every row of a (K, N) batch."""
    return np.einsum("ki,ij,kj->k", np.conj(states), A, states)


def estimate_trace(A, sampler, K, seed, delta=0.05):
    """Estimate Tr[A]/N from K states drawn by ``sampler(K, rng)``.

    Chebyshev with variance <= ||A||_F^2 / N^2 gives
    |mean - Tr[A]/N| <= (1/N)||A||_F * eps with probability >= 1 - delta,
    eps = 1/sqrt(delta K).
    """
    A = _check_square(A)
    if K < 1:
        raise ValueError("need K >= 1")
    N = A.shape[0]
    states = np.asarray(sampler(K, as_generator(seed)))
    if states.shape != (K, N):
        raise ValueError(f"sampler returned shape {states.shape}, expected {(K, N)}")
    vals = quadratic_forms(A, states)
    mean = vals.mean()
    var = float(np.mean(np.abs(vals - mean) ** 2))
    return TraceEstimate(
        mean=complex(mean),
        empirical_variance=var,
        K=K,
        chebyshev_epsilon=1.0 / np.sqrt(delta * K),
        target=complex(np.trace(A) / N),
        frobenius_scale=float(np.linalg.norm(A, "fro") / N),
    )


def analytic_variance(A):
    """(variance, Frobenius bound) = ((1/N^2) sum_{m != n} |A_mn|^2, ||A||_F^2 / N^2)."""
    A = _check_square(A)
    N = A.shape[0]
    sq = np.abs(A) ** 2
    off = float(sq.sum() - np.trace(sq))
    return off / N**2, float(sq.sum()) / N**2


def ensemble_statistics(A, states, weights=None):
    """Exact mean and variance of <chi|A|chi> over a weighted finite ensemble."""
    vals = quadratic_forms(np.asarray(A), np.asarray(states))
    if weights is None:
        weights = np.full(vals.size, 1.0 / vals.size)
    mean = np.dot(weights, vals)
    var = float(np.dot(weights, np.abs(vals - mean) ** 2))
    return complex(mean), var


def random_hermitian(N, seed):
    """GUE-like matrix: symmetrized complex Gaussian entries."""
    rng = as_generator(seed)
    X = rng.normal(size=(N, N)) + 1j * rng.normal(size=(N, N))
    return (X + X.conj().T) / 2


@dataclass
class IdentityResolution:
    Pi: np.ndarray
    K: int

    @property
    def N(self):
        return self.Pi.shape[0]

    def offdiag(self):
        return self.Pi[~np.eye(self.N, dtype=bool)]

    def offdiag_rms(self):
        return float(np.sqrt(np.mean(np.abs(self.offdiag()) ** 2)))

    def offdiag_max(self):
        return float(np.abs(self.offdiag()).max())

    def frobenius_error(self):
        return float(np.linalg.norm(self.Pi - np.eye(self.N), "fro"))


def identity_resolution(states):
    """Pi = (N/K) sum_k |chi_k><chi_k| from a (K, N) batch."""
    states = np.asarray(states)
    K, N = states.shape
    Pi = (N / K) * (states.T @ states.conj())
    return IdentityResolution(Pi, K)


def heatmap_pixels(P):
    """(N, N, 3) uint8 image; linear colour map on clamp(|P_ij|, 0, 1), rounded half-to-even."""
    M = P.Pi if isinstance(P, IdentityResolution) else np.asarray(P)
    t = np.clip(np.abs(M), 0.0, 1.0)[..., None]
    rgb = LOW_RGB + t * (HIGH_RGB - LOW_RGB)
    return np.rint(rgb).astype(np.uint8)


def heatmap(P, path):
    """Binary PPM (P6), one pixel per matrix entry."""
    px = heatmap_pixels(P)
    h, w, _ = px.shape
    with open(path, "wb") as fh:
        fh.write(f"P6\n{w} {h}\n255\n".encode("ascii"))
        fh.write(px.tobytes())


def read_ppm(path):
    with open(path, "rb") as fh:
        data = fh.read()
    # header is four whitespace-separated tokens; exactly one whitespace byte precedes the pixels
    fields, pos = [], 0
    while len(fields) < 4:
        while data[pos : pos + 1].isspace():
            pos += 1
        end = pos
        while end < len(data) and not data[end : end + 1].isspace():
            end += 1
        fields.append(data[pos:end])
        pos = end
    if fields[0] != b"P6":
        raise ValueError("not a binary PPM")
    w, h, maxval = (int(f) for f in fields[1:])
    if maxval != 255:
        raise ValueError("only 8-bit PPM supported")
    pixels = data[pos + 1 : pos + 1 + w * h * 3]
    return np.frombuffer(pixels, dtype=np.uint8).reshape(h, w, 3)


def write_matrix(A, path):
    A = np.asarray(A)
    with open(path, "w") as fh:
        fh.write(f"N {A.shape[0]}\n")
        for i, j in zip(*np.nonzero(A)):
            z = A[i, j]
            fh.write(f"{i} {j} {z.real:.17g} {z.imag:.17g}\n")


def read_matrix(path):
    with open(path) as fh:
        head = fh.readline().split()
        if len(head) != 2 or head[0] != "N":
            raise ValueError(f"bad matrix header {' '.join(head)!r}")
        N = int(head[1])
        A = np.zeros((N, N), dtype=complex)
        for line in fh:
            parts = line.split()
            if not parts:
                continue
            i, j = int(parts[0]), int(parts[1])
            A[i, j] += float(parts[2]) + 1j * float(parts[3])
    return A
