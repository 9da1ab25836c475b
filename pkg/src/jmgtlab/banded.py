"""Symmetric banded matrices and their Cholesky factorizations (LAPACK pbtrf/pbtrs)."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import lapack

from .errors import FactorizationError

__all__ = ("BandedMatrix", "BandedFactorization", "factor", "solve")


class BandedMatrix:
    """
    Symmetric matrix in LAPACK upper-banded storage.

    ``ab[u + i - j, j] == A[i, j]`` for ``max(0, j - u) <= i <= j`` where
    ``u`` is the semi-bandwidth. Only the upper triangle is stored, so the
    matrix is symmetric by construction.
    """

    __slots__ = ("ab",)

    def __init__(self, ab):
        ab = np.asarray(ab, dtype=float)
        if ab.ndim != 2:
            raise ValueError("banded storage must be two-dimensional")
        self.ab = ab

    @classmethod
    def from_dense(cls, A, semi_bandwidth: int, atol: float = 0.0) -> "BandedMatrix":
        A = np.asarray(A, dtype=float)
        n = A.shape[0]
        if A.shape != (n, n):
            raise ValueError("matrix must be square")
        if not np.allclose(A, A.T, rtol=0.0, atol=atol):
            raise ValueError("matrix is not symmetric")
        outside = np.abs(np.subtract.outer(np.arange(n), np.arange(n))) > semi_bandwidth
        if np.any(A[outside] != 0.0):
            raise ValueError(f"matrix has entries outside semi-bandwidth {semi_bandwidth}")
        u = semi_bandwidth
        ab = np.zeros((u + 1, n))
        for d in range(u + 1):
            ab[u - d, d:] = np.diagonal(A, d)
        return cls(ab)

    @property
    def n(self) -> int:
        return self.ab.shape[1]

    @property
    def semi_bandwidth(self) -> int:
        return self.ab.shape[0] - 1

    @property
    def shape(self):
        return (self.n, self.n)

    def diagonal(self, d: int = 0) -> np.ndarray:
        u = self.semi_bandwidth
        return self.ab[u - abs(d), abs(d):]

    def to_dense(self) -> np.ndarray:
        u = self.semi_bandwidth
        A = np.zeros((self.n, self.n))
        for d in range(u + 1):
            band = self.ab[u - d, d:]
            A[np.arange(self.n - d), np.arange(d, self.n)] = band
            A[np.arange(d, self.n), np.arange(self.n - d)] = band
        return A

    def matvec(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        u = self.semi_bandwidth
        y = self.ab[u] * x
        for d in range(1, min(u, self.n - 1) + 1):
            band = self.ab[u - d, d:]
            y[:-d] += band * x[d:]
            y[d:] += band * x[:-d]
        return y

    __matmul__ = matvec

    def quadratic_form(self, x) -> float:
        x = np.asarray(x, dtype=float)
        return float(x @ self.matvec(x))

    def restrict(self, lo: int, hi: int) -> "BandedMatrix":
        """Principal submatrix on indices lo..hi-1."""
        u = self.semi_bandwidth
        ab = self.ab[:, lo:hi].copy()
        for d in range(1, u + 1):
            # first d columns of diagonal d reference rows before lo
            ab[u - d, :d] = 0.0
        return BandedMatrix(ab)

    def __add__(self, other: "BandedMatrix") -> "BandedMatrix":
        return BandedMatrix(self.ab + other.ab)

    def __mul__(self, s: float) -> "BandedMatrix":
        return BandedMatrix(self.ab * s)

    __rmul__ = __mul__

    def __repr__(self):
        return f"BandedMatrix(n={self.n}, semi_bandwidth={self.semi_bandwidth})"


def combine(*terms) -> BandedMatrix:
    """Linear combination of (coefficient, BandedMatrix) pairs without temporaries."""
    ab = np.zeros_like(terms[0][1].ab)
    for s, A in terms:
        ab += s * A.ab
    return BandedMatrix(ab)


@dataclass(frozen=True)
class BandedFactorization:
    """Upper Cholesky factor U with A = U^T U, in banded storage."""
    cb: np.ndarray

    @property
    def n(self) -> int:
        return self.cb.shape[1]


def factor(A: BandedMatrix) -> BandedFactorization:
    """
    Cholesky-factor a symmetric positive definite banded matrix.

    Raises
    ------
    FactorizationError
        If a pivot is not positive; ``pivot`` is the zero-based index.
    """
    if not np.all(np.isfinite(A.ab)):
        raise FactorizationError("matrix has non-finite entries", pivot=None)
    cb, info = lapack.dpbtrf(A.ab, lower=0)
    if info > 0:
        raise FactorizationError(
            f"non-positive pivot at index {info - 1}", pivot=info - 1)
    if info < 0:
        raise ValueError(f"dpbtrf: illegal argument {-info}")
    return BandedFactorization(cb)


def solve(F: BandedFactorization, rhs) -> np.ndarray:
    rhs = np.asarray(rhs, dtype=float)
    if rhs.shape[0] != F.n:
        raise ValueError(f"rhs has length {rhs.shape[0]}, expected {F.n}")
    x, info = lapack.dpbtrs(F.cb, rhs, lower=0)
    if info != 0:
        raise ValueError(f"dpbtrs: illegal argument {-info}")
    return x
