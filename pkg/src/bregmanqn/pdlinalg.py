"""Dense symmetric / positive definite matrix primitives.

Everything downstream (divergences, updates, projections) manipulates PD
matrices through a lower-triangular Cholesky factor.  The factor is the
source of truth; full matrices are reconstructed on demand.  Storage is
dense and real -- the intended scale is desk-sized (n up to a few hundred).
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import solve_triangular

from .errors import DowndateBreaksPD, InvalidParameter, NotPositiveDefinite

# Relative pivot tolerance: a factorization pivot at or below this fraction
# of the largest diagonal entry is treated as a PD failure.
PIVOT_RTOL = 1e-13


class SymMatrix:
    """Real symmetric matrix; construction symmetrizes exactly."""

    __slots__ = ("n", "entries")

    def __init__(self, entries):
        a = np.asarray(entries, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError(f"expected a square matrix, got shape {a.shape}")
        self.n = a.shape[0]
        self.entries = 0.5 * (a + a.T)

    def __repr__(self):
        return f"SymMatrix(n={self.n})"


def as_symmetric(a) -> np.ndarray:
    """Coerce to an exactly symmetric ndarray."""
    if isinstance(a, SymMatrix):
        return a.entries
    if isinstance(a, PDMatrix):
        return a.matrix
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise InvalidParameter(f"expected a square matrix, got shape {a.shape}")
    return 0.5 * (a + a.T)


class CholeskyFactor:
    """Lower-triangular factor L with strictly positive diagonal, A = L L'."""

    __slots__ = ("n", "L")

    def __init__(self, L):
        L = np.asarray(L, dtype=float)
        self.n = L.shape[0]
        self.L = L

    def log_det(self) -> float:
        """log det of the factored matrix, 2 * sum(log diag L)."""
        return 2.0 * float(np.sum(np.log(np.diag(self.L))))

    def matrix(self) -> np.ndarray:
        return self.L @ self.L.T

    def copy(self) -> "CholeskyFactor":
        return CholeskyFactor(self.L.copy())

    def __repr__(self):
        return f"CholeskyFactor(n={self.n})"


def cholesky_factorize(a) -> CholeskyFactor:
    """Factor a symmetric matrix as L L'.

    Raises NotPositiveDefinite when a pivot falls at or below
    PIVOT_RTOL times the largest diagonal entry.
    """
    a = as_symmetric(a)
    n = a.shape[0]
    diag = np.diag(a)
    scale = float(np.max(diag)) if n else 0.0
    if n == 0 or scale <= 0.0 or not np.isfinite(scale):
        raise NotPositiveDefinite("matrix has no positive diagonal entry")
    try:
        L = np.linalg.cholesky(a)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(str(exc)) from exc
    # LAPACK succeeds for any strictly positive pivot sequence; enforce the
    # relative tolerance so near-singular inputs are rejected uniformly.
    pivots = np.diag(L) ** 2
    if np.min(pivots) <= PIVOT_RTOL * scale:
        raise NotPositiveDefinite(
            f"pivot {np.min(pivots):.3e} below tolerance {PIVOT_RTOL * scale:.3e}"
        )
    return CholeskyFactor(L)


def rank_one_update(factor: CholeskyFactor, v, sigma: int) -> CholeskyFactor:
    """Factor of F F' + sigma * v v' for sigma in {+1, -1}.

    Update uses Givens-style rotations, downdate hyperbolic rotations; both
    run in O(n^2).  A downdate that would drive a pivot at or below the
    tolerance raises DowndateBreaksPD.
    """
    if sigma not in (+1, -1):
        raise ValueError("sigma must be +1 or -1")
    L = factor.L.copy()
    x = np.asarray(v, dtype=float).copy()
    if x.shape != (factor.n,):
        raise ValueError(f"vector shape {x.shape} does not match n={factor.n}")
    n = factor.n
    if sigma == -1:
        scale = float(np.max(np.diag(L)) ** 2)
    for k in range(n):
        lkk = L[k, k]
        r_sq = lkk * lkk + sigma * x[k] * x[k]
        if sigma == -1 and r_sq <= PIVOT_RTOL * scale:
            raise DowndateBreaksPD(
                f"downdate pivot {r_sq:.3e} at column {k} breaks positive definiteness"
            )
        r = np.sqrt(r_sq)
        c = r / lkk
        s = x[k] / lkk
        L[k, k] = r
        if k + 1 < n:
            L[k + 1 :, k] = (L[k + 1 :, k] + sigma * s * x[k + 1 :]) / c
            x[k + 1 :] = c * x[k + 1 :] - s * L[k + 1 :, k]
    return CholeskyFactor(L)


def log_det(factor: CholeskyFactor) -> float:
    return factor.log_det()


def solve(factor: CholeskyFactor, b) -> np.ndarray:
    """Solve (L L') x = b for one right-hand side or a block of them."""
    b = np.asarray(b, dtype=float)
    y = solve_triangular(factor.L, b, lower=True)
    return solve_triangular(factor.L, y, lower=True, trans="T")


class PDMatrix:
    """Positive definite matrix held as a Cholesky factor plus cached log-det."""

    __slots__ = ("n", "factor", "logdet", "_matrix")

    def __init__(self, factor: CholeskyFactor):
        self.n = factor.n
        self.factor = factor
        self.logdet = factor.log_det()
        self._matrix = None

    @classmethod
    def from_matrix(cls, a) -> "PDMatrix":
        return cls(cholesky_factorize(a))

    @classmethod
    def from_factor(cls, L) -> "PDMatrix":
        return cls(CholeskyFactor(np.asarray(L, dtype=float)))

    @classmethod
    def identity(cls, n: int) -> "PDMatrix":
        return cls(CholeskyFactor(np.eye(n)))

    @property
    def matrix(self) -> np.ndarray:
        if self._matrix is None:
            self._matrix = self.factor.matrix()
        return self._matrix

    def det(self) -> float:
        return float(np.exp(self.logdet))

    def solve(self, b) -> np.ndarray:
        return solve(self.factor, b)

    def inv(self) -> np.ndarray:
        return solve(self.factor, np.eye(self.n))

    def matvec(self, x) -> np.ndarray:
        L = self.factor.L
        return L @ (L.T @ np.asarray(x, dtype=float))

    def __repr__(self):
        return f"PDMatrix(n={self.n}, logdet={self.logdet:.6g})"
