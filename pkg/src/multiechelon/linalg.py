"""Dense and structured kernels: matrix exponential, tridiagonal solves and
inverses, low-rank inverse updates and Gershgorin bounds."""

from __future__ import annotations

import cmath
from dataclasses import dataclass

import numpy as np

from .errors import SingularMatrixError, SolverError, TridiagonalBreakdown

__all__ = [
    "TridiagonalMatrix",
    "GershgorinReport",
    "expm",
    "expm_2x2_closed",
    "tridiag_solve",
    "tridiag_inverse",
    "smw_inverse",
    "gershgorin",
    "dense_solve",
    "dense_inverse",
]

# Diagonal Pade [8/8] numerator coefficients c_k = (2q-k)! q! / ((2q)! k! (q-k)!).
_PADE_ORDER = 8
_PADE_COEFFS = np.empty(_PADE_ORDER + 1)
_PADE_COEFFS[0] = 1.0
for _k in range(1, _PADE_ORDER + 1):
    _PADE_COEFFS[_k] = _PADE_COEFFS[_k - 1] * (_PADE_ORDER - _k + 1) / (_k * (2 * _PADE_ORDER - _k + 1))
_SCALED_NORM = 0.5


def _as_square(A) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] < 1:
        raise ValueError(f"expected a non-empty square matrix, got shape {A.shape}")
    return A


def expm(A, t: float = 1.0) -> np.ndarray:
    """Return ``exp(A t)`` by scaling and squaring with a [8/8] Pade approximant.

    The argument is halved until its 1-norm is at most 0.5, the Pade
    approximant is evaluated there and the result squared back up.
    """
    A = _as_square(A)
    X = A * float(t)
    if not np.all(np.isfinite(X)):
        raise ValueError("expm: matrix entries must be finite")
    n = X.shape[0]
    norm = np.abs(X).sum(axis=0).max()
    squarings = 0
    if norm > _SCALED_NORM:
        squarings = int(np.ceil(np.log2(norm / _SCALED_NORM)))
        X = X / 2.0**squarings

    # even/odd split: N = U + V, D = V - U with U odd powers, V even powers
    ident = np.eye(n)
    X2 = X @ X
    even = _PADE_COEFFS[0] * ident
    odd = _PADE_COEFFS[1] * ident
    power = ident
    for k in range(2, _PADE_ORDER + 1, 2):
        power = power @ X2
        even = even + _PADE_COEFFS[k] * power
        if k + 1 <= _PADE_ORDER:
            odd = odd + _PADE_COEFFS[k + 1] * power
    odd = X @ odd
    R = np.linalg.solve(even - odd, even + odd)
    for _ in range(squarings):
        R = R @ R
    if not np.all(np.isfinite(R)):
        raise OverflowError("expm: result exceeds the floating-point range")
    return R


def expm_2x2_closed(A, t: float) -> np.ndarray:
    """Closed-form ``exp(A t)`` for a 2x2 matrix from its two eigenvalues.

    Uses ``e^{h1 t} I + (e^{h1 t} - e^{h2 t}) / (h1 - h2) (A - h1 I)`` and the
    limit ``e^{h t} (I + t (A - h I))`` when the eigenvalues coincide.
    """
    A = _as_square(A)
    if A.shape != (2, 2):
        raise ValueError("expm_2x2_closed needs a 2x2 matrix")
    t = float(t)
    ident = np.eye(2)
    if t == 0.0:
        return ident
    trace = A[0, 0] + A[1, 1]
    det = A[0, 0] * A[1, 1] - A[0, 1] * A[1, 0]
    disc = cmath.sqrt(trace * trace - 4.0 * det)
    eta1 = (trace + disc) / 2.0
    eta2 = (trace - disc) / 2.0
    if abs(eta1 - eta2) < 1e-9 * max(1.0, abs(eta1)):
        eta = trace / 2.0
        return np.exp(eta * t) * (ident + t * (A - eta * ident))
    e1, e2 = cmath.exp(eta1 * t), cmath.exp(eta2 * t)
    out = e1 * ident + (e1 - e2) / (eta1 - eta2) * (A - eta1 * ident)
    return np.real(out)


@dataclass(frozen=True)
class TridiagonalMatrix:
    """Three diagonals of a tridiagonal matrix; ``lower[i]`` is entry (i+1, i)."""

    lower: np.ndarray
    diag: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lower, diag, upper = (np.atleast_1d(np.asarray(v, dtype=float)) for v in (self.lower, self.diag, self.upper))
        n = diag.size
        if n < 1 or lower.size != n - 1 or upper.size != n - 1:
            raise ValueError(f"inconsistent diagonal lengths {lower.size}, {diag.size}, {upper.size}")
        if not (np.all(np.isfinite(lower)) and np.all(np.isfinite(diag)) and np.all(np.isfinite(upper))):
            raise ValueError("tridiagonal entries must be finite")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "diag", diag)
        object.__setattr__(self, "upper", upper)

    @property
    def n(self) -> int:
        return self.diag.size

    @classmethod
    def from_dense(cls, M) -> "TridiagonalMatrix":
        M = _as_square(M)
        return cls(np.diag(M, -1).copy(), np.diag(M).copy(), np.diag(M, 1).copy())

    def to_dense(self) -> np.ndarray:
        return np.diag(self.diag) + np.diag(self.lower, -1) + np.diag(self.upper, 1)

    def matvec(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        y = self.diag * x
        y[:-1] += self.upper * x[1:]
        y[1:] += self.lower * x[:-1]
        return y

    def norm_inf(self) -> float:
        row = np.abs(self.diag).copy()
        row[:-1] += np.abs(self.upper)
        row[1:] += np.abs(self.lower)
        return float(row.max())


def tridiag_solve(T: TridiagonalMatrix, rhs) -> np.ndarray:
    """Thomas algorithm (no pivoting).

    Raises TridiagonalBreakdown when a pivot is smaller than 1e-14 times the
    scale of its row.
    """
    d = np.asarray(rhs, dtype=float)
    n = T.n
    if d.shape != (n,):
        raise ValueError(f"rhs must have shape ({n},), got {d.shape}")
    a, b, c = T.lower, T.diag, T.upper
    scale = np.abs(b).copy()
    scale[:-1] += np.abs(c)
    scale[1:] += np.abs(a)

    cp = np.empty(max(n - 1, 0))
    dp = np.empty(n)
    pivot = b[0]
    if abs(pivot) <= 1e-14 * scale[0] or scale[0] == 0.0:
        raise TridiagonalBreakdown("zero pivot in row 0")
    if n > 1:
        cp[0] = c[0] / pivot
    dp[0] = d[0] / pivot
    for i in range(1, n):
        pivot = b[i] - a[i - 1] * cp[i - 1]
        if abs(pivot) <= 1e-14 * scale[i] or scale[i] == 0.0:
            raise TridiagonalBreakdown(f"zero pivot in row {i}")
        if i < n - 1:
            cp[i] = c[i] / pivot
        dp[i] = (d[i] - a[i - 1] * dp[i - 1]) / pivot
    x = dp
    for i in range(n - 2, -1, -1):
        x[i] -= cp[i] * x[i + 1]
    return x


def tridiag_inverse(T: TridiagonalMatrix) -> np.ndarray:
    """Explicit inverse from the two-sided continuant recurrences.

    With ``theta_i`` the leading and ``phi_i`` the trailing principal minors,
    entry (i, j) is ``(-1)^{i+j} c_i..c_{j-1} theta_{i-1} phi_{j+1} / theta_n``
    for i <= j and the mirror expression with the sub-diagonal for i > j.
    """
    n = T.n
    a, b, c = T.lower, T.diag, T.upper
    theta = np.empty(n + 1)
    theta[0] = 1.0
    theta[1] = b[0]
    for i in range(2, n + 1):
        theta[i] = b[i - 1] * theta[i - 1] - a[i - 2] * c[i - 2] * theta[i - 2]
    phi = np.empty(n + 2)
    phi[n + 1] = 1.0
    phi[n] = b[n - 1]
    for i in range(n - 1, 0, -1):
        phi[i] = b[i - 1] * phi[i + 1] - c[i - 1] * a[i - 1] * phi[i + 2]
    if not (np.all(np.isfinite(theta)) and np.all(np.isfinite(phi))):
        raise TridiagonalBreakdown("continuant overflow")
    det = theta[n]
    if det == 0.0 or abs(det) < 1e-300:
        raise TridiagonalBreakdown("zero continuant (matrix singular)")

    inv = np.empty((n, n))
    for i in range(1, n + 1):
        inv[i - 1, i - 1] = theta[i - 1] * phi[i + 1] / det
        prod = 1.0
        for j in range(i + 1, n + 1):
            prod *= -c[j - 2]
            inv[i - 1, j - 1] = prod * theta[i - 1] * phi[j + 1] / det
        prod = 1.0
        for j in range(i - 1, 0, -1):
            prod *= -a[j - 1]
            inv[i - 1, j - 1] = prod * theta[j - 1] * phi[i + 1] / det
    if not np.all(np.isfinite(inv)):
        raise TridiagonalBreakdown("non-finite entries in the inverse")
    return inv


def smw_inverse(M_inv, U, V) -> np.ndarray:
    """Inverse of ``M + U V^T`` from ``M^{-1}`` and n-by-l factors."""
    M_inv = _as_square(M_inv)
    U = np.atleast_2d(np.asarray(U, dtype=float))
    V = np.atleast_2d(np.asarray(V, dtype=float))
    n = M_inv.shape[0]
    if U.shape[0] != n and U.shape[1] == n:
        U, V = U.T, V.T
    if U.shape != V.shape or U.shape[0] != n:
        raise ValueError(f"factor shapes {U.shape}, {V.shape} do not match a {n}x{n} matrix")
    MU = M_inv @ U
    VtM = V.T @ M_inv
    inner = np.eye(U.shape[1]) + V.T @ MU
    try:
        # cond-based check: numpy only raises on exact singularity
        if np.linalg.cond(inner) > 1e14:
            raise np.linalg.LinAlgError
        correction = np.linalg.solve(inner, VtM)
    except np.linalg.LinAlgError:
        raise SingularMatrixError("Sherman-Morrison-Woodbury inner matrix is singular") from None
    return M_inv - MU @ correction


@dataclass(frozen=True)
class GershgorinReport:
    centers: np.ndarray
    radii: np.ndarray

    @property
    def bound(self) -> float:
        """Upper bound on the real part of every eigenvalue."""
        return float(np.max(self.centers + self.radii))

    @property
    def lower(self) -> float:
        return float(np.min(self.centers - self.radii))

    def intervals(self) -> list[tuple[float, float]]:
        return [(float(c - r), float(c + r)) for c, r in zip(self.centers, self.radii)]


def gershgorin(A) -> GershgorinReport:
    """Column discs of ``A`` (equivalently the row discs of its transpose)."""
    A = _as_square(A)
    centers = np.diag(A).copy()
    radii = np.abs(A).sum(axis=0) - np.abs(centers)
    return GershgorinReport(centers, radii)


def dense_solve(A, b) -> np.ndarray:
    """LU solve with partial pivoting; raises SingularMatrixError."""
    A = _as_square(A)
    try:
        x = np.linalg.solve(A, np.asarray(b, dtype=float))
    except np.linalg.LinAlgError:
        raise SingularMatrixError("matrix is singular") from None
    if not np.all(np.isfinite(x)):
        raise SolverError("dense solve produced non-finite values")
    return x


def dense_inverse(A) -> np.ndarray:
    A = _as_square(A)
    try:
        return np.linalg.inv(A)
    except np.linalg.LinAlgError:
        raise SingularMatrixError("matrix is singular") from None
