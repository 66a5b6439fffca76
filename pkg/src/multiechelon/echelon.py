"""One-echelon linear model ``y' = A y + b``: construction, trajectories,
equilibria with structure-specific solvers, and stability reporting."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from . import linalg
from .errors import SingularMatrixError, SolverError
from .netspec import EchelonSpec, validate_positivity_condition

log = logging.getLogger(__name__)

GENERAL = "general"
TWO_WAREHOUSE = "two_warehouse"
STAR = "star"
LINEAR_CHAIN = "linear_chain"


@dataclass(frozen=True, eq=False)
class LinearSystem:
    A: np.ndarray
    b: np.ndarray
    structure: str
    symmetric: bool
    spec: EchelonSpec

    @property
    def n(self) -> int:
        return self.b.size


@dataclass
class EquilibriumReport:
    levels: np.ndarray
    stable: bool
    gershgorin_bound: float
    positivity_guaranteed: bool
    method: str
    diagnostics: list[str] = field(default_factory=list)

    @property
    def total(self) -> float:
        return float(np.sum(self.levels))


@dataclass(frozen=True, eq=False)
class TrajectorySeries:
    """Samples ``(times[k], levels[k])``; ``levels`` has one row per time."""

    times: np.ndarray
    levels: np.ndarray

    def __iter__(self):
        return iter(zip(self.times, self.levels))

    def __len__(self):
        return self.times.size

    def at(self, t: float) -> np.ndarray:
        idx = np.flatnonzero(np.isclose(self.times, t, rtol=0, atol=1e-12))
        if idx.size == 0:
            raise KeyError(t)
        return self.levels[idx[0]]


def detect_structure(gamma: np.ndarray) -> str:
    n = gamma.shape[0]
    if n == 2:
        return TWO_WAREHOUSE
    if n < 2:
        return GENERAL
    links = (gamma > 0) | (gamma.T > 0)
    i, j = np.nonzero(links)
    if np.all(np.abs(i - j) == 1) or i.size == 0:
        return LINEAR_CHAIN
    if np.all((i == 0) | (j == 0)):
        return STAR
    return GENERAL


def build_system(spec: EchelonSpec) -> LinearSystem:
    """Assemble ``A`` and ``b`` for the echelon.

    Off-diagonal ``A[i, j]`` is the linear inflow coefficient of ``y_j`` into
    warehouse ``i``, i.e. ``gamma[j, i] / L_j``; for a symmetric rate matrix
    this is ``gamma[i, j] / L_j``. The diagonal is
    ``-(mu_i / L_i + theta_i + sum_j gamma[i, j] / L_i)``, so every column sums
    to ``-(mu_j / L_j + theta_j)``.
    """
    L, mu, theta, lam = spec.L, spec.mu, spec.theta, spec.lam
    gamma = spec.transshipment
    A = gamma.T / L[np.newaxis, :]
    np.fill_diagonal(A, -(mu / L + theta + gamma.sum(axis=1) / L))
    b = mu - lam
    symmetric = spec.symmetric and bool(np.all(L == L[0]))
    return LinearSystem(A, b, detect_structure(gamma), symmetric, spec)


def _dense_equilibrium(sys: LinearSystem) -> np.ndarray:
    return linalg.dense_solve(sys.A, -sys.b)


def _report(sys: LinearSystem, levels: np.ndarray, method: str, diagnostics=None) -> EquilibriumReport:
    bound = linalg.gershgorin(sys.A).bound
    return EquilibriumReport(
        levels=np.asarray(levels, dtype=float),
        stable=bound < 0,
        gershgorin_bound=bound,
        positivity_guaranteed=bool(np.all(validate_positivity_condition(sys.spec))),
        method=method,
        diagnostics=list(diagnostics or []),
    )


def equilibrium_two_warehouse(spec: EchelonSpec) -> EquilibriumReport:
    """Closed form ``y* = adj(-A) b / det(A)`` for two warehouses."""
    if spec.n != 2:
        raise ValueError(f"two-warehouse closed form needs n=2, got n={spec.n}")
    sys = build_system(spec)
    A, b = sys.A, sys.b
    det = A[0, 0] * A[1, 1] - A[0, 1] * A[1, 0]
    if not det > 0:
        raise SingularMatrixError(f"two-warehouse determinant is not positive ({det})")
    levels = np.array([-A[1, 1] * b[0] + A[0, 1] * b[1], A[1, 0] * b[0] - A[0, 0] * b[1]]) / det
    return _report(sys, levels, TWO_WAREHOUSE)


def star_factors(sys: LinearSystem) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Split a hub-and-spoke ``A`` into its diagonal and rank-2 factors.

    Returns ``(D, U, V)`` with ``A = diag(D) + U V^T``; warehouse 0 is the hub.
    ``U`` has columns ``(0, g_21, ..., g_n1)`` and ``e_1``; ``V`` has columns
    ``e_1 / L_1`` and ``(0, g_12 / L_2, ..., g_1n / L_n)``.
    """
    A = sys.A
    L1 = sys.spec.L[0]
    n = sys.n
    D = np.diag(A).copy()
    U = np.zeros((n, 2))
    V = np.zeros((n, 2))
    U[1:, 0] = A[1:, 0] * L1
    U[0, 1] = 1.0
    V[0, 0] = 1.0 / L1
    V[1:, 1] = A[0, 1:]
    return D, U, V


def equilibrium_star(spec: EchelonSpec) -> EquilibriumReport:
    sys = build_system(spec)
    gamma = spec.transshipment
    hub_only = np.ones_like(gamma, dtype=bool)
    hub_only[0, :] = hub_only[:, 0] = False
    if np.any(gamma[hub_only] != 0):
        raise ValueError("transshipment is not a star centred on warehouse 1")
    D, U, V = star_factors(sys)
    try:
        A_inv = linalg.smw_inverse(np.diag(1.0 / D), U, V)
        levels = -A_inv @ sys.b
        return _report(sys, levels, STAR)
    except SingularMatrixError as exc:
        log.info("star solve fell back to dense LU: %s", exc)
        return _report(sys, _dense_equilibrium(sys), "dense", [f"star fallback to dense: {exc}"])


def equilibrium_linear_chain(spec: EchelonSpec) -> EquilibriumReport:
    sys = build_system(spec)
    T = linalg.TridiagonalMatrix.from_dense(sys.A)
    if not np.allclose(T.to_dense(), sys.A, rtol=0, atol=0):
        raise ValueError("transshipment links are not restricted to adjacent warehouses")
    try:
        levels = linalg.tridiag_solve(T, -sys.b)
        return _report(sys, levels, LINEAR_CHAIN)
    except SingularMatrixError as exc:
        log.info("tridiagonal solve fell back to dense LU: %s", exc)
        return _report(sys, _dense_equilibrium(sys), "dense", [f"tridiagonal fallback to dense: {exc}"])


def equilibrium(sys: LinearSystem | EchelonSpec, method: str = "auto") -> EquilibriumReport:
    """Equilibrium ``y* = -A^{-1} b`` with the solver chosen from the structure tag.

    ``method="dense"`` forces LU with partial pivoting.
    """
    if isinstance(sys, EchelonSpec):
        sys = build_system(sys)
    if method not in ("auto", "dense"):
        raise ValueError(f"method must be 'auto' or 'dense', got {method!r}")
    if method == "auto":
        if sys.structure == TWO_WAREHOUSE:
            return equilibrium_two_warehouse(sys.spec)
        if sys.structure == STAR:
            return equilibrium_star(sys.spec)
        if sys.structure == LINEAR_CHAIN:
            return equilibrium_linear_chain(sys.spec)
    try:
        levels = _dense_equilibrium(sys)
    except SingularMatrixError as exc:
        raise SolverError(f"system matrix is numerically singular: {exc}") from None
    return _report(sys, levels, "dense")


def solve_trajectory(sys: LinearSystem | EchelonSpec, y0, times, method: str = "auto") -> TrajectorySeries:
    """Closed-form trajectory ``y(t) = e^{At} y0 + A^{-1}(e^{At} - I) b``.

    Since ``A^{-1}`` commutes with ``e^{At}``, the particular term equals
    ``(I - e^{At}) y*``, so one equilibrium solve serves every time point.
    """
    if isinstance(sys, EchelonSpec):
        sys = build_system(sys)
    y0 = np.asarray(y0, dtype=float)
    times = np.asarray(times, dtype=float).ravel()
    if y0.shape != (sys.n,):
        raise ValueError(f"y0 must have length {sys.n}")
    if times.size and (times[0] < 0 or np.any(np.diff(times) <= 0)):
        raise ValueError("times must be nonnegative and strictly increasing")
    y_star = equilibrium(sys, method).levels
    offset = y0 - y_star
    use_closed_2x2 = sys.n == 2 and method == "auto"
    out = np.empty((times.size, sys.n))
    for k, t in enumerate(times):
        if t == 0.0:
            out[k] = y0
            continue
        E = linalg.expm_2x2_closed(sys.A, t) if use_closed_2x2 else linalg.expm(sys.A, t)
        out[k] = y_star + E @ offset
    return TrajectorySeries(times, out)


def linear_rhs(sys: LinearSystem):
    """``f(t, y) = A y + b`` for numerical integrators."""
    A, b = sys.A, sys.b
    return lambda t, y: A @ y + b
