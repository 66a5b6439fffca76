"""Nonlinear m-echelon chain: residual, tridiagonal Jacobian, Newton solver,
stability conditions, Kantorovich certificate and forward simulation.

Echelon 1 receives an external supply ``mu_1 (C_1 - x_1) / C_1``; echelon
``i > 1`` is fed by echelon ``i - 1`` at ``mu_i (x_{i-1}/C_{i-1}) (C_i - x_i)/C_i``;
the bottom echelon serves the constant demand ``lambda_c``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import linalg, oracle
from .echelon import TrajectorySeries
from .errors import SingularMatrixError, SolverError
from .netspec import ChainSpec

log = logging.getLogger(__name__)

DEFAULT_TOL = 1e-10
DEFAULT_MAX_ITER = 100


def chain_rhs(spec: ChainSpec, x) -> np.ndarray:
    """``dx/dt`` (equivalently the equilibrium residual ``F(x)``)."""
    x = np.asarray(x, dtype=float)
    C, mu, theta = spec.C, spec.mu, spec.theta
    m = spec.m
    if x.shape != (m,):
        raise ValueError(f"state must have length {m}")
    f = -theta * x
    f[0] += mu[0] - (mu[0] / C[0] + mu[1] / C[0]) * x[0] + mu[1] / (C[0] * C[1]) * x[0] * x[1]
    for i in range(1, m - 1):
        f[i] += (
            mu[i] / C[i - 1] * x[i - 1]
            - mu[i + 1] / C[i] * x[i]
            - mu[i] / (C[i - 1] * C[i]) * x[i - 1] * x[i]
            + mu[i + 1] / (C[i] * C[i + 1]) * x[i] * x[i + 1]
        )
    f[m - 1] += -spec.terminal_demand + mu[m - 1] / C[m - 2] * x[m - 2] - mu[m - 1] / (C[m - 2] * C[m - 1]) * x[m - 2] * x[m - 1]
    return f


def chain_jacobian(spec: ChainSpec, x) -> linalg.TridiagonalMatrix:
    x = np.asarray(x, dtype=float)
    C, mu, theta = spec.C, spec.mu, spec.theta
    m = spec.m
    if x.shape != (m,):
        raise ValueError(f"state must have length {m}")
    # coupling[i] = mu_{i+1} / (C_i C_{i+1}) for the link between echelons i and i+1 (0-based)
    coupling = mu[1:] / (C[:-1] * C[1:])
    diag = -theta.copy()
    diag[0] -= mu[0] / C[0]
    diag[:-1] -= mu[1:] / C[:-1]
    diag[:-1] += coupling * x[1:]
    diag[1:] -= coupling * x[:-1]
    upper = coupling * x[:-1]
    lower = mu[1:] / C[:-1] - coupling * x[1:]
    return linalg.TridiagonalMatrix(lower, diag, upper)


@dataclass
class NewtonTrace:
    iterates: list[np.ndarray] = field(default_factory=list)
    residual_norms: list[float] = field(default_factory=list)
    converged: bool = False
    within_capacity: bool | None = None
    diagnostics: list[str] = field(default_factory=list)

    @property
    def iterations(self) -> int:
        return max(len(self.iterates) - 1, 0)


def _newton_step(spec: ChainSpec, x: np.ndarray, f: np.ndarray, trace: NewtonTrace) -> np.ndarray:
    J = chain_jacobian(spec, x)
    try:
        return linalg.tridiag_solve(J, f)
    except SingularMatrixError as exc:
        trace.diagnostics.append(f"iteration {trace.iterations}: tridiagonal fallback to dense ({exc})")
        try:
            return linalg.dense_solve(J.to_dense(), f)
        except SingularMatrixError:
            raise SingularMatrixError(f"Jacobian is singular at iterate {trace.iterations}") from None


def newton_solve(
    spec: ChainSpec,
    x0=None,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    damped: bool = False,
) -> tuple[np.ndarray | None, NewtonTrace]:
    """Plain Newton iteration ``x <- x - J(x)^{-1} F(x)`` until ``||F||_2 <= tol``.

    Starts from the zero vector by default. Iterates are not projected onto
    ``[0, C]``; ``trace.within_capacity`` reports where the solution landed.
    With ``damped=True`` the step is halved (up to 30 times) until the
    residual norm decreases. Returns ``(None, trace)`` if ``max_iter`` is hit.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    x = np.zeros(spec.m) if x0 is None else np.array(x0, dtype=float)
    if x.shape != (spec.m,):
        raise ValueError(f"x0 must have length {spec.m}")
    trace = NewtonTrace()
    f = chain_rhs(spec, x)
    norm = float(np.linalg.norm(f))
    trace.iterates.append(x.copy())
    trace.residual_norms.append(norm)
    while norm > tol:
        if trace.iterations >= max_iter:
            log.info("Newton did not converge in %d iterations (|F|=%.3e)", max_iter, norm)
            return None, trace
        step = _newton_step(spec, x, f, trace)
        x_new = x - step
        if damped:
            scale = 1.0
            for _ in range(30):
                if np.linalg.norm(chain_rhs(spec, x_new)) < norm:
                    break
                scale /= 2
                x_new = x - scale * step
        if not np.all(np.isfinite(x_new)):
            raise SolverError(f"Newton iterate became non-finite at iteration {trace.iterations + 1}")
        x = x_new
        f = chain_rhs(spec, x)
        norm = float(np.linalg.norm(f))
        trace.iterates.append(x.copy())
        trace.residual_norms.append(norm)
    trace.converged = True
    trace.within_capacity = bool(np.all(x >= 0) and np.all(x <= spec.C))
    return x, trace


@dataclass
class KantorovichCertificate:
    applicable: bool
    lipschitz: float
    residual_norm: float
    jacobian_inverse_bound: float
    ratio: float
    satisfied: bool

    THRESHOLD = 1.0 / 16.0


@dataclass
class StabilityCertificate:
    flags: tuple[bool, ...]
    kantorovich: KantorovichCertificate | None = None
    note: str = "sufficient condition only; failure does not imply instability"

    @property
    def satisfied(self) -> bool:
        return all(self.flags)


def stability_condition(spec: ChainSpec) -> StabilityCertificate:
    """Evaluate the m state-independent inequalities guaranteeing a stable equilibrium.

    Flag 0: ``mu_2/C_1 < mu_1/C_1 + theta_1``; interior flag i:
    ``mu_i/C_{i-1} + mu_{i+1}/C_{i+1} < theta_i``; last flag:
    ``mu_m/C_{m-1} < theta_m``.
    """
    C, mu, theta = spec.C, spec.mu, spec.theta
    m = spec.m
    flags = [bool(mu[1] / C[0] < mu[0] / C[0] + theta[0])]
    for i in range(1, m - 1):
        flags.append(bool(mu[i] / C[i - 1] + mu[i + 1] / C[i + 1] < theta[i]))
    flags.append(bool(mu[m - 1] / C[m - 2] < theta[m - 1]))
    return StabilityCertificate(tuple(flags))


def dominance_margins(spec: ChainSpec) -> np.ndarray:
    """Row diagonal-dominance margins of the Jacobian at the origin."""
    C, mu, theta = spec.C, spec.mu, spec.theta
    m = spec.m
    margins = np.empty(m)
    margins[0] = mu[0] / C[0] + theta[0] + mu[1] / C[0]
    for i in range(1, m - 1):
        margins[i] = theta[i] + mu[i + 1] / C[i] - mu[i] / C[i - 1]
    margins[m - 1] = theta[m - 1] - mu[m - 1] / C[m - 2]
    return margins


def kantorovich_certificate(spec: ChainSpec) -> StabilityCertificate:
    """Newton-convergence certificate for the zero initial guess.

    Combines ``M^2 = 4 sum_{i>=2} (mu_i / (C_{i-1} C_i))^2``,
    ``|F(0)|^2 = mu_1^2 + lambda_c^2`` and
    ``||DF(0)^{-1}|| <= sqrt(m) / min(margins)`` into
    ``m^2 |F(0)|^2 sum(...) / min(margins)^4 <= 1/16``. Only applicable when
    the stability inequalities hold (they make ``DF(0)`` diagonally dominant).
    """
    cert = stability_condition(spec)
    C, mu = spec.C, spec.mu
    m = spec.m
    coupling_sq = float(np.sum((mu[1:] / (C[:-1] * C[1:])) ** 2))
    lipschitz = 2.0 * math.sqrt(coupling_sq)
    residual = math.hypot(mu[0], spec.terminal_demand)
    if not cert.satisfied:
        cert.kantorovich = KantorovichCertificate(False, lipschitz, residual, math.nan, math.nan, False)
        return cert
    margin = float(dominance_margins(spec).min())
    inv_bound = math.sqrt(m) / margin
    ratio = m * m * residual**2 * coupling_sq / margin**4
    cert.kantorovich = KantorovichCertificate(
        True, lipschitz, residual, inv_bound, ratio, bool(ratio <= KantorovichCertificate.THRESHOLD)
    )
    return cert


def jacobian_gershgorin_bound(spec: ChainSpec, x) -> float:
    """Row-disc Gershgorin bound on eigenvalue real parts of the Jacobian at ``x``."""
    return linalg.gershgorin(chain_jacobian(spec, x).to_dense().T).bound


def simulate_chain(spec: ChainSpec, x0, times, step: float = oracle.DEFAULT_STEP) -> TrajectorySeries:
    """Fixed-step RK4 integration of the chain dynamics, sampled at ``times``."""
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (spec.m,):
        raise ValueError(f"x0 must have length {spec.m}")
    return oracle.rk4_sample(lambda t, x: chain_rhs(spec, x), x0, times, step)
