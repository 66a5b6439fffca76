"""Single-warehouse surrogate of an echelon and its comparison with the full model."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .echelon import TrajectorySeries
from .errors import NotApplicableError
from .netspec import EchelonSpec


@dataclass(frozen=True)
class AggregateParams:
    L_a: float
    mu_a: float
    lambda_a: float
    theta_bar: float

    def __post_init__(self):
        if not self.L_a > 0:
            raise ValueError(f"L_a must be > 0 (got {self.L_a})")
        if self.theta_bar < 0:
            raise ValueError(f"theta_bar must be >= 0 (got {self.theta_bar})")

    @property
    def decay_rate(self) -> float:
        """``mu_a / L_a + theta_bar``."""
        return self.mu_a / self.L_a + self.theta_bar


def aggregate_params(spec: EchelonSpec) -> AggregateParams:
    """Summed capacity, supply and demand with the mean deterioration rate."""
    return AggregateParams(
        L_a=float(spec.L.sum()),
        mu_a=float(spec.mu.sum()),
        lambda_a=float(spec.lam.sum()),
        theta_bar=float(spec.theta.mean()),
    )


def _rate(p: AggregateParams) -> float:
    k = p.decay_rate
    if k == 0:
        raise NotApplicableError("aggregated model is degenerate: mu_a / L_a + theta_bar = 0")
    return k


def aggregated_equilibrium(p: AggregateParams) -> float:
    return (p.mu_a - p.lambda_a) / _rate(p)


def aggregated_trajectory(p: AggregateParams, y0: float, times) -> TrajectorySeries:
    if y0 < 0:
        raise ValueError("y0 must be >= 0")
    k = _rate(p)
    net = p.mu_a - p.lambda_a
    times = np.asarray(times, dtype=float).ravel()
    decay = np.exp(-k * times)
    levels = decay * y0 - decay / k * net + net / k
    levels[times == 0.0] = y0
    return TrajectorySeries(times, levels[:, np.newaxis])


def exactness_conditions(spec: EchelonSpec, rtol: float = 1e-12) -> bool:
    """True when all ``mu_i / L_i`` agree and all ``theta_i`` agree.

    Under these conditions the aggregate reproduces the summed equilibrium and,
    with matching initial totals, the summed trajectory.
    """
    ratio = spec.mu / spec.L
    theta = spec.theta
    return bool(np.allclose(ratio, ratio[0], rtol=rtol, atol=0) and np.allclose(theta, theta[0], rtol=rtol, atol=0))


def aggregation_error_bound(spec: EchelonSpec, check_surplus: bool = True) -> float:
    """Upper bound ``sqrt(n)(mu_a - lambda_a)/min_i(mu_i/L_i + theta_i) + y_a*``
    on ``|y_a* - sum_i y_i*|`` for equal capacities.

    The bound rests on ``||b||_2 <= mu_a - lambda_a``, which needs
    ``mu_i >= lambda_i`` in every warehouse; otherwise NotApplicableError is
    raised. ``check_surplus=False`` evaluates the formula anyway (it can then
    fall below the actual gap).
    """
    L = spec.L
    if not np.all(L == L[0]):
        raise NotApplicableError("error bound requires equal maximum levels L_i")
    p = aggregate_params(spec)
    net = p.mu_a - p.lambda_a
    if net < 0:
        raise NotApplicableError("error bound requires mu_a >= lambda_a")
    if check_surplus and np.any(spec.mu < spec.lam):
        i = int(np.argmax(spec.mu < spec.lam))
        raise NotApplicableError(f"error bound requires mu_i >= lambda_i in every warehouse (fails at warehouse {i + 1})")
    slowest = float(np.min(spec.mu / L + spec.theta))
    return math.sqrt(spec.n) * net / slowest + net / p.decay_rate
