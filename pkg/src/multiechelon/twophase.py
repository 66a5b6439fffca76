"""Two-phase equilibrium procedure for a full network.

Phase 1 collapses each echelon to one aggregated warehouse and solves the
chain equilibrium. Phase 2 freezes the cross-echelon flows at their Phase 1
values, splits them evenly over the warehouses of one echelon, and solves
that echelon's linear model.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import chain, echelon
from .errors import SolverError
from .netspec import ChainEchelon, ChainSpec, EchelonSpec, FullNetworkSpec, WarehouseParams


def phase1_aggregate(net: FullNetworkSpec) -> ChainSpec:
    """Capacity = summed L, deterioration = mean theta, supply = declared echelon rate."""
    echelons = tuple(
        ChainEchelon(float(e.L.sum()), mu_c, float(e.theta.mean()))
        for e, mu_c in zip(net.echelons, net.supply_rates)
    )
    return ChainSpec(echelons, net.terminal_demand)


def frozen_rates(net: FullNetworkSpec, chain_eq, e: int) -> tuple[float, float]:
    """Per-warehouse ``(mu_i, lambda_i)`` for echelon ``e`` (1-based).

    Supply is the echelon's share of ``mu^c_e`` scaled by the upstream fill
    fraction ``x_{e-1} / C_{e-1}`` (unscaled for the top echelon). Demand is the
    share of the downstream pull ``mu^c_{e+1} (x_e / C_e)(1 - x_{e+1} / C_{e+1})``,
    or of ``lambda_c`` for the bottom echelon.
    """
    m = net.m
    if not 1 <= e <= m:
        raise ValueError(f"echelon index must be in 1..{m}, got {e}")
    x = np.asarray(chain_eq, dtype=float)
    C = np.array([ech.L.sum() for ech in net.echelons])
    n = net.echelons[e - 1].n
    mu_c = net.supply_rates
    supply = mu_c[e - 1] / n
    if e > 1:
        supply *= x[e - 2] / C[e - 2]
    if e < m:
        demand = mu_c[e] / n * (x[e - 1] / C[e - 1]) * (1.0 - x[e] / C[e])
    else:
        demand = net.terminal_demand / n
    return float(supply), float(demand)


def phase2_disaggregate(net: FullNetworkSpec, chain_eq, e: int, method: str = "auto") -> echelon.EquilibriumReport:
    supply, demand = frozen_rates(net, chain_eq, e)
    base = net.echelons[e - 1]
    local = EchelonSpec(
        tuple(WarehouseParams(w.max_level, supply, w.deterioration, demand) for w in base.warehouses),
        base.transshipment,
    )
    return echelon.equilibrium(local, method)


@dataclass
class TwoPhaseResult:
    chain: ChainSpec
    chain_levels: np.ndarray
    trace: chain.NewtonTrace
    echelons: dict[int, echelon.EquilibriumReport]
    state_counts: tuple[int, int]

    def gap(self, e: int) -> float:
        """Phase 2 total minus the Phase 1 aggregate level for echelon ``e``."""
        return self.echelons[e].total - float(self.chain_levels[e - 1])


def two_phase(
    net: FullNetworkSpec,
    echelons: list[int] | None = None,
    method: str = "auto",
    tol: float = chain.DEFAULT_TOL,
    max_iter: int = chain.DEFAULT_MAX_ITER,
) -> TwoPhaseResult:
    """Run both phases; Phase 2 covers ``echelons`` (1-based), default all."""
    spec = phase1_aggregate(net)
    x, trace = chain.newton_solve(spec, tol=tol, max_iter=max_iter)
    if x is None:
        raise SolverError(f"Phase 1 Newton iteration did not converge in {max_iter} iterations")
    targets = list(range(1, net.m + 1)) if echelons is None else list(echelons)
    for e in targets:
        if not 1 <= e <= net.m:
            raise ValueError(f"echelon index must be in 1..{net.m}, got {e}")
    with ThreadPoolExecutor() as pool:
        reports = list(pool.map(lambda e: phase2_disaggregate(net, x, e, method), targets))
    return TwoPhaseResult(spec, x, trace, dict(zip(targets, reports)), state_counts(net))


def state_counts(net: FullNetworkSpec) -> tuple[int, int]:
    """``(m + max n, sum of n)``: states handled by the procedure vs the full model."""
    sizes = [e.n for e in net.echelons]
    return net.m + max(sizes), sum(sizes)
