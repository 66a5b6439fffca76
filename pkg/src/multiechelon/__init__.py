"""Continuous-time multi-echelon inventory networks with deteriorating items
and level-dependent lateral transshipment."""

from .aggregate import (
    AggregateParams,
    aggregate_params,
    aggregated_equilibrium,
    aggregated_trajectory,
    aggregation_error_bound,
    exactness_conditions,
)
from .chain import (
    NewtonTrace,
    StabilityCertificate,
    chain_jacobian,
    chain_rhs,
    kantorovich_certificate,
    newton_solve,
    simulate_chain,
    stability_condition,
)
from .echelon import (
    EquilibriumReport,
    LinearSystem,
    TrajectorySeries,
    build_system,
    equilibrium,
    equilibrium_linear_chain,
    equilibrium_star,
    equilibrium_two_warehouse,
    solve_trajectory,
)
from .errors import ConfigError, NotApplicableError, SingularMatrixError, SolverError, TridiagonalBreakdown
from .netspec import (
    ChainEchelon,
    ChainSpec,
    EchelonSpec,
    FullNetworkSpec,
    WarehouseParams,
    dump_config,
    load_config,
    parse_config,
    to_config,
    validate_positivity_condition,
)
from .twophase import phase1_aggregate, phase2_disaggregate, two_phase

__version__ = "0.1.0"
