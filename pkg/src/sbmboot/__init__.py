"""Bootstrap percolation on stochastic block models.

Two complementary toolboxes under one roof:

* a finite-size simulator (sparse SBM sampling plus the one-node-per-step
  chain construction of the activation process, with pluggable
  community-selection strategies), and
* the matching fluid-limit machinery (activation probabilities, drift
  functions, Cauchy-problem trajectories, Perron-Frobenius analysis and
  critical-surface computations) so that Monte Carlo runs and analytical
  predictions can be cross-validated at desk scale.
"""

from .errors import (
    InconclusiveError,
    PowerIterationError,
    ReducibleMatrixError,
    ResourceLimitError,
)
from .sbm import (
    SbmGraph,
    SbmParams,
    Violation,
    generate_sbm,
    load_graph,
    save_graph,
    select_seeds,
    validate_params,
)
from .percolation import (
    BootstrapState,
    FixedSchedule,
    RoundRobin,
    RunResult,
    Strategy,
    UniformUsable,
    build_schedule_from_points,
    empirical_b,
    naive_bootstrap,
    run_bootstrap,
    strategy_invariance_check,
)
from .fluid import (
    AsymptoticLimits,
    FluidModel,
    asymptotic_b,
    chi_from_limits,
    critical_seed_scale,
    exact_b,
    expected_remainder,
    jacobian_rho,
    rho,
)
from .classify import (
    Classification,
    CommunityGraphMeta,
    IntegratorOptions,
    Trajectory,
    classify,
    community_levels,
    initial_point,
    integrate_cauchy,
    pf_eigen,
    x_star,
)
from .critical import (
    CriticalPoint,
    critical_curve,
    critical_point,
    extreme_allocations,
    region_membership,
)

__version__ = "0.1.0"

__all__ = [
    "AsymptoticLimits",
    "BootstrapState",
    "Classification",
    "CommunityGraphMeta",
    "CriticalPoint",
    "FixedSchedule",
    "FluidModel",
    "InconclusiveError",
    "IntegratorOptions",
    "PowerIterationError",
    "ReducibleMatrixError",
    "ResourceLimitError",
    "RoundRobin",
    "RunResult",
    "SbmGraph",
    "SbmParams",
    "Strategy",
    "Trajectory",
    "UniformUsable",
    "Violation",
    "asymptotic_b",
    "build_schedule_from_points",
    "chi_from_limits",
    "classify",
    "community_levels",
    "critical_curve",
    "critical_point",
    "critical_seed_scale",
    "empirical_b",
    "exact_b",
    "expected_remainder",
    "extreme_allocations",
    "generate_sbm",
    "initial_point",
    "integrate_cauchy",
    "jacobian_rho",
    "load_graph",
    "naive_bootstrap",
    "pf_eigen",
    "region_membership",
    "rho",
    "run_bootstrap",
    "save_graph",
    "select_seeds",
    "strategy_invariance_check",
    "validate_params",
    "x_star",
]
