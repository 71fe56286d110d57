"""Sparse regression with the discrete Dantzig selector.

Minimizes the number of nonzero coefficients subject to a sup-norm bound
on the correlation residual X'(y - X beta), with a certifying
branch-and-bound solver, first-order heuristics for warm starts, LP-based
coefficient bounds, closed-form orthonormal references, and an experiment
harness.
"""

from .bench import (
    CompareResult,
    Instance,
    Metrics,
    PathResult,
    SynthSpec,
    compare_on_grid,
    compare_warm_vanilla,
    delta_grid,
    evaluate,
    gen_example1,
    gen_example_corr_pair,
    gen_type_synth,
    path_run,
)
from .bounds import (
    BoundSet,
    coef_bounds,
    coef_bounds_refined,
    l1_budget_from_coef,
    prediction_bounds,
    warm_start_bounds,
)
from .core import (
    FEAS_TOL,
    ZERO_TOL,
    DesignMatrix,
    ProblemData,
    Solution,
    hard_threshold,
    polish,
    reference_delta,
    residual_inf,
    soft_threshold,
    standardize,
    support_of,
)
from .heuristics import (
    AdmmRun,
    HybridResult,
    PenaltyFamily,
    ReweightedResult,
    admm_run,
    hybrid_run,
    reweighted_run,
    stationarity_gap,
)
from .lp import (
    CompositeProblem,
    CompositeResult,
    LinearProgram,
    LpSolution,
    PolytopeLp,
    dual_prox_solve,
    phase1_feasible,
    project_polytope,
    solve_l1_dantzig,
    solve_lp,
)
from .milo import (
    MiloConfig,
    MiloFormulation,
    MiloResult,
    branch_and_bound,
    build_formulation,
    solve_with_intelligence,
)
from .theory import (
    ErrorBoundReport,
    brute_force_dds,
    error_bound_check,
    error_bound_delta,
    error_bound_probability,
    gamma_constant,
    kappa_estimate,
    orthonormal_solution,
)

__version__ = "0.1.0"

__all__ = [
    "FEAS_TOL",
    "ZERO_TOL",
    "DesignMatrix",
    "ProblemData",
    "Solution",
    "hard_threshold",
    "polish",
    "reference_delta",
    "residual_inf",
    "soft_threshold",
    "standardize",
    "support_of",
    "CompositeProblem",
    "CompositeResult",
    "LinearProgram",
    "LpSolution",
    "PolytopeLp",
    "dual_prox_solve",
    "phase1_feasible",
    "project_polytope",
    "solve_l1_dantzig",
    "solve_lp",
    "AdmmRun",
    "HybridResult",
    "PenaltyFamily",
    "ReweightedResult",
    "admm_run",
    "hybrid_run",
    "reweighted_run",
    "stationarity_gap",
    "MiloConfig",
    "MiloFormulation",
    "MiloResult",
    "branch_and_bound",
    "build_formulation",
    "solve_with_intelligence",
    "BoundSet",
    "coef_bounds",
    "coef_bounds_refined",
    "l1_budget_from_coef",
    "prediction_bounds",
    "warm_start_bounds",
    "ErrorBoundReport",
    "brute_force_dds",
    "error_bound_check",
    "error_bound_delta",
    "error_bound_probability",
    "gamma_constant",
    "kappa_estimate",
    "orthonormal_solution",
    "CompareResult",
    "Instance",
    "Metrics",
    "PathResult",
    "SynthSpec",
    "compare_on_grid",
    "compare_warm_vanilla",
    "delta_grid",
    "evaluate",
    "gen_example1",
    "gen_example_corr_pair",
    "gen_type_synth",
    "path_run",
    "__version__",
]
