"""Projection-frugal stochastic solvers for strongly convex optimization.

The package provides the epoch-projection SGD family (one exact projection
per epoch instead of per iteration), its proximal extension for elastic-net
regularized objectives, a PSD-cone constraint engine built on a
sparsity-aware iterative eigen-solver, and a sparse large-margin
nearest-neighbor metric-learning application, together with a benchmark
harness that checks projection counts and convergence behavior.
"""

from .core import (
    Ball,
    ConfigurationError,
    ConstraintSpec,
    FEASIBILITY_TOL,
    InvalidInputError,
    NumericalError,
    ObjectiveOracle,
    Point,
    as_point,
    hinge_pos,
    penalized_subgrad,
    penalized_value,
    point_kind,
    project_ball,
    run_rng,
)
from .prox import ElasticNet, prox_elastic_net_ball, prox_step
from .psd import (
    EigenResult,
    PsdCounters,
    min_eigenpair,
    offdiag_nnz,
    project_psd,
    psd_cone,
    psd_constraint,
    psd_subgrad,
    psd_value_and_subgrad,
)
from .solvers import (
    EpochRecord,
    EpochSchedule,
    Problem,
    RecommendedParams,
    RunTrace,
    SolverConfig,
    VARIANTS,
    epoch_schedule,
    recommended_params,
    run_epoch_sgd,
    run_epro,
    run_opro,
    run_sgd,
    run_solver,
)

__version__ = "0.1.0"

__all__ = [
    "Ball",
    "ConfigurationError",
    "ConstraintSpec",
    "EigenResult",
    "ElasticNet",
    "EpochRecord",
    "EpochSchedule",
    "FEASIBILITY_TOL",
    "InvalidInputError",
    "NumericalError",
    "ObjectiveOracle",
    "Point",
    "Problem",
    "PsdCounters",
    "RecommendedParams",
    "RunTrace",
    "SolverConfig",
    "VARIANTS",
    "as_point",
    "epoch_schedule",
    "hinge_pos",
    "min_eigenpair",
    "offdiag_nnz",
    "penalized_subgrad",
    "penalized_value",
    "point_kind",
    "project_ball",
    "project_psd",
    "prox_elastic_net_ball",
    "prox_step",
    "psd_cone",
    "psd_constraint",
    "psd_subgrad",
    "psd_value_and_subgrad",
    "recommended_params",
    "run_epoch_sgd",
    "run_epro",
    "run_opro",
    "run_rng",
    "run_sgd",
    "run_solver",
    "__version__",
]
