"""Experiment harness: synthetic problems, verification oracles, experiment
orchestration, reporting, and the CLI."""

from .experiment import (
    ExperimentConfig,
    TRACE_COLUMNS,
    bootstrap_upper_mean,
    config_from_dict,
    load_config,
    run_cell,
    run_experiment,
    solver_config_for,
    theory_bound,
    trace_rows,
    write_trace_csv,
)
from .oracles import brute_force_prox, fit_rate
from .synthetic import (
    FAMILIES,
    SyntheticProblem,
    build_problem,
    gen_quadratic_halfspace,
    gen_quadratic_psd,
)

__all__ = [
    "ExperimentConfig",
    "FAMILIES",
    "SyntheticProblem",
    "TRACE_COLUMNS",
    "bootstrap_upper_mean",
    "brute_force_prox",
    "build_problem",
    "config_from_dict",
    "fit_rate",
    "gen_quadratic_halfspace",
    "gen_quadratic_psd",
    "load_config",
    "run_cell",
    "run_experiment",
    "solver_config_for",
    "theory_bound",
    "trace_rows",
    "write_trace_csv",
]
