"""Experiment orchestration: enumerate (solver, T, seed) cells on a synthetic
problem, write one trace CSV per (solver, T) and a JSON summary with
mean-error statistics against the known optimum.

Re-running a config reproduces the trace files byte for byte except the
wall_ns column. Files are written atomically (temp file, then rename).
"""

from __future__ import annotations

import dataclasses
import json
import math
import os
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Optional, Sequence

import numpy as np

from ..core import ConfigurationError
from ..prox import ElasticNet
from ..solvers import RunTrace, SolverConfig, VARIANTS, recommended_params, run_solver
from .synthetic import SyntheticProblem, build_problem

TRACE_COLUMNS = (
    "epoch",
    "iters",
    "eta",
    "f_value",
    "c_value",
    "exact_projections",
    "ball_projections",
    "matvecs",
    "nnz_offdiag",
    "wall_ns",
)

_INT_COLUMNS = {"epoch", "iters", "exact_projections", "ball_projections", "matvecs", "nnz_offdiag", "wall_ns"}


@dataclass(frozen=True)
class ExperimentConfig:
    """One experiment: a problem spec swept over solvers, budgets and seeds."""

    problem: Mapping
    solvers: tuple[str, ...]
    t_grid: tuple[int, ...]
    seeds: tuple[int, ...]
    out_dir: str
    lam_scale: float = 2.0
    eig_tol: Optional[float] = None

    def __post_init__(self) -> None:
        for solver in self.solvers:
            if solver not in VARIANTS:
                raise ConfigurationError(f"unknown solver {solver!r}, expected one of {VARIANTS}")
        if not self.solvers or not self.t_grid or not self.seeds:
            raise ConfigurationError("solvers, t_grid and seeds must all be nonempty")
        if len(set(self.seeds)) != len(self.seeds):
            raise ConfigurationError("seeds must be distinct")
        if any(t < 1 for t in self.t_grid):
            raise ConfigurationError(f"t_grid entries must be >= 1, got {self.t_grid}")
        if self.lam_scale <= 1.0:
            raise ConfigurationError(f"lam_scale must exceed 1 so lam * rho > G1, got {self.lam_scale}")


_TOP_KEYS = {"problem", "solvers", "t_grid", "seeds", "out_dir", "overrides"}
_OVERRIDE_KEYS = {"lam_scale", "eig_tol"}


def config_from_dict(raw: Mapping) -> ExperimentConfig:
    """Build a config from parsed JSON; unknown keys are rejected."""
    unknown = set(raw) - _TOP_KEYS
    if unknown:
        raise ConfigurationError(f"unknown config keys: {sorted(unknown)}")
    missing = {"problem", "solvers", "t_grid", "seeds", "out_dir"} - set(raw)
    if missing:
        raise ConfigurationError(f"missing config keys: {sorted(missing)}")
    overrides = dict(raw.get("overrides", {}))
    bad = set(overrides) - _OVERRIDE_KEYS
    if bad:
        raise ConfigurationError(f"unknown override keys: {sorted(bad)}")
    return ExperimentConfig(
        problem=dict(raw["problem"]),
        solvers=tuple(raw["solvers"]),
        t_grid=tuple(int(t) for t in raw["t_grid"]),
        seeds=tuple(int(s) for s in raw["seeds"]),
        out_dir=str(raw["out_dir"]),
        lam_scale=float(overrides.get("lam_scale", 2.0)),
        eig_tol=overrides.get("eig_tol"),
    )


def load_config(path) -> ExperimentConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return config_from_dict(json.load(fh))


def solver_config_for(sp: SyntheticProblem, solver: str, T: int, seed: int, lam_scale: float = 2.0) -> SolverConfig:
    """Expected-guarantee parameters: lam = lam_scale * G1 / rho, T1 = 8,
    eta1 = mu/(2 beta). The same (T1, eta1) drive epoch_sgd so the epoch
    baselines share the schedule."""
    cons, oracle = sp.problem.constraint, sp.problem.oracle
    lam = lam_scale * oracle.g1 / cons.rho
    rec = recommended_params(oracle, cons, lam, "expected")
    return SolverConfig(variant=solver, T=T, T1=rec.T1, eta1=rec.eta1, lam=lam, seed=seed)


def run_cell(problem_spec: Mapping, solver: str, T: int, seed: int, lam_scale: float = 2.0) -> RunTrace:
    """Run one (solver, T, seed) cell on a freshly built problem instance
    (fresh constraint counters belong to this run alone)."""
    sp = build_problem(problem_spec)
    problem = sp.problem
    if solver == "epro_prox" and problem.regularizer is None:
        reg = ElasticNet(0.0, 0.0, diagonal_exempt=problem.x0.ndim == 2)
        problem = dataclasses.replace(problem, regularizer=reg)
    config = solver_config_for(sp, solver, T, seed, lam_scale)
    return run_solver(problem, config)


def _cell_worker(args: tuple) -> tuple:
    problem_spec, solver, T, seed, lam_scale, f_star = args
    trace = run_cell(problem_spec, solver, T, seed, lam_scale)
    rows = trace_rows(trace)
    return solver, T, seed, trace.final_value - f_star, trace.exact_projections, trace.iterations_used, rows


def trace_rows(trace: RunTrace) -> list[dict]:
    return [{col: getattr(rec, col) for col in TRACE_COLUMNS} for rec in trace.records]


def _format_cell(col: str, value) -> str:
    if col in _INT_COLUMNS:
        return str(int(value))
    return repr(float(value))


def write_trace_csv(path, rows: Sequence[dict]) -> None:
    """Atomic CSV dump with the pinned column order."""
    path = Path(path)
    lines = [",".join(TRACE_COLUMNS)]
    for row in rows:
        lines.append(",".join(_format_cell(col, row[col]) for col in TRACE_COLUMNS))
    _atomic_write(path, "\n".join(lines) + "\n")


def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def bootstrap_upper_mean(values: Sequence[float], n_boot: int = 2000, seed: int = 0, level: float = 0.975) -> float:
    """Upper percentile-bootstrap bound on the mean (97.5% by default)."""
    arr = np.asarray(values, dtype=np.float64)
    if arr.size == 1:
        return float(arr[0])
    rng = np.random.default_rng(seed)
    idx = rng.integers(0, arr.size, size=(n_boot, arr.size))
    means = arr[idx].mean(axis=1)
    return float(np.quantile(means, level))


def theory_bound(sp: SyntheticProblem, lam_scale: float, T: int) -> float:
    """Expected-guarantee bound 32 mu^2 G^2 / (beta T) at lam = lam_scale * G1 / rho."""
    cons, oracle = sp.problem.constraint, sp.problem.oracle
    lam = lam_scale * oracle.g1 / cons.rho
    rec = recommended_params(oracle, cons, lam, "expected")
    return 32.0 * rec.mu**2 * rec.g_squared / (oracle.beta * T)


def _effective_problem_spec(config: ExperimentConfig) -> dict:
    spec = dict(config.problem)
    if config.eig_tol is not None:
        if spec.get("family") != "quadratic_psd":
            raise ConfigurationError("the eig_tol override only applies to the quadratic_psd family")
        spec["eig_tol"] = float(config.eig_tol)
    return spec


def run_experiment(config: ExperimentConfig, workers: int = 1) -> dict:
    """Execute every cell, write trace CSVs and summary.json, return the summary."""
    spec = _effective_problem_spec(config)
    sp = build_problem(spec)
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    cells = []
    jobs = [
        (spec, solver, T, seed, config.lam_scale, sp.f_star)
        for solver in config.solvers
        for T in config.t_grid
        for seed in config.seeds
    ]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_cell_worker, jobs))
    else:
        results = [_cell_worker(job) for job in jobs]

    by_cell: dict[tuple[str, int], list] = {}
    for solver, T, seed, err, projections, iters, rows in results:
        by_cell.setdefault((solver, T), []).append((seed, err, projections, iters, rows))

    for solver in config.solvers:
        for T in config.t_grid:
            entries = by_cell[(solver, T)]
            entries.sort(key=lambda e: config.seeds.index(e[0]))
            all_rows = [row for entry in entries for row in entry[4]]
            write_trace_csv(out / f"trace_{solver}_T{T}.csv", all_rows)
            errors = [entry[1] for entry in entries]
            cells.append(
                {
                    "solver": solver,
                    "T": T,
                    "seeds": list(config.seeds),
                    "final_errors": errors,
                    "mean_error": float(np.mean(errors)),
                    "bootstrap_upper_95": bootstrap_upper_mean(errors),
                    "exact_projections": int(entries[0][2]),
                    "iterations_used": int(entries[0][3]),
                    "theory_bound_expected": theory_bound(sp, config.lam_scale, T),
                }
            )

    summary = {
        "problem": spec,
        "family": sp.family,
        "constants": sp.params,
        "f_star": sp.f_star,
        "lam_scale": config.lam_scale,
        "solvers": list(config.solvers),
        "t_grid": list(config.t_grid),
        "seeds": list(config.seeds),
        "cells": cells,
    }
    _atomic_write(out / "summary.json", json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return summary
