"""Command-line entry point.

Subcommands:
  run     execute an experiment config (JSON)
  synth   single solver run on a synthetic problem
  lmnn    train a sparse metric on a CSV dataset
  report  aggregate an experiment directory into a table and figures

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from ..core import ConfigurationError, InvalidInputError, NumericalError
from ..lmnn import (
    DataSet,
    make_lmnn_problem,
    save_metric_csv,
    save_summary_json,
    solve_lmnn,
    training_params,
)
from ..solvers import VARIANTS
from .experiment import (
    bootstrap_upper_mean,
    load_config,
    run_cell,
    run_experiment,
    theory_bound,
    trace_rows,
    write_trace_csv,
)
from .synthetic import FAMILIES, build_problem


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="eprosgd", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute an experiment config")
    p_run.add_argument("--config", required=True, help="path to the experiment JSON")
    p_run.add_argument("--workers", type=int, default=1, help="parallel worker processes")

    p_synth = sub.add_parser("synth", help="single run on a synthetic problem")
    p_synth.add_argument("--family", choices=sorted(FAMILIES), default="quadratic_halfspace")
    p_synth.add_argument("--d", type=int, default=20)
    p_synth.add_argument("--beta", type=float, default=1.0)
    p_synth.add_argument("--noise", type=float, default=0.5)
    p_synth.add_argument("--T", type=int, required=True)
    p_synth.add_argument("--solver", choices=VARIANTS, default="epro")
    p_synth.add_argument("--seed", type=int, default=0)
    p_synth.add_argument("--problem-seed", type=int, default=0)
    p_synth.add_argument("--lam-scale", type=float, default=2.0)
    p_synth.add_argument("--out", required=True, help="output directory")

    p_lmnn = sub.add_parser("lmnn", help="sparse metric learning on a CSV dataset")
    p_lmnn.add_argument("--data", required=True, help="CSV with feature columns and a label column")
    p_lmnn.add_argument("--label-col", required=True)
    p_lmnn.add_argument("--k", type=int, default=3, help="same-class neighbors per point")
    p_lmnn.add_argument("--impostors", type=int, default=1, help="impostors per pair")
    p_lmnn.add_argument("--c", dest="balance", type=float, default=0.5)
    p_lmnn.add_argument("--mu1", type=float, required=True)
    p_lmnn.add_argument("--mu2", type=float, required=True)
    p_lmnn.add_argument("--T", type=int, required=True)
    p_lmnn.add_argument("--delta", type=float, default=0.05)
    p_lmnn.add_argument("--seed", type=int, default=0)
    p_lmnn.add_argument("--mode", choices=("epro_prox", "epro"), default="epro_prox")
    p_lmnn.add_argument("--out", required=True, help="output directory")

    p_report = sub.add_parser("report", help="aggregate traces, fit rates, render figures")
    p_report.add_argument("--in", dest="in_dir", required=True, help="experiment output directory")
    p_report.add_argument("--no-figures", action="store_true", help="skip figure rendering")

    return parser


def _cmd_run(args) -> int:
    config = load_config(args.config)
    summary = run_experiment(config, workers=args.workers)
    print(f"wrote {len(summary['cells'])} cells to {config.out_dir}")
    return 0


def _cmd_synth(args) -> int:
    spec = {
        "family": args.family,
        "d": args.d,
        "beta": args.beta,
        "noise": args.noise,
        "seed": args.problem_seed,
    }
    sp = build_problem(spec)
    trace = run_cell(spec, args.solver, args.T, args.seed, args.lam_scale)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_trace_csv(out / f"trace_{args.solver}_T{args.T}.csv", trace_rows(trace))
    error = trace.final_value - sp.f_star
    summary = {
        "problem": spec,
        "solver": args.solver,
        "T": args.T,
        "seed": args.seed,
        "lam_scale": args.lam_scale,
        "f_star": sp.f_star,
        "final_f": trace.final_value,
        "final_error": error,
        "exact_projections": trace.exact_projections,
        "ball_projections": trace.ball_projections,
        "iterations_used": trace.iterations_used,
        "matvecs": trace.matvecs,
        "theory_bound_expected": theory_bound(sp, args.lam_scale, args.T),
        "bootstrap_upper_95": bootstrap_upper_mean([error]),
    }
    with open(out / "summary.json", "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"{args.solver} T={args.T}: f-error {error:.6e}, "
          f"exact projections {trace.exact_projections}")
    return 0


def _cmd_lmnn(args) -> int:
    data = DataSet.from_csv(args.data, args.label_col)
    prob = make_lmnn_problem(
        data,
        k=args.k,
        balance=args.balance,
        mu1=args.mu1,
        mu2=args.mu2,
        impostors_per_point=args.impostors,
    )
    metric, trace = solve_lmnn(
        prob, args.T, solver_mode=args.mode, delta=args.delta, seed=args.seed
    )
    params = training_params(prob, args.T, args.delta)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_metric_csv(out / "metric.csv", metric)
    write_trace_csv(out / f"trace_{args.mode}_T{args.T}.csv", trace_rows(trace))
    from ..lmnn import summarize_run

    config_echo = {
        "data": str(args.data),
        "label_col": args.label_col,
        "k": args.k,
        "impostors": args.impostors,
        "c": args.balance,
        "mu1": args.mu1,
        "mu2": args.mu2,
        "T": args.T,
        "delta": args.delta,
        "seed": args.seed,
        "mode": args.mode,
    }
    summary = summarize_run(prob, metric, trace, params, config_echo)
    save_summary_json(out / "lmnn_summary.json", summary)
    print(f"learned {data.dim}x{data.dim} metric: objective {summary['objective']:.6f}, "
          f"k_dagger {summary['k_dagger']}, N_max {summary['N_max']}, "
          f"speedup estimate {summary['speedup_estimate']:.1f}")
    return 0


def _cmd_report(args) -> int:
    from .report import build_report, format_table

    rows = build_report(args.in_dir, figures=not args.no_figures)
    print(format_table(rows))
    if not args.no_figures:
        print(f"figures written to {args.in_dir}")
    return 0


_COMMANDS = {"run": _cmd_run, "synth": _cmd_synth, "lmnn": _cmd_lmnn, "report": _cmd_report}


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (ConfigurationError, InvalidInputError, FileNotFoundError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except (NumericalError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
