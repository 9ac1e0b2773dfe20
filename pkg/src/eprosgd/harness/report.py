"""Aggregate experiment outputs into a comparison table, fitted convergence
rates, and rendered figures.

Reads the summary.json an experiment wrote, emits report.csv (one row per
solver/budget cell plus the per-solver fitted slope), prints the table, and
renders two figures next to the delimited output: the log-log convergence
plot with the expected-guarantee bound overlay, and the exact-projection
ledger against the budget.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from ..core import ConfigurationError
from .experiment import _atomic_write
from .oracles import fit_rate

REPORT_COLUMNS = (
    "solver",
    "T",
    "mean_error",
    "bootstrap_upper_95",
    "exact_projections",
    "iterations_used",
    "theory_bound_expected",
    "fitted_slope",
)


def load_summary(in_dir) -> dict:
    path = Path(in_dir) / "summary.json"
    if not path.exists():
        raise ConfigurationError(f"no summary.json under {in_dir}; run an experiment first")
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def fitted_slopes(summary: dict) -> dict[str, float]:
    """Per-solver log-log slope of mean error against T (nan if unfittable)."""
    slopes: dict[str, float] = {}
    for solver in summary["solvers"]:
        pts = [(c["T"], c["mean_error"]) for c in summary["cells"] if c["solver"] == solver]
        try:
            slopes[solver] = fit_rate(pts)
        except (ConfigurationError, ValueError):
            slopes[solver] = math.nan
    return slopes


def build_report(in_dir, figures: bool = True) -> list[dict]:
    """Write report.csv (and figures) into the experiment directory and
    return the table rows."""
    in_dir = Path(in_dir)
    summary = load_summary(in_dir)
    slopes = fitted_slopes(summary)
    rows = []
    for cell in summary["cells"]:
        rows.append(
            {
                "solver": cell["solver"],
                "T": cell["T"],
                "mean_error": cell["mean_error"],
                "bootstrap_upper_95": cell["bootstrap_upper_95"],
                "exact_projections": cell["exact_projections"],
                "iterations_used": cell["iterations_used"],
                "theory_bound_expected": cell["theory_bound_expected"],
                "fitted_slope": slopes[cell["solver"]],
            }
        )
    lines = [",".join(REPORT_COLUMNS)]
    for row in rows:
        lines.append(
            ",".join(
                str(row[col]) if col in ("solver", "T", "exact_projections", "iterations_used") else repr(float(row[col]))
                for col in REPORT_COLUMNS
            )
        )
    _atomic_write(in_dir / "report.csv", "\n".join(lines) + "\n")
    if figures:
        render_figures(summary, slopes, in_dir)
    return rows


def render_figures(summary: dict, slopes: dict[str, float], out_dir: Path) -> list[Path]:
    """Convergence and projection-count figures, written as PNG files."""
    out_dir = Path(out_dir)
    paths = []

    fig, ax = plt.subplots(figsize=(6.4, 4.4))
    bound_drawn = False
    for solver in summary["solvers"]:
        cells = sorted((c for c in summary["cells"] if c["solver"] == solver), key=lambda c: c["T"])
        ts = [c["T"] for c in cells]
        errs = [c["mean_error"] for c in cells]
        label = solver if math.isnan(slopes[solver]) else f"{solver} (slope {slopes[solver]:.2f})"
        ax.loglog(ts, errs, marker="o", label=label)
        if not bound_drawn and len(ts) > 1:
            ax.loglog(ts, [c["theory_bound_expected"] for c in cells], "k--", alpha=0.6,
                      label="32 mu^2 G^2 / (beta T)")
            bound_drawn = True
    ax.set_xlabel("iteration budget T")
    ax.set_ylabel("mean f-error over seeds")
    ax.set_title(f"{summary['family']}: convergence")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    conv = out_dir / "convergence.png"
    fig.savefig(conv, dpi=150)
    plt.close(fig)
    paths.append(conv)

    fig, ax = plt.subplots(figsize=(6.4, 4.4))
    for solver in summary["solvers"]:
        cells = sorted((c for c in summary["cells"] if c["solver"] == solver), key=lambda c: c["T"])
        ax.loglog([c["T"] for c in cells], [max(c["exact_projections"], 1) for c in cells],
                  marker="s", label=solver)
    ax.set_xlabel("iteration budget T")
    ax.set_ylabel("exact projections")
    ax.set_title(f"{summary['family']}: projection ledger")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    proj = out_dir / "projections.png"
    fig.savefig(proj, dpi=150)
    plt.close(fig)
    paths.append(proj)
    return paths


def format_table(rows: list[dict]) -> str:
    header = f"{'solver':<10} {'T':>8} {'mean_error':>13} {'upper95':>13} {'P_D':>8} {'slope':>7}"
    out = [header, "-" * len(header)]
    for row in rows:
        out.append(
            f"{row['solver']:<10} {row['T']:>8} {row['mean_error']:>13.4e} "
            f"{row['bootstrap_upper_95']:>13.4e} {row['exact_projections']:>8} "
            f"{row['fitted_slope']:>7.2f}"
        )
    return "\n".join(out)
