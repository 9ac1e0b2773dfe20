"""The solver family: projected SGD, one-projection SGD, Epoch-SGD,
epoch-projection SGD (plain and proximal), plus the doubling epoch schedule
and the parameter-derivation recipes.

All variants minimize a beta-strongly convex f over D = {c(x) <= 0} whose
optimum lies in an r-ball. They differ in where the expensive exact
projection P_D lands:

  sgd        one P_D per iteration, step 1/(2 beta t), averaged output
  opro       penalized objective + ball projection per step, one final P_D
  epoch_sgd  doubling epochs, P_D per iteration, fixed step per epoch
  epro       opro updates inside epochs, one P_D per epoch end
  epro_prox  epro with the inner step replaced by the elastic-net/ball prox

Runs are deterministic: the stochastic gradient stream is a pure function
of (seed, epoch, draw index).
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import (
    Ball,
    ConfigurationError,
    ConstraintSpec,
    FEASIBILITY_TOL,
    ObjectiveOracle,
    Point,
    as_point,
    check_multiplier,
    constraint_value_and_subgrad,
    project_ball,
    run_rng,
)
from .prox import ElasticNet, prox_elastic_net_ball
from .psd import offdiag_nnz

VARIANTS = ("sgd", "opro", "epoch_sgd", "epro", "epro_prox")

_PENALTY_VARIANTS = frozenset({"opro", "epro", "epro_prox"})
_EPOCH_VARIANTS = frozenset({"epoch_sgd", "epro", "epro_prox"})

_EPS = float(np.finfo(np.float64).eps)


@dataclass(frozen=True)
class Problem:
    """A constrained stochastic problem instance handed to the solvers."""

    oracle: ObjectiveOracle
    constraint: ConstraintSpec
    ball: Ball
    x0: Point
    regularizer: Optional[ElasticNet] = None
    opt_value: Optional[float] = None


@dataclass(frozen=True)
class SolverConfig:
    """Run parameters: variant, iteration budget T, first-epoch length T1,
    first step size eta1, penalty multiplier lam, and the run seed.

    `high_prob_delta`, when set, records that (T1, eta1) came from the
    high-probability recipe at that confidence level.
    """

    variant: str
    T: int
    T1: int = 8
    eta1: Optional[float] = None
    lam: Optional[float] = None
    seed: int = 0
    high_prob_delta: Optional[float] = None

    def __post_init__(self) -> None:
        if self.variant not in VARIANTS:
            raise ConfigurationError(f"unknown variant {self.variant!r}, expected one of {VARIANTS}")
        if self.T < 1:
            raise ConfigurationError(f"T must be >= 1, got {self.T}")
        if self.T1 < 1:
            raise ConfigurationError(f"T1 must be >= 1, got {self.T1}")
        if self.variant in _EPOCH_VARIANTS:
            if self.T < self.T1:
                raise ConfigurationError(f"T={self.T} must be >= T1={self.T1}")
            if self.eta1 is None or not (np.isfinite(self.eta1) and self.eta1 > 0):
                raise ConfigurationError(f"epoch variants need a positive eta1, got {self.eta1}")
        if self.variant in _PENALTY_VARIANTS and self.lam is None:
            raise ConfigurationError(f"variant {self.variant!r} needs the multiplier lam")
        if self.high_prob_delta is not None and not (0.0 < self.high_prob_delta < 1.0):
            raise ConfigurationError(f"delta must lie in (0, 1), got {self.high_prob_delta}")


@dataclass(frozen=True)
class EpochSchedule:
    """Doubling epoch lengths and halving step sizes fitting a budget T."""

    epoch_lengths: tuple[int, ...]
    step_sizes: tuple[float, ...]
    k_dagger: int


def epoch_schedule(T: int, T1: int, eta1: float) -> EpochSchedule:
    """Maximal schedule T_k = T1 * 2^(k-1), eta_k = eta1 / 2^(k-1) with
    total length <= T; one more epoch would overshoot.

    With T1 = 8 the number of epochs is floor(log2(T/8 + 1)).
    """
    if T < T1:
        raise ConfigurationError(f"T={T} must be >= T1={T1}")
    if T1 < 1:
        raise ConfigurationError(f"T1 must be >= 1, got {T1}")
    lengths: list[int] = []
    steps: list[float] = []
    t_k, eta_k, total = T1, float(eta1), 0
    while total + t_k <= T:
        lengths.append(t_k)
        steps.append(eta_k)
        total += t_k
        t_k *= 2
        eta_k /= 2.0
    return EpochSchedule(tuple(lengths), tuple(steps), len(lengths))


@dataclass(frozen=True)
class RecommendedParams:
    """Derived run parameters: penalty geometry factor mu, combined gradient
    bound G, and the (T1, eta1) pair for the chosen guarantee mode."""

    mu: float
    G: float
    T1: int
    eta1: float
    T0: Optional[float] = None

    @property
    def g_squared(self) -> float:
        return self.G * self.G


def recommended_params(
    oracle: ObjectiveOracle,
    cons: ConstraintSpec,
    lam: float,
    mode: str = "expected",
    *,
    delta: Optional[float] = None,
    T: Optional[int] = None,
) -> RecommendedParams:
    """Parameter recipe for the epoch-projection solver.

    Both modes use mu = rho / (rho - g1/lam) and G^2 = g1^2 + lam^2 g2^2.
    The expected-guarantee mode sets T1 = 8, eta1 = mu / (2 beta). The
    high-probability mode needs `delta` and the total budget `T`; it sets
    m = ceil(2 log2 T),
    T0 = (2 g1^2 ln(m/delta) + g1 beta (1 + ln(m/delta))) / (mu G^2),
    T1 = max(18, 12 T0) and eta1 = mu / (3 beta). Larger lam shrinks mu and
    inflates G: the multiplier trades penalty geometry against gradient size.
    """
    check_multiplier(lam, oracle, cons)
    rho, g1, g2, beta = cons.rho, oracle.g1, cons.g2, oracle.beta
    mu = rho / (rho - g1 / lam)
    g_sq = g1 * g1 + lam * lam * g2 * g2
    G = math.sqrt(g_sq)
    if mode == "expected":
        return RecommendedParams(mu=mu, G=G, T1=8, eta1=mu / (2.0 * beta))
    if mode == "high_prob":
        if delta is None or not (0.0 < delta < 1.0):
            raise ConfigurationError(f"high_prob mode needs delta in (0, 1), got {delta}")
        if T is None or T < 2:
            raise ConfigurationError(f"high_prob mode needs the total budget T >= 2, got {T}")
        m = math.ceil(2.0 * math.log2(T))
        log_term = math.log(m / delta)
        t0 = (2.0 * g1 * g1 * log_term + g1 * beta * (1.0 + log_term)) / (mu * g_sq)
        t1 = max(18, math.ceil(12.0 * t0))
        return RecommendedParams(mu=mu, G=G, T1=t1, eta1=mu / (3.0 * beta), T0=t0)
    raise ConfigurationError(f"unknown mode {mode!r}, expected 'expected' or 'high_prob'")


@dataclass(frozen=True)
class EpochRecord:
    """One trace row. Counter fields are cumulative over the run; wall_ns is
    elapsed time since run start and is the only nondeterministic field."""

    epoch: int
    iters: int
    eta: float
    f_value: float
    c_value: float
    exact_projections: int
    ball_projections: int
    matvecs: int
    nnz_offdiag: int
    wall_ns: int
    max_ball_norm: float


@dataclass(frozen=True)
class RunTrace:
    variant: str
    seed: int
    records: tuple[EpochRecord, ...]
    final_point: Point
    initial_projections: int
    max_grad_norm: float

    @property
    def exact_projections(self) -> int:
        return self.records[-1].exact_projections if self.records else 0

    @property
    def ball_projections(self) -> int:
        return self.records[-1].ball_projections if self.records else 0

    @property
    def matvecs(self) -> int:
        return self.records[-1].matvecs if self.records else 0

    @property
    def iterations_used(self) -> int:
        return sum(rec.iters for rec in self.records)

    @property
    def n_max(self) -> int:
        """Peak nonzero count among intermediate iterates (off-diagonal in matrix mode)."""
        return max((rec.nnz_offdiag for rec in self.records), default=0)

    @property
    def final_value(self) -> float:
        return self.records[-1].f_value if self.records else math.nan


def run_solver(problem: Problem, config: SolverConfig) -> RunTrace:
    """Dispatch on config.variant."""
    if config.variant == "sgd":
        return run_sgd(problem, config)
    if config.variant == "opro":
        return run_opro(problem, config)
    if config.variant == "epoch_sgd":
        return run_epoch_sgd(problem, config)
    return run_epro(problem, config)


def _validate_penalty(problem: Problem, config: SolverConfig) -> float:
    lam = config.lam
    assert lam is not None  # enforced by SolverConfig
    check_multiplier(lam, problem.oracle, problem.constraint)
    return lam


def _feasible_start(problem: Problem, project_domain: bool) -> tuple[Point, int]:
    """Starting iterate inside the ball (and inside D when required).

    The domain projection of an infeasible user start is not part of any
    solver's projection ledger; it is reported separately on the trace.
    """
    x = as_point(problem.x0)
    initial = 0
    if project_domain and problem.constraint.value_fn(x) > FEASIBILITY_TOL:
        x = problem.constraint.exact_projector(x)
        initial = 1
    return project_ball(x, problem.ball), initial


def _nnz(x: Point) -> int:
    if x.ndim == 2:
        return offdiag_nnz(x)
    return int(np.count_nonzero(x))


def _matvec_total(cons: ConstraintSpec) -> int:
    return int(cons.counters.matvecs) if cons.counters is not None else 0


def run_sgd(problem: Problem, config: SolverConfig) -> RunTrace:
    """Projected SGD baseline: x <- P_D[x - grad/(2 beta t)], averaged output.

    Performs one exact projection per iteration; the average of feasible
    iterates is itself feasible, so the output needs no extra projection.
    """
    if config.variant != "sgd":
        raise ConfigurationError(f"run_sgd called with variant {config.variant!r}")
    oracle, cons = problem.oracle, problem.constraint
    beta, T = oracle.beta, config.T
    start_ns = time.perf_counter_ns()
    x, initial = _feasible_start(problem, project_domain=True)
    rng = run_rng(config.seed, 1)
    ssum = np.zeros_like(x)
    max_g = 0.0
    max_ball = float(np.linalg.norm(x))
    for t in range(1, T + 1):
        ssum += x
        g = oracle.stoch_grad_fn(x, rng)
        gn = float(np.linalg.norm(g))
        if gn > max_g:
            max_g = gn
        x = cons.exact_projector(x - g / (2.0 * beta * t))
        xn = float(np.linalg.norm(x))
        if xn > max_ball:
            max_ball = xn
    xhat = ssum / T
    record = EpochRecord(
        epoch=1,
        iters=T,
        eta=1.0 / (2.0 * beta * T),
        f_value=float(oracle.full_value_fn(xhat)),
        c_value=float(cons.value_fn(xhat)),
        exact_projections=T,
        ball_projections=0,
        matvecs=_matvec_total(cons),
        nnz_offdiag=_nnz(xhat),
        wall_ns=time.perf_counter_ns() - start_ns,
        max_ball_norm=max_ball,
    )
    return RunTrace("sgd", config.seed, (record,), xhat, initial, max_g)


def run_opro(problem: Problem, config: SolverConfig) -> RunTrace:
    """One-projection SGD: ball-projected steps on the penalized objective
    f + lam [c]_+ with step 1/(2 beta t), then a single exact projection of
    the averaged iterate."""
    if config.variant != "opro":
        raise ConfigurationError(f"run_opro called with variant {config.variant!r}")
    lam = _validate_penalty(problem, config)
    oracle, cons, ball = problem.oracle, problem.constraint, problem.ball
    beta, T, r = oracle.beta, config.T, ball.radius
    start_ns = time.perf_counter_ns()
    x, initial = _feasible_start(problem, project_domain=False)
    rng = run_rng(config.seed, 1)
    ssum = np.zeros_like(x)
    max_g = 0.0
    max_ball = float(np.linalg.norm(x))
    ball_bound = r * (1.0 + 4.0 * _EPS)
    for t in range(1, T + 1):
        ssum += x
        g = oracle.stoch_grad_fn(x, rng)
        gn = float(np.linalg.norm(g))
        if gn > max_g:
            max_g = gn
        _, h = constraint_value_and_subgrad(cons, x)
        eta_t = 1.0 / (2.0 * beta * t)
        xbar = x - eta_t * g if h is None else x - eta_t * (g + lam * h)
        n = float(np.linalg.norm(xbar))
        if n > ball_bound:
            x = (xbar * r) / n
            n = r
        else:
            x = xbar
        if n > max_ball:
            max_ball = n
    xhat = ssum / T
    c_before = float(cons.value_fn(xhat))
    xfinal = cons.exact_projector(xhat)
    record = EpochRecord(
        epoch=1,
        iters=T,
        eta=1.0 / (2.0 * beta * T),
        f_value=float(oracle.full_value_fn(xfinal)),
        c_value=c_before,
        exact_projections=1,
        ball_projections=T,
        matvecs=_matvec_total(cons),
        nnz_offdiag=_nnz(xfinal),
        wall_ns=time.perf_counter_ns() - start_ns,
        max_ball_norm=max_ball,
    )
    return RunTrace("opro", config.seed, (record,), xfinal, initial, max_g)


def run_epoch_sgd(problem: Problem, config: SolverConfig) -> RunTrace:
    """Epoch-SGD baseline: the doubling schedule with an exact projection at
    every inner step. Each epoch ends at the (feasible) average of its
    iterates; leftover iterations that do not fill a whole epoch are
    discarded."""
    if config.variant != "epoch_sgd":
        raise ConfigurationError(f"run_epoch_sgd called with variant {config.variant!r}")
    oracle, cons = problem.oracle, problem.constraint
    sched = epoch_schedule(config.T, config.T1, config.eta1)
    start_ns = time.perf_counter_ns()
    x, initial = _feasible_start(problem, project_domain=True)
    records: list[EpochRecord] = []
    exact = 0
    max_g = 0.0
    max_ball = float(np.linalg.norm(x))
    for k, (t_k, eta_k) in enumerate(zip(sched.epoch_lengths, sched.step_sizes), start=1):
        rng = run_rng(config.seed, k)
        ssum = np.zeros_like(x)
        nnz_peak = 0
        for _ in range(t_k):
            ssum += x
            g = oracle.stoch_grad_fn(x, rng)
            gn = float(np.linalg.norm(g))
            if gn > max_g:
                max_g = gn
            x = cons.exact_projector(x - eta_k * g)
            exact += 1
            xn = float(np.linalg.norm(x))
            if xn > max_ball:
                max_ball = xn
            nnz = _nnz(x)
            if nnz > nnz_peak:
                nnz_peak = nnz
        x = ssum / t_k
        records.append(
            EpochRecord(
                epoch=k,
                iters=t_k,
                eta=eta_k,
                f_value=float(oracle.full_value_fn(x)),
                c_value=float(cons.value_fn(x)),
                exact_projections=exact,
                ball_projections=0,
                matvecs=_matvec_total(cons),
                nnz_offdiag=nnz_peak,
                wall_ns=time.perf_counter_ns() - start_ns,
                max_ball_norm=max_ball,
            )
        )
    return RunTrace("epoch_sgd", config.seed, tuple(records), x, initial, max_g)


def run_epro(problem: Problem, config: SolverConfig) -> RunTrace:
    """Epoch-projection SGD, plain or proximal.

    Inside epoch k the one-projection update runs with the fixed step
    eta_k (ball projection only; the proximal variant replaces it with the
    elastic-net/ball prox). The epoch ends by exactly projecting the epoch
    average onto D, which seeds the next epoch, so the exact-projection
    count equals the number of epochs.
    """
    if config.variant not in ("epro", "epro_prox"):
        raise ConfigurationError(f"run_epro called with variant {config.variant!r}")
    use_prox = config.variant == "epro_prox"
    lam = _validate_penalty(problem, config)
    reg = problem.regularizer
    if use_prox and reg is None:
        raise ConfigurationError("epro_prox needs problem.regularizer")
    oracle, cons, ball = problem.oracle, problem.constraint, problem.ball
    r = ball.radius
    sched = epoch_schedule(config.T, config.T1, config.eta1)
    start_ns = time.perf_counter_ns()
    x, initial = _feasible_start(problem, project_domain=True)
    records: list[EpochRecord] = []
    exact = 0
    balls = 0
    max_g = 0.0
    max_ball = float(np.linalg.norm(x))
    ball_bound = r * (1.0 + 4.0 * _EPS)
    for k, (t_k, eta_k) in enumerate(zip(sched.epoch_lengths, sched.step_sizes), start=1):
        rng = run_rng(config.seed, k)
        ssum = np.zeros_like(x)
        nnz_peak = 0
        for _ in range(t_k):
            ssum += x
            g = oracle.stoch_grad_fn(x, rng)
            gn = float(np.linalg.norm(g))
            if gn > max_g:
                max_g = gn
            _, h = constraint_value_and_subgrad(cons, x)
            xbar = x - eta_k * g if h is None else x - eta_k * (g + lam * h)
            if use_prox:
                x = prox_elastic_net_ball(xbar, eta_k, reg, ball)
                n = float(np.linalg.norm(x))
            else:
                n = float(np.linalg.norm(xbar))
                if n > ball_bound:
                    x = (xbar * r) / n
                    n = r
                else:
                    x = xbar
            balls += 1
            if n > max_ball:
                max_ball = n
            nnz = _nnz(x)
            if nnz > nnz_peak:
                nnz_peak = nnz
        xhat = ssum / t_k
        c_before = float(cons.value_fn(xhat))
        x = cons.exact_projector(xhat)
        exact += 1
        records.append(
            EpochRecord(
                epoch=k,
                iters=t_k,
                eta=eta_k,
                f_value=float(oracle.full_value_fn(x)),
                c_value=c_before,
                exact_projections=exact,
                ball_projections=balls,
                matvecs=_matvec_total(cons),
                nnz_offdiag=nnz_peak,
                wall_ns=time.perf_counter_ns() - start_ns,
                max_ball_norm=max_ball,
            )
        )
    return RunTrace(config.variant, config.seed, tuple(records), x, initial, max_g)
