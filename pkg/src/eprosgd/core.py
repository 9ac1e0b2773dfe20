"""Shared numeric types: iterates, the bounding ball, constraint and objective
oracles, and the penalized-objective primitives used by every solver variant.

An iterate is a plain float64 ndarray, either a 1-d vector or a 2-d symmetric
matrix; the array's ndim is the shape tag, and all norms are the Euclidean /
Frobenius norm so solver code is written once for both geometries.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Callable, Optional

import numpy as np
from numpy.typing import NDArray

Point = NDArray[np.float64]

FEASIBILITY_TOL = 1e-9

_EPS = float(np.finfo(np.float64).eps)


class ConfigurationError(ValueError):
    """Bad solver/problem configuration (maps to CLI exit code 2)."""


class InvalidInputError(ValueError):
    """Non-finite or malformed numeric input."""


class NumericalError(RuntimeError):
    """Numerical failure during a run (maps to CLI exit code 3)."""


def point_kind(x: Point) -> str:
    """Shape tag of an iterate: ``"vector"`` or ``"symmetric-matrix"``."""
    if x.ndim == 1:
        return "vector"
    if x.ndim == 2:
        return "symmetric-matrix"
    raise InvalidInputError(f"iterate must be 1-d or 2-d, got ndim={x.ndim}")


def as_point(values: Any, kind: Optional[str] = None) -> Point:
    """Validate and return an iterate as a float64 array.

    Vectors pass through; square matrices must be exactly symmetric. All
    entries must be finite. `kind` optionally pins the expected shape tag.
    """
    x = np.asarray(values, dtype=np.float64)
    got = point_kind(x)
    if got == "symmetric-matrix":
        if x.shape[0] != x.shape[1]:
            raise InvalidInputError(f"matrix iterate must be square, got shape {x.shape}")
        if not np.array_equal(x, x.T):
            raise InvalidInputError("matrix iterate must be exactly symmetric")
    if not np.isfinite(x).all():
        raise InvalidInputError("iterate contains NaN or Inf")
    if kind is not None and got != kind:
        raise InvalidInputError(f"expected a {kind} iterate, got {got}")
    return x


def norm(x: Point) -> float:
    """Euclidean norm for vectors, Frobenius norm for matrices."""
    return float(np.linalg.norm(x))


def hinge_pos(s: float) -> float:
    """max(0, s)."""
    if not np.isfinite(s):
        raise InvalidInputError(f"hinge argument must be finite, got {s}")
    return max(0.0, float(s))


@dataclass(frozen=True)
class Ball:
    """Origin-centered Euclidean/Frobenius ball of radius > 0."""

    radius: float

    def __post_init__(self) -> None:
        if not (np.isfinite(self.radius) and self.radius > 0):
            raise ConfigurationError(f"ball radius must be positive and finite, got {self.radius}")


def project_ball(x: Point, ball: Ball) -> Point:
    """Rescale `x` onto the ball: x * r / max(||x||, r).

    Points already inside (within 4 ulps of the boundary) are returned
    unchanged, which makes the projection bitwise idempotent.
    """
    if not np.isfinite(x).all():
        raise InvalidInputError("cannot project a non-finite point")
    r = ball.radius
    n = float(np.linalg.norm(x))
    if n <= r * (1.0 + 4.0 * _EPS):
        return x
    return (x * r) / n


@dataclass(frozen=True)
class ConstraintSpec:
    """Single inequality constraint c(x) <= 0 defining the domain D.

    `rho` is a lower bound on ||grad c|| over the boundary {c(x) = 0} and
    `g2` an upper bound on ||grad c|| over the ball; both must be supplied
    (rho in particular is asserted, not computable for arbitrary c).
    `value_and_subgrad_fn`, when given, evaluates c(x) and a subgradient in
    one pass (worth it when both come out of a single eigen solve).
    `counters` is an optional per-run mutable cost ledger read by traces.
    """

    value_fn: Callable[[Point], float]
    subgrad_fn: Callable[[Point], Point]
    rho: float
    g2: float
    exact_projector: Callable[[Point], Point]
    value_and_subgrad_fn: Optional[Callable[[Point], tuple[float, Point]]] = None
    counters: Optional[Any] = None

    def __post_init__(self) -> None:
        if not (np.isfinite(self.rho) and self.rho > 0):
            raise ConfigurationError(f"rho must be positive, got {self.rho}")
        if not (np.isfinite(self.g2) and self.g2 > 0):
            raise ConfigurationError(f"g2 must be positive, got {self.g2}")


def constraint_value_and_subgrad(cons: ConstraintSpec, x: Point) -> tuple[float, Optional[Point]]:
    """c(x) together with a subgradient of [c(x)]_+ at x.

    The subgradient is None whenever c(x) <= 0 (the zero element; feasible
    iterates are left undisturbed).
    """
    if cons.value_and_subgrad_fn is not None:
        value, grad = cons.value_and_subgrad_fn(x)
        return value, (grad if value > 0.0 else None)
    value = cons.value_fn(x)
    if value > 0.0:
        return value, cons.subgrad_fn(x)
    return value, None


@dataclass(frozen=True)
class ObjectiveOracle:
    """Stochastic first-order oracle for a beta-strongly convex objective f.

    `stoch_grad_fn(x, rng)` draws an unbiased stochastic subgradient with
    ||g|| <= g1 over the ball. For composite objectives f = fhat + g used by
    the proximal solver, `stoch_grad_fn` covers the smooth part fhat only
    (the regularizer is handled in closed form by the prox step),
    `smooth_value_fn` evaluates fhat, and `g1_smooth` bounds its gradients.
    `full_value_fn` always evaluates the complete objective f.
    """

    stoch_grad_fn: Callable[[Point, np.random.Generator], Point]
    full_value_fn: Callable[[Point], float]
    beta: float
    g1: float
    smooth_value_fn: Optional[Callable[[Point], float]] = None
    g1_smooth: Optional[float] = None

    def __post_init__(self) -> None:
        if not (np.isfinite(self.beta) and self.beta > 0):
            raise ConfigurationError(f"beta must be positive, got {self.beta}")
        if not (np.isfinite(self.g1) and self.g1 > 0):
            raise ConfigurationError(f"g1 must be positive, got {self.g1}")


def check_multiplier(lam: float, oracle: ObjectiveOracle, cons: ConstraintSpec) -> None:
    """Reject multipliers with lam * rho <= g1 (the penalty would not dominate)."""
    if not (np.isfinite(lam) and lam * cons.rho > oracle.g1):
        raise ConfigurationError(
            f"multiplier lam={lam} must satisfy lam * rho > g1 "
            f"(rho={cons.rho}, g1={oracle.g1})"
        )


def penalized_value(x: Point, oracle: ObjectiveOracle, cons: ConstraintSpec, lam: float) -> float:
    """Penalized objective f(x) + lam * [c(x)]_+."""
    check_multiplier(lam, oracle, cons)
    return float(oracle.full_value_fn(x)) + lam * hinge_pos(cons.value_fn(x))


def penalized_subgrad(
    x: Point,
    oracle: ObjectiveOracle,
    cons: ConstraintSpec,
    lam: float,
    rng: np.random.Generator,
) -> Point:
    """Stochastic subgradient of the penalized objective.

    Returns g + lam * h where g is a stochastic subgradient of f and h is a
    subgradient of c when the constraint is violated, zero otherwise. The
    norm is bounded by g1 + lam * g2.
    """
    check_multiplier(lam, oracle, cons)
    g = oracle.stoch_grad_fn(x, rng)
    value, h = constraint_value_and_subgrad(cons, x)
    if h is None:
        return g
    return g + lam * h


def run_rng(seed: int, epoch: int) -> np.random.Generator:
    """Counter-based stream for one epoch of one run.

    Built on Philox so every draw is a pure function of (seed, epoch, draw
    index); repeated runs with the same seed are bitwise reproducible and
    epochs get statistically independent streams.
    """
    ss = np.random.SeedSequence(seed, spawn_key=(epoch,))
    return np.random.Generator(np.random.Philox(ss))
