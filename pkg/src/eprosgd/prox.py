"""Closed-form proximal operator for the elastic-net regularizer inside the
ball, and the proximal inner step that replaces the plain ball-projection
update when the objective has the composite form fhat + g.

The regularizer is g(x) = mu1/2 ||x||^2 + mu2 ||x||_1; in matrix mode the
l1 part may exclude the diagonal, in which case diagonal entries are only
shrunk, never thresholded.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (
    Ball,
    ConfigurationError,
    ConstraintSpec,
    InvalidInputError,
    ObjectiveOracle,
    Point,
    constraint_value_and_subgrad,
    project_ball,
)


@dataclass(frozen=True)
class ElasticNet:
    """Elastic-net regularizer mu1/2 ||x||^2 + mu2 ||x||_1.

    With `diagonal_exempt` set (matrix mode), the l1 term sums off-diagonal
    entries only, so the prox never thresholds the diagonal.
    """

    mu1: float
    mu2: float
    diagonal_exempt: bool = False

    def __post_init__(self) -> None:
        if self.mu1 < 0 or self.mu2 < 0:
            raise ConfigurationError(f"regularizer weights must be nonnegative, got {self.mu1}, {self.mu2}")

    def value(self, x: Point) -> float:
        l1 = np.abs(x)
        if self.diagonal_exempt and x.ndim == 2:
            l1 = l1 - np.diag(np.diag(l1))
        return 0.5 * self.mu1 * float(np.sum(x * x)) + self.mu2 * float(np.sum(l1))


def prox_elastic_net_ball(xbar: Point, eta: float, reg: ElasticNet, ball: Ball) -> Point:
    """Minimizer of 1/2 ||x - xbar||^2 + eta * g(x) over the ball.

    Closed form: soft-threshold at eta*mu2, shrink by 1/(eta*mu1 + 1), then
    project onto the ball. Thresholded entries come out as literal 0.0 so
    downstream sparsity counts see true zeros; entries hitting the threshold
    exactly are zeroed. Exempt diagonals skip the thresholding step.
    """
    if not (np.isfinite(eta) and eta > 0):
        raise InvalidInputError(f"prox step size must be positive, got {eta}")
    if not np.isfinite(xbar).all():
        raise InvalidInputError("prox input contains NaN or Inf")
    s = np.sign(xbar) * np.maximum(np.abs(xbar) - eta * reg.mu2, 0.0)
    if reg.diagonal_exempt and xbar.ndim == 2:
        np.fill_diagonal(s, np.diag(xbar))
    s /= eta * reg.mu1 + 1.0
    return project_ball(s, ball)


def prox_step(
    x: Point,
    eta: float,
    oracle: ObjectiveOracle,
    cons: ConstraintSpec,
    lam: float,
    reg: ElasticNet,
    ball: Ball,
    rng: np.random.Generator,
) -> Point:
    """One proximal inner update: gradient step on the penalized smooth part,
    then the elastic-net/ball prox.

    The oracle's stochastic gradient must cover the smooth part only; the
    regularizer enters through the prox. Entries of the gradient-step point
    at or below eta*mu2 in magnitude are exactly zero in the output
    (diagonal exempt in matrix mode).
    """
    g = oracle.stoch_grad_fn(x, rng)
    value, h = constraint_value_and_subgrad(cons, x)
    xbar = x - eta * g if h is None else x - eta * (g + lam * h)
    return prox_elastic_net_ball(xbar, eta, reg, ball)
