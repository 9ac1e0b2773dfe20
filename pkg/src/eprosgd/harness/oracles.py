"""Independent numerical oracles used by the verification suite.

`brute_force_prox` re-solves the elastic-net/ball prox problem as a smooth
NLP over the positive/negative split x = p - q (p, q >= 0), which removes
the l1 kink, and hands it to a general constrained solver. Nothing in this
path shares code or structure with the closed-form shrink-and-project
operator it is used to check.
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np
from scipy.optimize import minimize

from ..core import Ball, ConfigurationError, InvalidInputError, NumericalError, Point
from ..prox import ElasticNet

_MAX_PROX_SIZE = 400


def fit_rate(errors: Sequence[tuple[float, float]]) -> float:
    """Least-squares slope of log(error) against log(T).

    Needs at least three distinct T values and strictly positive errors;
    a slope near -1 is the signature of an O(1/T) method.
    """
    pts = [(float(t), float(e)) for t, e in errors]
    ts = np.array([t for t, _ in pts])
    es = np.array([e for _, e in pts])
    if np.unique(ts).size < 3:
        raise ConfigurationError(f"need >= 3 distinct T values, got {np.unique(ts).size}")
    if np.any(es <= 0) or not np.all(np.isfinite(es)):
        raise InvalidInputError("errors must be positive and finite for a log-log fit")
    slope, _ = np.polyfit(np.log(ts), np.log(es), 1)
    return float(slope)


def _l1_weights(shape: tuple[int, ...], eta: float, reg: ElasticNet) -> np.ndarray:
    w = np.full(shape, eta * reg.mu2)
    if reg.diagonal_exempt and len(shape) == 2:
        np.fill_diagonal(w, 0.0)
    return w.ravel()


def _solve_split(xbar: np.ndarray, a: float, b: np.ndarray, r: float, z0: np.ndarray):
    d = xbar.size

    def fun(z):
        x = z[:d] - z[d:]
        return 0.5 * float(np.sum((x - xbar) ** 2)) + 0.5 * a * float(np.sum(x * x)) + float(b @ (z[:d] + z[d:]))

    def jac(z):
        x = z[:d] - z[d:]
        g = (x - xbar) + a * x
        return np.concatenate([g + b, -g + b])

    constraints = [
        {
            "type": "ineq",
            "fun": lambda z: r * r - float(np.sum((z[:d] - z[d:]) ** 2)),
            "jac": lambda z: np.concatenate([-2.0 * (z[:d] - z[d:]), 2.0 * (z[:d] - z[d:])]),
        }
    ]
    res = minimize(
        fun,
        z0,
        jac=jac,
        method="SLSQP",
        bounds=[(0.0, None)] * (2 * d),
        constraints=constraints,
        options={"maxiter": 1000, "ftol": 1e-14},
    )
    x = res.x[:d] - res.x[d:]
    return x, fun(res.x)


def brute_force_prox(xbar: Point, eta: float, reg: ElasticNet, ball: Ball, tol: float = 1e-7) -> Point:
    """Minimize 1/2 ||x - xbar||^2 + eta g(x) over the ball numerically.

    Solved twice from distinct starts via the split formulation; the two
    solutions must agree to `tol` per coordinate or the call fails with
    diagnostics. Only meant for small instances (total size <= 400) in
    tests and verification runs.
    """
    if not (np.isfinite(eta) and eta > 0):
        raise InvalidInputError(f"eta must be positive, got {eta}")
    if not np.isfinite(xbar).all():
        raise InvalidInputError("prox input contains NaN or Inf")
    if xbar.size > _MAX_PROX_SIZE:
        raise ConfigurationError(f"brute-force prox is limited to {_MAX_PROX_SIZE} entries, got {xbar.size}")
    shape = xbar.shape
    flat = np.asarray(xbar, dtype=np.float64).ravel()
    a = eta * reg.mu1
    b = _l1_weights(shape, eta, reg)
    r = ball.radius

    # start 1: the input split into positive/negative parts, pulled into the ball
    x_init = flat if np.linalg.norm(flat) <= r else flat * (r / np.linalg.norm(flat))
    z0_a = np.concatenate([np.maximum(x_init, 0.0), np.maximum(-x_init, 0.0)])
    # start 2: the origin
    z0_b = np.zeros(2 * flat.size)

    x_a, f_a = _solve_split(flat, a, b, r, z0_a)
    x_b, f_b = _solve_split(flat, a, b, r, z0_b)
    gap = float(np.max(np.abs(x_a - x_b), initial=0.0))
    if gap > tol:
        raise NumericalError(
            f"brute-force prox did not converge: starts disagree by {gap:.3e} "
            f"(objectives {f_a:.12e} vs {f_b:.12e}, eta={eta}, mu1={reg.mu1}, mu2={reg.mu2}, r={r})"
        )
    x = x_a if f_a <= f_b else x_b
    # the split can overshoot the ball by roundoff; rescale within tolerance
    n = float(np.linalg.norm(x))
    if n > r * (1.0 + 1e-12):
        if n > r * (1.0 + math.sqrt(tol)):
            raise NumericalError(f"brute-force prox output violates the ball: ||x||={n}, r={r}")
        x = x * (r / n)
    return x.reshape(shape)
