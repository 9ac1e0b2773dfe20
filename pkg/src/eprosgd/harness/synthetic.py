"""Synthetic problem generators with known optima.

Both families are beta-strongly convex by construction and satisfy the
oracle/constraint bound assumptions exactly: the stochastic gradient noise
is a truncated (hence uniformly bounded) zero-mean perturbation, not a
Gaussian, so the stated G1 is a hard bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Optional

import numpy as np

from ..core import Ball, ConfigurationError, ConstraintSpec, ObjectiveOracle, Point
from ..prox import ElasticNet
from ..psd import project_psd, psd_cone
from ..solvers import Problem


@dataclass(frozen=True)
class SyntheticProblem:
    """A solver-ready problem with its closed-form optimum and constants."""

    family: str
    problem: Problem
    x_star: Point
    f_star: float
    beta: float
    g1: float
    noise: float
    params: dict


def _truncated_gaussian_direction(rng: np.random.Generator, shape) -> np.ndarray:
    """Zero-mean draw with norm <= 1 (symmetric clipping keeps the mean zero)."""
    z = rng.standard_normal(shape)
    if z.ndim == 2:
        z = (z + z.T) / 2.0
    n = float(np.linalg.norm(z))
    if n > 1.0:
        z = z / n
    return z


def gen_quadratic_halfspace(
    d: int,
    beta: float = 1.0,
    noise: float = 0.5,
    seed: int = 0,
    *,
    offset: float = 1.0,
    gap: float = 1.0,
    tangent: float = 0.5,
    radius_scale: float = 1.25,
    normal: Optional[np.ndarray] = None,
    center: Optional[np.ndarray] = None,
    regularizer: Optional[ElasticNet] = None,
) -> SyntheticProblem:
    """f(x) = beta/2 ||x - a||^2 over the halfspace {w . x <= offset}.

    The center a sits `gap` beyond the boundary along the unit normal w
    (plus a tangential component), so the constraint is active at the
    optimum and x* = a - gap * w in closed form. rho = G2 = ||w|| = 1 and
    the exact projection is the one-line halfspace projection.

    An optional elastic net is attached for proximal runs; x_star/f_star
    refer to the quadratic core, which stays exact for zero weights.
    """
    if d < 1:
        raise ConfigurationError(f"d must be >= 1, got {d}")
    if beta <= 0:
        raise ConfigurationError(f"beta must be positive, got {beta}")
    if noise < 0:
        raise ConfigurationError(f"noise must be nonnegative, got {noise}")
    if offset < 0:
        raise ConfigurationError(f"offset must be nonnegative so the origin is feasible, got {offset}")
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(0xA11CE,)))
    if normal is None:
        w = rng.standard_normal(d)
    else:
        w = np.asarray(normal, dtype=np.float64)
    w = w / np.linalg.norm(w)
    if center is None:
        if d == 1:
            v = np.zeros(1)
        else:
            v = rng.standard_normal(d)
            v -= (v @ w) * w
            v /= np.linalg.norm(v)
        if gap <= 0:
            raise ConfigurationError(f"gap must be positive, got {gap}")
        a = (offset + gap) * w + tangent * v
    else:
        a = np.asarray(center, dtype=np.float64)
    violation = float(w @ a) - offset
    if violation <= 0:
        raise ConfigurationError("the quadratic center must lie outside the halfspace")
    x_star = a - violation * w
    f_star = 0.5 * beta * violation**2
    radius = radius_scale * float(np.linalg.norm(a))
    g1 = beta * (radius + float(np.linalg.norm(a))) + noise

    def stoch_grad(x: Point, grad_rng: np.random.Generator) -> Point:
        return beta * (x - a) + noise * _truncated_gaussian_direction(grad_rng, d)

    def projector(x: Point) -> Point:
        viol = float(w @ x) - offset
        if viol > 0.0:
            return x - viol * w
        return x

    def full_value(x: Point) -> float:
        quad = 0.5 * beta * float(np.sum((x - a) ** 2))
        return quad + regularizer.value(x) if regularizer is not None else quad

    oracle = ObjectiveOracle(
        stoch_grad_fn=stoch_grad,
        full_value_fn=full_value,
        beta=beta,
        g1=g1,
    )
    cons = ConstraintSpec(
        value_fn=lambda x: float(w @ x) - offset,
        subgrad_fn=lambda x: w,
        rho=1.0,
        g2=1.0,
        exact_projector=projector,
    )
    return SyntheticProblem(
        family="quadratic_halfspace",
        problem=Problem(oracle, cons, Ball(radius), x0=np.zeros(d), opt_value=f_star,
                        regularizer=regularizer),
        x_star=x_star,
        f_star=f_star,
        beta=beta,
        g1=g1,
        noise=noise,
        params={"d": d, "beta": beta, "noise": noise, "seed": seed, "offset": offset,
                "gap": gap, "tangent": tangent, "radius": radius, "rho": 1.0, "g2": 1.0, "g1": g1},
    )


def gen_quadratic_psd(
    d: int,
    beta: float = 1.0,
    noise: float = 0.25,
    seed: int = 0,
    *,
    radius_scale: float = 1.25,
    eig_tol: float = 1e-8,
    regularizer: Optional[ElasticNet] = None,
) -> SyntheticProblem:
    """f(A) = beta/2 ||A - M||_F^2 over the PSD cone, with M an indefinite
    symmetric matrix so the constraint binds; x* = clip(M) in closed form
    (for the quadratic core, exact under zero regularizer weights)."""
    if d < 1:
        raise ConfigurationError(f"d must be >= 1, got {d}")
    if beta <= 0:
        raise ConfigurationError(f"beta must be positive, got {beta}")
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(0xB0B,)))
    z = rng.standard_normal((d, d))
    m_target = (z + z.T) / 2.0
    if np.linalg.eigvalsh(m_target)[0] >= 0.0:
        m_target = m_target - 2.0 * np.abs(np.linalg.eigvalsh(m_target)).max() * np.eye(d)
    x_star = project_psd(m_target)
    f_star = 0.5 * beta * float(np.sum((x_star - m_target) ** 2))
    radius = radius_scale * max(float(np.linalg.norm(x_star)), 1.0)
    g1 = beta * (radius + float(np.linalg.norm(m_target))) + noise

    def stoch_grad(a: Point, grad_rng: np.random.Generator) -> Point:
        return beta * (a - m_target) + noise * _truncated_gaussian_direction(grad_rng, (d, d))

    def full_value(a: Point) -> float:
        quad = 0.5 * beta * float(np.sum((a - m_target) ** 2))
        return quad + regularizer.value(a) if regularizer is not None else quad

    oracle = ObjectiveOracle(
        stoch_grad_fn=stoch_grad,
        full_value_fn=full_value,
        beta=beta,
        g1=g1,
    )
    x0 = np.eye(d) * (radius / (2.0 * math.sqrt(d)))
    return SyntheticProblem(
        family="quadratic_psd",
        problem=Problem(oracle, psd_cone(eig_tol=eig_tol), Ball(radius), x0=x0, opt_value=f_star,
                        regularizer=regularizer),
        x_star=x_star,
        f_star=f_star,
        beta=beta,
        g1=g1,
        noise=noise,
        params={"d": d, "beta": beta, "noise": noise, "seed": seed,
                "radius": radius, "rho": 1.0, "g2": 1.0, "g1": g1},
    )


FAMILIES = {
    "quadratic_halfspace": gen_quadratic_halfspace,
    "quadratic_psd": gen_quadratic_psd,
}


def build_problem(spec: Mapping) -> SyntheticProblem:
    """Instantiate a synthetic problem from a config mapping.

    The mapping must carry 'family'; remaining keys are generator keyword
    arguments (unknown ones are rejected so config typos surface)."""
    spec = dict(spec)
    family = spec.pop("family", None)
    if family not in FAMILIES:
        raise ConfigurationError(f"unknown problem family {family!r}, expected one of {sorted(FAMILIES)}")
    reg_mu1 = float(spec.pop("reg_mu1", 0.0))
    reg_mu2 = float(spec.pop("reg_mu2", 0.0))
    if reg_mu1 > 0.0 or reg_mu2 > 0.0:
        spec["regularizer"] = ElasticNet(reg_mu1, reg_mu2, diagonal_exempt=family == "quadratic_psd")
    gen = FAMILIES[family]
    try:
        return gen(**spec)
    except TypeError as exc:
        raise ConfigurationError(f"bad problem parameters for {family}: {exc}") from exc
