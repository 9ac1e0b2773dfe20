"""Shared test fixtures and toy problem builders."""

import numpy as np
import pytest

from eprosgd import Ball, ConstraintSpec, ObjectiveOracle, Problem


def toy_oracle(f_value=3.0, grad=0.5, beta=1.0, g1=1.0):
    """1-d oracle with a constant full value and constant stochastic gradient."""
    return ObjectiveOracle(
        stoch_grad_fn=lambda x, rng: np.full_like(x, grad),
        full_value_fn=lambda x: float(f_value),
        beta=beta,
        g1=g1,
    )


def toy_constraint(c_value, rho=1.0, g2=1.0):
    """1-d constraint with a constant c(x) and unit subgradient."""
    return ConstraintSpec(
        value_fn=lambda x: float(c_value),
        subgrad_fn=lambda x: np.ones_like(x),
        rho=rho,
        g2=g2,
        exact_projector=lambda x: x,
    )


def free_constraint():
    """A constraint that never activates: c(x) = -1, identity projector."""
    return ConstraintSpec(
        value_fn=lambda x: -1.0,
        subgrad_fn=lambda x: np.zeros_like(x),
        rho=1.0,
        g2=1.0,
        exact_projector=lambda x: x,
    )


def quadratic_1d_problem(a=2.0, beta=1.0, radius=10.0):
    """Deterministic unconstrained 1-d quadratic f(x) = beta/2 (x - a)^2."""
    center = float(a)
    oracle = ObjectiveOracle(
        stoch_grad_fn=lambda x, rng: beta * (x - center),
        full_value_fn=lambda x: 0.5 * beta * float((x[0] - center) ** 2),
        beta=beta,
        g1=beta * (radius + abs(center)),
    )
    return Problem(oracle, free_constraint(), Ball(radius), x0=np.zeros(1), opt_value=0.0)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
