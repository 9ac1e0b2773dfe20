import numpy as np
import pytest

from eprosgd import Ball, ElasticNet, InvalidInputError, prox_elastic_net_ball, prox_step, project_ball, run_rng
from eprosgd.harness import brute_force_prox

from conftest import toy_constraint, toy_oracle


def random_instance(rng, d=None, matrix=False, force_ball_active=None):
    if d is None:
        d = int(rng.integers(1, 11))
    if matrix:
        z = rng.uniform(-3, 3, (d, d))
        xbar = (z + z.T) / 2
    else:
        xbar = rng.uniform(-3, 3, d) * rng.choice([0.3, 1.0, 3.0])
    eta = float(10 ** rng.uniform(-3, 1))
    reg = ElasticNet(float(rng.uniform(0, 5)), float(rng.uniform(0, 5)), diagonal_exempt=matrix)
    unballed = np.sign(xbar) * np.maximum(np.abs(xbar) - eta * reg.mu2, 0.0)
    if matrix:
        np.fill_diagonal(unballed, np.diag(xbar))
    unballed = unballed / (eta * reg.mu1 + 1.0)
    n = float(np.linalg.norm(unballed))
    active = force_ball_active if force_ball_active is not None else bool(rng.integers(2))
    if active and n > 0:
        r = n * float(rng.uniform(0.2, 0.9))
    else:
        r = max(n * float(rng.uniform(1.5, 3.0)), 1e-3)
    return xbar, eta, reg, Ball(r)


class TestProxClosedForm:
    def test_identity_inside_ball(self):
        x = np.array([0.5, -0.25])
        out = prox_elastic_net_ball(x, 1.0, ElasticNet(0.0, 0.0), Ball(10.0))
        np.testing.assert_array_equal(out, x)

    def test_worked_example(self):
        # soft-threshold at 0.5 then shrink by 1/2: (2, -0.3, 0) -> (0.75, 0, 0)
        out = prox_elastic_net_ball(np.array([2.0, -0.3, 0.0]), 1.0, ElasticNet(1.0, 0.5), Ball(10.0))
        np.testing.assert_array_equal(out, np.array([0.75, 0.0, 0.0]))

    def test_odd_symmetry(self, rng):
        for _ in range(100):
            xbar, eta, reg, ball = random_instance(rng)
            plus = prox_elastic_net_ball(xbar, eta, reg, ball)
            minus = prox_elastic_net_ball(-xbar, eta, reg, ball)
            np.testing.assert_array_equal(minus, -plus)

    def test_full_threshold_gives_zero(self):
        xbar = np.array([0.4, -0.2, 0.1])
        out = prox_elastic_net_ball(xbar, 1.0, ElasticNet(0.0, 0.5), Ball(5.0))
        np.testing.assert_array_equal(out, np.zeros(3))

    def test_threshold_tie_is_zero(self):
        out = prox_elastic_net_ball(np.array([0.5, -0.5]), 1.0, ElasticNet(0.0, 0.5), Ball(5.0))
        assert np.all(out == 0.0)

    def test_exact_zeros_not_denormals(self, rng):
        xbar, eta = rng.uniform(-1, 1, 20), 0.7
        reg = ElasticNet(0.3, 0.9)
        out = prox_elastic_net_ball(xbar, eta, reg, Ball(100.0))
        small = np.abs(xbar) <= eta * reg.mu2
        assert np.all(out[small] == 0.0)

    def test_sparsity_count(self, rng):
        for _ in range(50):
            xbar, eta, reg, ball = random_instance(rng)
            out = prox_elastic_net_ball(xbar, eta, reg, ball)
            expected_zero = int(np.sum(np.abs(xbar) <= eta * reg.mu2))
            assert int(np.sum(out == 0.0)) >= expected_zero

    def test_diagonal_exempt_matrix_mode(self):
        a = np.array([[2.0, 0.1], [0.1, -0.4]])
        out = prox_elastic_net_ball(a, 1.0, ElasticNet(1.0, 0.5, diagonal_exempt=True), Ball(10.0))
        # off-diagonal 0.1 is under the 0.5 threshold; diagonal only shrinks
        np.testing.assert_array_equal(out, np.array([[1.0, 0.0], [0.0, -0.2]]))

    def test_matrix_offdiag_sparsity(self, rng):
        for _ in range(30):
            xbar, eta, reg, ball = random_instance(rng, d=6, matrix=True)
            out = prox_elastic_net_ball(xbar, eta, reg, ball)
            off = ~np.eye(6, dtype=bool)
            thresholded = off & (np.abs(xbar) <= eta * reg.mu2)
            assert np.all(out[thresholded] == 0.0)
            assert np.array_equal(out, out.T)

    def test_zero_weight_reduces_to_ball_projection(self, rng):
        ball = Ball(0.8)
        for _ in range(50):
            xbar = rng.standard_normal(5) * rng.choice([0.2, 2.0])
            out = prox_elastic_net_ball(xbar, 0.3, ElasticNet(0.0, 0.0), ball)
            np.testing.assert_array_equal(out, project_ball(xbar, ball))

    def test_bad_eta(self):
        with pytest.raises(InvalidInputError):
            prox_elastic_net_ball(np.ones(2), 0.0, ElasticNet(1.0, 1.0), Ball(1.0))

    def test_coordinatewise_nonexpansive_unballed(self, rng):
        big = Ball(1e12)
        for _ in range(100):
            d = 7
            x = rng.uniform(-4, 4, d)
            y = rng.uniform(-4, 4, d)
            eta = float(10 ** rng.uniform(-2, 1))
            reg = ElasticNet(float(rng.uniform(0, 3)), float(rng.uniform(0, 3)))
            px = prox_elastic_net_ball(x, eta, reg, big)
            py = prox_elastic_net_ball(y, eta, reg, big)
            assert np.all(np.abs(px - py) <= np.abs(x - y) + 1e-15)

    def test_optimality_conditions_interior(self, rng):
        checked = 0
        while checked < 60:
            xbar, eta, reg, ball = random_instance(rng, force_ball_active=False)
            out = prox_elastic_net_ball(xbar, eta, reg, ball)
            if np.linalg.norm(out) >= ball.radius * (1 - 1e-10):
                continue
            checked += 1
            nonzero = out != 0.0
            resid = out - xbar + eta * reg.mu1 * out + eta * reg.mu2 * np.sign(out)
            assert np.all(np.abs(resid[nonzero]) <= 1e-8)
            assert np.all(np.abs(xbar[~nonzero]) <= eta * reg.mu2 + 1e-8)


class TestAgainstBruteForce:
    def test_random_vectors(self, rng):
        for i in range(60):
            xbar, eta, reg, ball = random_instance(rng, force_ball_active=bool(i % 2))
            ours = prox_elastic_net_ball(xbar, eta, reg, ball)
            ref = brute_force_prox(xbar, eta, reg, ball, tol=1e-7)
            np.testing.assert_allclose(ours, ref, atol=1e-6, rtol=0)

    def test_random_matrices_diag_exempt(self, rng):
        for i in range(20):
            xbar, eta, reg, ball = random_instance(rng, d=5, matrix=True, force_ball_active=bool(i % 2))
            ours = prox_elastic_net_ball(xbar, eta, reg, ball)
            ref = brute_force_prox(xbar, eta, reg, ball, tol=1e-7)
            np.testing.assert_allclose(ours, ref, atol=1e-6, rtol=0)


class TestProxStep:
    def test_full_threshold_yields_zero_point(self):
        oracle = toy_oracle(grad=0.1, g1=1.0)
        cons = toy_constraint(-1.0)
        out = prox_step(np.array([0.2, -0.1]), 1.0, oracle, cons, 2.0, ElasticNet(0.0, 10.0), Ball(5.0), run_rng(0, 1))
        np.testing.assert_array_equal(out, np.zeros(2))

    def test_zero_regularizer_matches_plain_update(self, rng):
        oracle = toy_oracle(grad=0.4, g1=1.0)
        cons = toy_constraint(0.5)  # active constraint, unit subgradient
        ball = Ball(0.6)
        x = rng.standard_normal(4)
        eta, lam = 0.25, 2.0
        out = prox_step(x, eta, oracle, cons, lam, ElasticNet(0.0, 0.0), ball, run_rng(0, 1))
        xbar = x - eta * (np.full(4, 0.4) + lam * np.ones(4))
        np.testing.assert_array_equal(out, project_ball(xbar, ball))

    def test_matches_manual_composition(self, rng):
        oracle = toy_oracle(grad=-0.3, g1=1.0)
        cons = toy_constraint(-2.0)
        ball, reg = Ball(1.0), ElasticNet(0.5, 0.2)
        x = rng.standard_normal(5)
        out = prox_step(x, 0.5, oracle, cons, 2.0, reg, ball, run_rng(0, 1))
        xbar = x - 0.5 * np.full(5, -0.3)
        np.testing.assert_array_equal(out, prox_elastic_net_ball(xbar, 0.5, reg, ball))
