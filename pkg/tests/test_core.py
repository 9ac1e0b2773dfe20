import numpy as np
import pytest

from eprosgd import (
    Ball,
    ConfigurationError,
    InvalidInputError,
    as_point,
    hinge_pos,
    penalized_subgrad,
    penalized_value,
    point_kind,
    project_ball,
    psd_cone,
    run_rng,
)

from conftest import toy_constraint, toy_oracle


class TestProjectBall:
    def test_on_boundary_is_identity(self):
        x = np.array([0.6, 0.8])
        out = project_ball(x, Ball(1.0))
        np.testing.assert_array_equal(out, x)

    def test_scales_outside_point(self):
        out = project_ball(np.array([3.0, 4.0]), Ball(1.0))
        np.testing.assert_array_equal(out, np.array([0.6, 0.8]))

    def test_zero_fixed_point(self):
        out = project_ball(np.zeros(2), Ball(2.0))
        np.testing.assert_array_equal(out, np.zeros(2))

    def test_inside_point_returned_unchanged(self):
        x = np.array([0.1, -0.2, 0.05])
        assert project_ball(x, Ball(1.0)) is x

    def test_idempotent_bitwise(self, rng):
        ball = Ball(0.7)
        for _ in range(300):
            x = rng.standard_normal(rng.integers(1, 12)) * rng.choice([0.1, 1.0, 100.0])
            once = project_ball(x, ball)
            twice = project_ball(once, ball)
            np.testing.assert_array_equal(once, twice)

    def test_norm_within_ulps(self, rng):
        ball = Ball(3.0)
        bound = 3.0 * (1 + 4 * np.finfo(float).eps)
        for _ in range(300):
            x = rng.standard_normal(8) * rng.choice([0.5, 10.0, 1e6])
            assert np.linalg.norm(project_ball(x, ball)) <= bound

    def test_nonexpansive(self, rng):
        ball = Ball(1.3)
        for _ in range(300):
            x = rng.standard_normal(6) * 3
            y = rng.standard_normal(6) * 3
            lhs = np.linalg.norm(project_ball(x, ball) - project_ball(y, ball))
            assert lhs <= np.linalg.norm(x - y) * (1 + 1e-12)

    def test_matrix_frobenius(self):
        a = np.diag([3.0, 4.0])
        out = project_ball(a, Ball(1.0))
        assert abs(np.linalg.norm(out) - 1.0) < 1e-15

    def test_nonfinite_rejected(self):
        with pytest.raises(InvalidInputError):
            project_ball(np.array([np.nan, 0.0]), Ball(1.0))

    def test_bad_radius_rejected(self):
        with pytest.raises(ConfigurationError):
            Ball(0.0)


class TestHinge:
    @pytest.mark.parametrize("s,expected", [(-1.0, 0.0), (0.0, 0.0), (2.5, 2.5)])
    def test_values(self, s, expected):
        assert hinge_pos(s) == expected

    def test_nonfinite(self):
        with pytest.raises(InvalidInputError):
            hinge_pos(float("inf"))


class TestPenalizedObjective:
    def test_hinge_inactive(self):
        x = np.zeros(1)
        value = penalized_value(x, toy_oracle(f_value=3.0), toy_constraint(-0.5), lam=10.0)
        assert value == 3.0

    def test_hinge_active(self):
        value = penalized_value(np.zeros(1), toy_oracle(f_value=3.0), toy_constraint(0.2), lam=10.0)
        assert value == pytest.approx(5.0, abs=1e-14)

    def test_boundary(self):
        value = penalized_value(np.zeros(1), toy_oracle(f_value=3.0), toy_constraint(0.0), lam=7.0)
        assert value == 3.0

    def test_small_multiplier_rejected(self):
        with pytest.raises(ConfigurationError):
            penalized_value(np.zeros(1), toy_oracle(g1=2.0), toy_constraint(-1.0), lam=1.5)

    def test_dominates_objective(self, rng):
        oracle = toy_oracle(f_value=1.7)
        for _ in range(50):
            c = float(rng.uniform(-1, 1))
            value = penalized_value(np.zeros(1), oracle, toy_constraint(c), lam=5.0)
            assert value >= 1.7
            assert (value == 1.7) == (c <= 0)


class TestPenalizedSubgrad:
    def test_feasible_returns_plain_gradient(self):
        g = penalized_subgrad(np.zeros(3), toy_oracle(grad=0.5), toy_constraint(-1.0), 3.0, run_rng(0, 1))
        np.testing.assert_array_equal(g, np.full(3, 0.5))

    def test_one_dimensional_active(self):
        # c(x) = x - 1 at x = 2: violated, subgradient 1, lam = 3, stoch grad 0.5
        cons = toy_constraint(1.0)
        g = penalized_subgrad(np.array([2.0]), toy_oracle(grad=0.5), cons, 3.0, run_rng(0, 1))
        np.testing.assert_allclose(g, [3.5], rtol=0, atol=1e-15)

    def test_psd_rank_one_correction(self):
        cons = psd_cone()
        a = np.diag([1.0, -2.0])
        oracle = toy_oracle(grad=0.0, g1=0.5)
        g = penalized_subgrad(a, oracle, cons, lam=3.0, rng=run_rng(0, 1))
        expected = -3.0 * np.outer([0.0, 1.0], [0.0, 1.0])
        np.testing.assert_allclose(g, expected, atol=1e-6)

    def test_norm_bound(self):
        from eprosgd import ConstraintSpec, ObjectiveOracle

        w = np.full(4, 0.5)  # unit norm
        oracle = ObjectiveOracle(
            stoch_grad_fn=lambda x, rng: 0.25 * np.ones(4),  # norm 0.5
            full_value_fn=lambda x: 0.0,
            beta=1.0,
            g1=0.5,
        )
        cons = ConstraintSpec(
            value_fn=lambda x: 1.0,
            subgrad_fn=lambda x: w,
            rho=1.0,
            g2=1.0,
            exact_projector=lambda x: x,
        )
        g = penalized_subgrad(np.zeros(4), oracle, cons, 2.0, run_rng(0, 1))
        assert np.linalg.norm(g) <= oracle.g1 + 2.0 * cons.g2 + 1e-12


class TestPoints:
    def test_kind_tags(self):
        assert point_kind(np.zeros(3)) == "vector"
        assert point_kind(np.zeros((2, 2))) == "symmetric-matrix"

    def test_asymmetric_rejected(self):
        with pytest.raises(InvalidInputError):
            as_point(np.array([[0.0, 1.0], [0.0, 0.0]]))

    def test_nonfinite_rejected(self):
        with pytest.raises(InvalidInputError):
            as_point(np.array([1.0, np.inf]))

    def test_kind_mismatch(self):
        with pytest.raises(InvalidInputError):
            as_point(np.zeros(3), kind="symmetric-matrix")

    def test_symmetric_accepted(self):
        a = as_point(np.array([[1.0, 2.0], [2.0, 1.0]]))
        assert point_kind(a) == "symmetric-matrix"


class TestRunRng:
    def test_reproducible(self):
        a = run_rng(42, 3).standard_normal(5)
        b = run_rng(42, 3).standard_normal(5)
        np.testing.assert_array_equal(a, b)

    def test_epochs_independent_streams(self):
        a = run_rng(42, 1).standard_normal(5)
        b = run_rng(42, 2).standard_normal(5)
        assert not np.array_equal(a, b)

    def test_seeds_differ(self):
        a = run_rng(1, 1).standard_normal(5)
        b = run_rng(2, 1).standard_normal(5)
        assert not np.array_equal(a, b)
