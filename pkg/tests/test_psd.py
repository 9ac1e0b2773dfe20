import time

import numpy as np
import pytest
from scipy.optimize import minimize

from eprosgd import (
    InvalidInputError,
    min_eigenpair,
    offdiag_nnz,
    project_psd,
    psd_cone,
    psd_constraint,
    psd_subgrad,
    psd_value_and_subgrad,
)
from eprosgd.psd import gershgorin_upper, matvec_operator


def random_symmetric(rng, d, density=1.0):
    z = rng.standard_normal((d, d))
    a = (z + z.T) / 2
    if density < 1.0:
        mask = rng.random((d, d)) < density
        mask = mask | mask.T
        np.fill_diagonal(mask, True)
        a = np.where(mask, a, 0.0)
    return a


class TestMinEigenpair:
    def test_diagonal(self):
        res = min_eigenpair(np.diag([1.0, 2.0, 3.0]), eig_tol=1e-12)
        assert res.converged
        assert res.eigenvalue == pytest.approx(1.0, abs=1e-10)
        np.testing.assert_allclose(np.abs(res.eigenvector), [1.0, 0.0, 0.0], atol=1e-8)

    def test_identity_degenerate(self):
        a = np.eye(5)
        res = min_eigenpair(a, eig_tol=1e-10)
        assert res.converged
        assert res.eigenvalue == pytest.approx(1.0, abs=1e-10)
        # any unit vector is valid; accept via the residual
        resid = np.linalg.norm(a @ res.eigenvector - res.eigenvalue * res.eigenvector)
        assert resid <= 1e-10 * max(1.0, np.linalg.norm(a))

    def test_one_by_one(self):
        res = min_eigenpair(np.array([[-4.0]]))
        assert res.converged and res.eigenvalue == -4.0

    def test_zero_matrix(self):
        res = min_eigenpair(np.zeros((4, 4)))
        assert res.converged and res.eigenvalue == pytest.approx(0.0, abs=1e-14)

    def test_matches_dense_oracle(self, rng):
        for _ in range(40):
            d = int(rng.integers(2, 61))
            a = random_symmetric(rng, d, density=float(rng.choice([0.05, 0.3, 1.0])))
            res = min_eigenpair(a, eig_tol=1e-10)
            assert res.converged
            exact = np.linalg.eigvalsh(a)[0]
            assert abs(res.eigenvalue - exact) <= 1e-8 * max(1.0, abs(exact))

    def test_unit_eigenvector_and_residual_invariant(self, rng):
        a = random_symmetric(rng, 30)
        res = min_eigenpair(a, eig_tol=1e-9)
        assert abs(np.linalg.norm(res.eigenvector) - 1.0) <= 1e-12
        resid = np.linalg.norm(a @ res.eigenvector - res.eigenvalue * res.eigenvector)
        assert resid <= 1e-9 * max(1.0, np.linalg.norm(a))

    def test_budget_exhaustion_returns_best_estimate(self, rng):
        a = random_symmetric(rng, 50)
        res = min_eigenpair(a, eig_tol=1e-14, max_matvecs=4)
        assert not res.converged
        assert np.isfinite(res.eigenvalue)
        assert res.matvec_count <= 4 + 1  # final residual check

    def test_asymmetric_rejected(self):
        with pytest.raises(InvalidInputError):
            min_eigenpair(np.array([[0.0, 1.0], [0.5, 0.0]]))

    def test_gershgorin_upper_bounds_lambda_max(self, rng):
        for _ in range(30):
            a = random_symmetric(rng, int(rng.integers(2, 40)))
            assert gershgorin_upper(a) >= np.linalg.eigvalsh(a)[-1] - 1e-12


class TestPsdConstraint:
    def test_indefinite_diagonal(self):
        a = np.diag([1.0, -2.0])
        assert psd_constraint(a) == pytest.approx(2.0, abs=1e-10)
        grad = psd_subgrad(a)
        np.testing.assert_allclose(grad, -np.outer([0.0, 1.0], [0.0, 1.0]), atol=1e-8)

    def test_psd_input_zero_subgrad(self):
        a = np.diag([0.5, 1.0])
        assert psd_constraint(a) == pytest.approx(-0.5, abs=1e-10)
        np.testing.assert_array_equal(psd_subgrad(a), np.zeros((2, 2)))

    def test_active_subgrad_unit_frobenius_rank_one(self, rng):
        for _ in range(20):
            a = random_symmetric(rng, 12)
            a -= (np.linalg.eigvalsh(a)[0] + 0.5) * np.eye(12) * np.sign(np.linalg.eigvalsh(a)[0] + 0.5)
            value, grad = psd_value_and_subgrad(a)
            if value <= 0:
                continue
            assert np.linalg.norm(grad) == pytest.approx(1.0, abs=1e-9)
            assert np.trace(-grad) == pytest.approx(1.0, abs=1e-9)
            s = np.linalg.svd(grad, compute_uv=False)
            assert s[1] <= 1e-9  # rank one

    def test_cone_counters_accumulate(self):
        cons = psd_cone()
        a = np.diag([1.0, -1.0])
        cons.value_fn(a)
        cons.exact_projector(a)
        assert cons.counters.eig_calls == 1
        assert cons.counters.matvecs > 0
        assert cons.counters.full_decompositions == 1

    def test_constants(self):
        cons = psd_cone()
        assert cons.rho == 1.0 and cons.g2 == 1.0


class TestProjectPsd:
    def test_diagonal_clip(self):
        out = project_psd(np.diag([1.0, -2.0]))
        np.testing.assert_allclose(out, np.diag([1.0, 0.0]), atol=1e-12)

    def test_psd_fixed_point(self, rng):
        a = random_symmetric(rng, 8)
        a = a @ a.T  # PSD
        a = (a + a.T) / 2
        out = project_psd(a)
        np.testing.assert_allclose(out, a, atol=1e-12)

    def test_zero(self):
        np.testing.assert_array_equal(project_psd(np.zeros((3, 3))), np.zeros((3, 3)))

    def test_idempotent(self, rng):
        for _ in range(20):
            a = random_symmetric(rng, 10)
            once = project_psd(a)
            twice = project_psd(once)
            assert np.linalg.norm(twice - once) <= 1e-10
            assert np.linalg.eigvalsh(once)[0] >= -1e-10

    def test_beats_random_psd_candidates(self, rng):
        a = random_symmetric(rng, 7)
        ours = np.linalg.norm(project_psd(a) - a)
        for _ in range(100):
            b = random_symmetric(rng, 7)
            candidate = b @ b.T
            candidate = (candidate + candidate.T) / 2 * rng.uniform(0.01, 2.0)
            assert ours <= np.linalg.norm(candidate - a) + 1e-8

    def test_matches_factorized_oracle(self, rng):
        # independent check: minimize ||B B^T - A||_F^2 over B by L-BFGS
        for _ in range(3):
            d = 4
            a = random_symmetric(rng, d)

            def objective(b_flat):
                b = b_flat.reshape(d, d)
                m = b @ b.T
                diff = m - a
                return float(np.sum(diff * diff)), (4.0 * diff @ b).ravel()

            best = np.inf
            for _ in range(4):
                res = minimize(objective, rng.standard_normal(d * d), jac=True, method="L-BFGS-B",
                               options={"maxiter": 2000, "ftol": 1e-15, "gtol": 1e-12})
                best = min(best, np.sqrt(res.fun))
            ours = np.linalg.norm(project_psd(a) - a)
            assert ours <= best + 1e-6


class TestSparsityCostModel:
    def test_offdiag_nnz(self):
        a = np.array([[1.0, 0.0, 2.0], [0.0, 3.0, 0.0], [2.0, 0.0, 0.0]])
        assert offdiag_nnz(a) == 2

    def test_matvec_wall_time_ratio_dense_vs_sparse(self, rng):
        d = 500
        dense = random_symmetric(rng, d, density=1.0)
        sparse = random_symmetric(rng, d, density=0.01)

        def best_time(a, reps=150, trials=5):
            op = matvec_operator(a)
            v = rng.standard_normal(d)
            best = np.inf
            for _ in range(trials):
                t0 = time.perf_counter()
                for _ in range(reps):
                    op(v)
                best = min(best, (time.perf_counter() - t0) / reps)
            return best

        ratio = best_time(dense) / best_time(sparse)
        assert ratio > 10.0, f"dense/sparse matvec time ratio {ratio:.1f} <= 10"

    def test_matvecs_scale_with_difficulty_not_density(self, rng):
        # same spectrum-management: iterative solve on a sparse matrix converges
        a = random_symmetric(rng, 200, density=0.02)
        res = min_eigenpair(a, eig_tol=1e-10)
        assert res.converged
        assert res.matvec_count <= 250
