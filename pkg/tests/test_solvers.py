import dataclasses

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from caisar.encoding import SensingMatrix, add_awgn
from caisar.phantoms import make_satellite_phantom
from caisar.solvers import (
    RowSpaceProjector,
    SolverConfig,
    default_config,
    sigma_schedule,
    solve,
    solve_l1,
    solve_sbl,
    solve_sl0,
    solve_tv,
    tv_norm,
)
from caisar.solvers.nesta import (
    huber_grad,
    huber_value,
    image_gradient,
    image_gradient_adjoint,
    smoothed_tv_grad,
    smoothed_tv_value,
)

from conftest import (
    bernoulli_matrix,
    best_k_support,
    directional_fd,
    lp_basis_pursuit,
    spike_vector,
)


def identity_phi(n):
    return SensingMatrix(data=np.eye(n * n), side=n)


class TestTvNorm:
    def test_constant_image(self):
        assert tv_norm(np.full((5, 5), 2.7)) == 0.0

    def test_hand_evaluated_two_by_two(self):
        assert tv_norm(np.array([[0.0, 1.0], [0.0, 1.0]])) == pytest.approx(2.0)

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 10_000), st.floats(-4, 4))
    def test_positive_homogeneity(self, seed, c):
        rng = np.random.default_rng(seed)
        x = rng.normal(size=(6, 6))
        assert tv_norm(c * x) == pytest.approx(abs(c) * tv_norm(x), rel=1e-10, abs=1e-10)

    def test_single_pixel(self):
        assert tv_norm(np.array([[3.0]])) == 0.0

    def test_gradient_adjoint_identity(self):
        # <D x, p> == <x, D^T p> for random fields
        rng = np.random.default_rng(3)
        x = rng.normal(size=(7, 7))
        ph, pv = rng.normal(size=(7, 7)), rng.normal(size=(7, 7))
        # zero the entries the forward operator never produces
        ph[-1, :] = 0.0
        pv[:, -1] = 0.0
        dh, dv = image_gradient(x)
        lhs = np.sum(dh * ph) + np.sum(dv * pv)
        rhs = np.sum(x * image_gradient_adjoint(ph, pv))
        assert lhs == pytest.approx(rhs, rel=1e-12)


class TestSmoothedGradients:
    def test_l1_gradient_matches_finite_differences(self):
        rng = np.random.default_rng(0)
        mu = 0.05
        failures = 0
        for _ in range(100):
            x = rng.normal(size=40)
            # stay away from the Huber kink where curvature jumps
            x = np.where(np.abs(np.abs(x) - mu) < 1e-3, x + 0.01, x)
            rel = directional_fd(
                lambda v: huber_value(v, mu), lambda v: huber_grad(v, mu), x, rng
            )
            failures += rel >= 1e-5
        assert failures == 0

    def test_tv_gradient_matches_finite_differences(self):
        rng = np.random.default_rng(1)
        mu = 0.05
        failures = 0
        for _ in range(100):
            x = rng.normal(size=(8, 8))
            dh, dv = image_gradient(x)
            mag = np.sqrt(dh**2 + dv**2)
            if np.any(np.abs(mag - mu) < 1e-3):
                x = x * 1.7  # move magnitudes off the kink
            rel = directional_fd(
                lambda v: smoothed_tv_value(v, mu),
                lambda v: smoothed_tv_grad(v, mu),
                x,
                rng,
            )
            failures += rel >= 1e-5
        assert failures == 0


class TestProjector:
    def test_equality_projection(self):
        phi = bernoulli_matrix(4, 6, seed=2)
        proj = RowSpaceProjector(phi.data)
        rng = np.random.default_rng(0)
        y = rng.normal(size=6)
        v = rng.normal(size=16)
        out = proj.project(v, y, 0.0)
        assert np.linalg.norm(phi.data @ out - y) <= 1e-10 * np.linalg.norm(y)

    def test_ball_projection_hits_boundary(self):
        phi = bernoulli_matrix(4, 6, seed=2)
        proj = RowSpaceProjector(phi.data)
        rng = np.random.default_rng(1)
        y = rng.normal(size=6)
        v = np.zeros(16)
        eps = 0.3 * np.linalg.norm(phi.data @ v - y)
        out = proj.project(v, y, eps)
        assert np.linalg.norm(phi.data @ out - y) == pytest.approx(eps, rel=1e-6)

    def test_interior_point_unchanged(self):
        phi = bernoulli_matrix(4, 6, seed=2)
        proj = RowSpaceProjector(phi.data)
        x = np.ones(16)
        y = phi.data @ x
        assert np.array_equal(proj.project(x, y, 0.5), x)

    def test_projection_is_closest_point(self):
        # compare against cvxpy on a tiny instance
        import cvxpy as cp

        phi = bernoulli_matrix(3, 4, seed=5)
        proj = RowSpaceProjector(phi.data)
        rng = np.random.default_rng(2)
        y = rng.normal(size=4)
        v = rng.normal(size=9)
        eps = 0.4
        xv = cp.Variable(9)
        prob = cp.Problem(cp.Minimize(cp.sum_squares(xv - v)), [cp.norm(phi.data @ xv - y) <= eps])
        prob.solve(solver=cp.CLARABEL)
        out = proj.project(v, y, eps)
        # ours must be feasible and at least as close as the convex solver's point
        assert np.linalg.norm(phi.data @ out - y) <= eps * (1 + 1e-9)
        assert np.linalg.norm(out - v) <= np.linalg.norm(xv.value - v) * (1 + 1e-6)
        assert np.allclose(out, xv.value, atol=1e-4)


class TestSolveL1:
    def test_identity_pattern_returns_data(self):
        phi = identity_phi(3)
        y = np.abs(np.random.default_rng(1).normal(size=9)) + 0.1
        res = solve_l1(phi, y, default_config("l1"))
        assert np.allclose(res.x_hat, y, atol=1e-6)

    def test_zero_measurements_give_zero(self):
        phi = bernoulli_matrix(4, 8, seed=1)
        res = solve_l1(phi, np.zeros(8), default_config("l1"))
        assert np.array_equal(res.x_hat, np.zeros(16))
        assert res.converged

    def test_small_noiseless_recovery(self):
        phi = bernoulli_matrix(10, 40, seed=3)
        x = spike_vector(100, 4, seed=3)
        res = solve_l1(phi, phi.data @ x, default_config("l1"))
        assert np.linalg.norm(res.x_hat - x) <= 1e-3 * np.linalg.norm(x)

    @pytest.mark.parametrize("seed", range(4))
    def test_lp_optimality_certificate_small(self, seed):
        # N <= 40: объective within 1e-4 relative of the exact LP solution
        phi = bernoulli_matrix(6, 18, seed=seed)
        x = spike_vector(36, 3, seed=seed + 10)
        y = phi.data @ x
        res = solve_l1(phi, y, default_config("l1"))
        lp = lp_basis_pursuit(phi.data, y)
        ours, exact = np.abs(res.x_hat).sum(), np.abs(lp).sum()
        assert ours <= exact * (1 + 1e-4)
        assert np.linalg.norm(phi.data @ res.x_hat - y) <= 1e-8 * np.linalg.norm(y)

    def test_objective_trace_non_increasing(self):
        phi = bernoulli_matrix(8, 25, seed=4)
        x = spike_vector(64, 4, seed=5)
        res = solve_l1(phi, phi.data @ x, default_config("l1"))
        trace = np.array(res.objective_trace)
        assert np.all(np.diff(trace) <= 1e-12)

    def test_wrong_mode_rejected(self):
        with pytest.raises(ValueError, match="mode"):
            solve_l1(bernoulli_matrix(3, 4), np.zeros(4), default_config("tv"))

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError, match="length"):
            solve_l1(bernoulli_matrix(3, 4), np.zeros(5), default_config("l1"))

    def test_noisy_epsilon_feasibility(self):
        phi = bernoulli_matrix(8, 30, seed=6)
        x = spike_vector(64, 4, seed=6, amplitudes="positive")
        ms = add_awgn(phi.data @ x, 10.0, 3)
        eps = 0.9 * np.linalg.norm(ms.y - phi.data @ x)
        res = solve_l1(phi, ms.y, default_config("l1", epsilon=eps))
        assert res.final_residual <= eps * (1 + 1e-6)


class TestSolveTv:
    def test_constant_image_recovered(self):
        n = 8
        rng = np.random.default_rng(7)
        rows = [np.ones(n * n)]  # one row pins the mean
        rows += [
            (rng.random(n * n) < 0.5).astype(float) for _ in range(12)
        ]
        phi = SensingMatrix(data=np.array(rows), side=n)
        x = np.full(n * n, 3.0)
        res = solve_tv(phi, phi.data @ x, n, default_config("tv"))
        assert np.linalg.norm(res.x_hat - x) <= 1e-3 * np.linalg.norm(x)

    def test_zero_measurements(self):
        phi = bernoulli_matrix(5, 10, seed=0)
        res = solve_tv(phi, np.zeros(10), 5, default_config("tv"))
        assert np.array_equal(res.x_hat, np.zeros(25))

    def test_rectangle_phantom_recovery(self):
        n = 12
        phi = bernoulli_matrix(n, 70, seed=8)
        scene = make_satellite_phantom(n)
        y = phi.data @ scene.x
        res = solve_tv(phi, y, n, default_config("tv"))
        assert np.linalg.norm(res.x_hat - scene.x) <= 1e-2 * np.linalg.norm(scene.x)

    def test_tv_does_not_exceed_truth(self):
        # noiseless: the truth is feasible, so TV(estimate) <= 1.01 * TV(truth)
        n = 12
        for seed in (1, 2, 3):
            phi = bernoulli_matrix(n, 70, seed=seed)
            scene = make_satellite_phantom(n)
            res = solve_tv(phi, phi.data @ scene.x, n, default_config("tv"))
            assert tv_norm(res.x_hat.reshape(n, n)) <= 1.01 * tv_norm(scene.image)

    def test_matches_convex_oracle(self):
        from conftest import cvxpy_tv

        n = 10
        phi = bernoulli_matrix(n, 45, seed=9)
        scene = make_satellite_phantom(n)
        y = phi.data @ scene.x
        oracle = cvxpy_tv(phi.data, y, n)
        res = solve_tv(phi, y, n, default_config("tv"))
        assert tv_norm(res.x_hat.reshape(n, n)) <= tv_norm(oracle) * (1 + 1e-3) + 1e-8

    def test_objective_trace_non_increasing(self):
        n = 10
        phi = bernoulli_matrix(n, 45, seed=10)
        scene = make_satellite_phantom(n)
        res = solve_tv(phi, phi.data @ scene.x, n, default_config("tv"))
        trace = np.array(res.objective_trace)
        assert np.all(np.diff(trace) <= 1e-12)

    def test_side_mismatch_rejected(self):
        phi = bernoulli_matrix(4, 6)
        with pytest.raises(ValueError, match="cols"):
            solve_tv(phi, np.zeros(6), 5, default_config("tv"))


class TestSolveSl0:
    def test_identity_pattern_returns_data(self):
        phi = identity_phi(3)
        y = np.random.default_rng(2).normal(size=9)
        res = solve_sl0(phi, y, default_config("sl0"))
        assert np.allclose(res.x_hat, y, atol=1e-12)

    def test_sigma_schedule_strictly_decreasing(self):
        sched = sigma_schedule(2.0, 0.5, 16)
        assert len(sched) == 16
        assert all(s > 0 for s in sched)
        assert all(a > b for a, b in zip(sched, sched[1:]))

    def test_schedule_validation(self):
        with pytest.raises(ValueError):
            sigma_schedule(0.0, 0.5, 4)
        with pytest.raises(ValueError):
            sigma_schedule(1.0, 1.0, 4)

    def test_noiseless_recovery_acceptance_instance(self):
        phi = bernoulli_matrix(20, 120, seed=11)
        x = spike_vector(400, 5, seed=11)
        res = solve_sl0(phi, phi.data @ x, default_config("sl0"))
        assert np.linalg.norm(res.x_hat - x) <= 1e-2 * np.linalg.norm(x)

    def test_final_projection_contract(self):
        phi = bernoulli_matrix(8, 20, seed=12)
        x = spike_vector(64, 3, seed=12)
        y = phi.data @ x
        res = solve_sl0(phi, y, default_config("sl0"))
        assert res.final_residual <= 1e-8 * np.linalg.norm(y)

    def test_rank_deficient_flagged(self):
        base = bernoulli_matrix(4, 3, seed=13).data
        phi = SensingMatrix(data=np.vstack([base, base[:1]]), side=4)
        res = solve_sl0(phi, phi.data @ np.ones(16), default_config("sl0"))
        assert "pinv_fallback" in res.flags


class TestSolveSbl:
    def test_identity_pattern_noiseless_limit(self):
        phi = identity_phi(3)
        y = np.abs(np.random.default_rng(4).normal(size=9)) + 0.5
        cfg = default_config("sbl", sbl_noise_var=0.0)
        res = solve_sbl(phi, y, cfg)
        assert np.allclose(res.x_hat, y, atol=1e-5)

    def test_support_recovery_matches_exhaustive_oracle(self):
        # N=100, K=3, M=40 at 15 dB: instance verified identifiable by
        # exhaustive search, then SBL must find the same support
        phi = bernoulli_matrix(10, 40, seed=14)
        x = np.zeros(100)
        true_support = (12, 47, 83)
        x[list(true_support)] = (1.0, 1.4, 0.8)
        ms = add_awgn(phi.data @ x, 15.0, 21)
        assert best_k_support(phi.data, ms.y, 3) == true_support
        noise_var = float(np.mean((phi.data @ x) ** 2)) / 10**1.5
        res = solve_sbl(phi, ms.y, default_config("sbl", sbl_noise_var=noise_var))
        top3 = tuple(sorted(np.argsort(-np.abs(res.x_hat))[:3]))
        assert top3 == true_support

    def test_evidence_non_decreasing_without_pruning(self):
        phi = bernoulli_matrix(8, 24, seed=15)
        x = spike_vector(64, 3, seed=15, amplitudes="positive")
        ms = add_awgn(phi.data @ x, 10.0, 5)
        noise_var = float(np.mean((phi.data @ x) ** 2)) / 10.0
        cfg = default_config(
            "sbl", sbl_noise_var=noise_var, sbl_prune_threshold=float("inf"),
            sbl_max_iters=80, convergence_tol=0.0,
        )
        res = solve_sbl(phi, ms.y, cfg)
        trace = np.array(res.objective_trace)
        assert trace.size >= 50
        assert np.all(np.diff(trace) >= -1e-10)

    def test_joint_noise_estimation_evidence_monotone(self):
        phi = bernoulli_matrix(8, 24, seed=16)
        x = spike_vector(64, 3, seed=16, amplitudes="positive")
        ms = add_awgn(phi.data @ x, 10.0, 6)
        cfg = default_config(
            "sbl", sbl_prune_threshold=float("inf"), sbl_max_iters=60, convergence_tol=0.0
        )
        res = solve_sbl(phi, ms.y, cfg)
        trace = np.array(res.objective_trace)
        assert np.all(np.diff(trace) >= -1e-10)

    def test_zero_measurements(self):
        phi = bernoulli_matrix(4, 8)
        res = solve_sbl(phi, np.zeros(8), default_config("sbl"))
        assert np.array_equal(res.x_hat, np.zeros(16))

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError, match="length"):
            solve_sbl(bernoulli_matrix(3, 4), np.zeros(5), default_config("sbl"))


class TestCrossSolverContracts:
    @pytest.mark.parametrize("mode", ["l1", "tv", "sl0", "sbl"])
    def test_noiseless_feasibility(self, mode):
        n = 8
        phi = bernoulli_matrix(n, 30, seed=17)
        x = spike_vector(64, 4, seed=17, amplitudes="positive")
        y = phi.data @ x
        cfg = default_config(mode, **({"sbl_noise_var": 0.0} if mode == "sbl" else {}))
        res = solve(phi, y, cfg, n)
        assert res.final_residual <= max(cfg.epsilon, 1e-8 * np.linalg.norm(y))

    @pytest.mark.parametrize("mode", ["l1", "tv", "sl0", "sbl"])
    def test_determinism(self, mode):
        n = 6
        phi = bernoulli_matrix(n, 14, seed=18)
        x = spike_vector(36, 3, seed=18, amplitudes="positive")
        ms = add_awgn(phi.data @ x, 8.0, 9)
        cfg = default_config(mode, **({"sbl_noise_var": 0.1} if mode == "sbl" else {}))
        r1 = solve(phi, ms.y, cfg, n)
        r2 = solve(phi, ms.y, cfg, n)
        assert np.array_equal(r1.x_hat, r2.x_hat)
        assert r1.iterations == r2.iterations
        assert r1.objective_trace == r2.objective_trace

    def test_solver_config_validation(self):
        with pytest.raises(ValueError):
            SolverConfig(mode="l1", epsilon=-1.0)
        with pytest.raises(ValueError):
            SolverConfig(mode="l1", mu_final=0.0)
        with pytest.raises(ValueError):
            SolverConfig(mode="sl0", sl0_sigma_decrease=1.0)
        with pytest.raises(ValueError):
            SolverConfig(mode="nope")

    def test_result_image_view(self):
        phi = identity_phi(3)
        y = np.arange(9.0) + 1
        res = solve_l1(phi, y, default_config("l1"))
        assert res.image(3).shape == (3, 3)

    def test_unknown_dispatch_mode(self):
        cfg = default_config("l1")
        bad = dataclasses.replace(cfg)
        object.__setattr__(bad, "mode", "zzz")
        with pytest.raises(ValueError):
            solve(bernoulli_matrix(3, 4), np.zeros(4), bad)
