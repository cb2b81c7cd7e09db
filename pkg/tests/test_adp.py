import math
from types import SimpleNamespace

import numpy as np
import pytest

from frenet_adp import (
    ActorWeights,
    CostSpec,
    CriticWeights,
    GainSet,
    GridWorkspace,
    LearningGains,
    PathSpec,
    SampleGrid,
    actor_rate,
    basis,
    basis_jacobian,
    bellman_error,
    critic_rate,
    drift_f,
    estimate_lf,
    gain_condition_check,
    hamiltonian_hat,
    input_g,
    local_cost,
    policy_hat,
    rank_check,
    value_hat,
)
from frenet_adp.adp import project_rate

GAINS = GainSet(k1=0.1, k2=0.05, v_des=0.5)
LISSAJOUS = PathSpec.lissajous(10.0, 15.0, 1.0, 2.0)
ZETA0 = np.array([-0.5, 0.25, -np.pi / 6, 0.0])
W0 = np.array([0.0, 0.0, 0.0, 0.5, 0.0, 0.0, 0.5, 0.0, 1.0])
IDENTITY_COST = CostSpec.identity()


def random_state(rng, phi_lim=0.9):
    return np.array(
        [rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-np.pi, np.pi), rng.uniform(-phi_lim, phi_lim)]
    )


class TestBasis:
    def test_zero_at_origin(self):
        assert np.allclose(basis(np.zeros(4)), 0.0)

    def test_monomials(self, rng):
        for _ in range(20):
            z = random_state(rng)
            s, y, th, phi = z
            expected = [s * y, s * th, s * phi, y * th, y * phi, th * phi, s * s, y * y, th * th]
            assert np.allclose(basis(z), expected)

    def test_jacobian_zero_at_origin(self):
        # gradient-free origin: the policy vanishes there for any weights
        assert np.allclose(basis_jacobian(np.zeros(4)), 0.0)

    def test_jacobian_matches_finite_differences(self, rng):
        # quadratic features: central differences are exact up to roundoff
        h = 1e-6
        worst = 0.0
        for _ in range(100):
            z = random_state(rng)
            J = basis_jacobian(z)
            for i in range(4):
                zp, zm = z.copy(), z.copy()
                zp[i] += h
                zm[i] -= h
                fd = (basis(zp) - basis(zm)) / (2 * h)
                worst = max(worst, np.abs(J[:, i] - fd).max() / max(1.0, np.abs(J[:, i]).max()))
        assert worst < 1e-6

    def test_batched_shapes(self):
        zs = np.zeros((7, 4))
        assert basis(zs).shape == (7, 9)
        assert basis_jacobian(zs).shape == (7, 9, 4)


class TestCostSpec:
    def test_qbar_embedding(self):
        Qb = IDENTITY_COST.Qbar
        assert Qb.shape == (4, 4)
        assert np.allclose(Qb[:3, :3], np.eye(3))
        assert np.allclose(Qb[3, :], 0.0) and np.allclose(Qb[:, 3], 0.0)

    def test_eigen_bounds(self):
        cost = CostSpec(Q=np.diag([2.0, 3.0, 5.0]), R=np.eye(2))
        assert cost.q_lower == pytest.approx(2.0)
        assert cost.q_upper == pytest.approx(5.0)

    def test_rejects_asymmetric(self):
        Q = np.eye(3)
        Q[0, 1] = 0.5
        with pytest.raises(ValueError):
            CostSpec(Q=Q, R=np.eye(2))

    def test_rejects_indefinite(self):
        with pytest.raises(ValueError):
            CostSpec(Q=np.diag([1.0, -1.0, 1.0]), R=np.eye(2))


class TestLocalCost:
    def test_zero_error_costs_nothing(self):
        for phi in (-0.7, 0.0, 0.7):
            assert local_cost([0, 0, 0, phi], [0, 0], IDENTITY_COST) == 0.0

    def test_phi_unweighted(self):
        assert local_cost([1.0, 0, 0, 0.7], [0, 0], IDENTITY_COST) == pytest.approx(1.0)

    def test_benchmark_initial_state(self):
        expected = 0.5**2 + 0.25**2 + (np.pi / 6) ** 2
        assert local_cost(ZETA0, [0, 0], IDENTITY_COST) == pytest.approx(expected)

    def test_nonnegative(self, rng):
        for _ in range(100):
            assert local_cost(random_state(rng), rng.uniform(-2, 2, 2), IDENTITY_COST) >= 0.0


class TestValueHat:
    def test_zero_at_origin(self, rng):
        assert value_hat(rng.uniform(-3, 3, 9), np.zeros(4)) == 0.0

    def test_linear_in_weights(self, rng):
        z = random_state(rng)
        w1, w2 = rng.uniform(-1, 1, 9), rng.uniform(-1, 1, 9)
        assert value_hat(w1 + 2.0 * w2, z) == pytest.approx(value_hat(w1, z) + 2.0 * value_hat(w2, z))

    def test_hand_evaluation_at_benchmark_state(self):
        s, y, th = -0.5, 0.25, -np.pi / 6
        expected = 0.5 * (y * th) + 0.5 * s * s + 1.0 * th * th
        assert value_hat(W0, ZETA0) == pytest.approx(expected)
        assert value_hat(CriticWeights(W0), ZETA0) == pytest.approx(expected)


class TestPolicyHat:
    def test_zero_weights(self):
        assert np.allclose(policy_hat(np.zeros(9), ZETA0, IDENTITY_COST), 0.0)

    def test_vanishes_at_origin_for_any_weights(self, rng):
        # the basis has no linear terms, so the on-path state is always an
        # equilibrium of the learned policy
        for _ in range(20):
            wa = rng.uniform(-5, 5, 9)
            assert np.allclose(policy_hat(wa, np.zeros(4), IDENTITY_COST), 0.0)

    def test_linear_scaling(self, rng):
        z = random_state(rng)
        wa = rng.uniform(-1, 1, 9)
        assert np.allclose(policy_hat(2.0 * wa, z, IDENTITY_COST), 2.0 * policy_hat(wa, z, IDENTITY_COST))

    def test_initial_weights_give_stabilizing_feedback(self):
        # near the origin the documented initial weights act like gains:
        # v_e ~ -s*cos(theta), w_e ~ -(0.25*y + theta)
        u = policy_hat(W0, [-0.01, 0.0, 0.0, 0.0], IDENTITY_COST)
        assert u[0] > 0.0 and u[1] == pytest.approx(0.0, abs=1e-12)
        u = policy_hat(W0, [0.0, 0.0, 0.02, 0.0], IDENTITY_COST)
        assert u[1] < 0.0

    def test_matches_value_gradient_descent_direction(self, rng):
        # finite-difference oracle: u = -1/2 R^-1 g^T grad(value_hat)
        h = 1e-6
        cost = CostSpec(Q=np.eye(3), R=np.array([[2.0, 0.3], [0.3, 1.0]]))
        for _ in range(20):
            z = random_state(rng)
            wa = rng.uniform(-2, 2, 9)
            grad = np.zeros(4)
            for i in range(4):
                zp, zm = z.copy(), z.copy()
                zp[i] += h
                zm[i] -= h
                grad[i] = (value_hat(wa, zp) - value_hat(wa, zm)) / (2 * h)
            expected = -0.5 * cost.Rinv @ input_g(z).T @ grad
            assert np.allclose(policy_hat(wa, z, cost), expected, atol=1e-6)


class TestBellman:
    def test_zero_critic_leaves_local_cost(self, rng):
        z = random_state(rng)
        wa = rng.uniform(-1, 1, 9)
        res = bellman_error(np.zeros(9), wa, z, LISSAJOUS, GAINS, IDENTITY_COST)
        u = policy_hat(wa, z, IDENTITY_COST)
        assert res.delta == pytest.approx(float(local_cost(z, u, IDENTITY_COST)))

    def test_gradient_wrt_critic_is_regressor(self, rng):
        h = 1e-6
        worst = 0.0
        for _ in range(50):
            z = random_state(rng)
            wc, wa = rng.uniform(-2, 2, 9), rng.uniform(-2, 2, 9)
            res = bellman_error(wc, wa, z, LISSAJOUS, GAINS, IDENTITY_COST)
            fd = np.zeros(9)
            for i in range(9):
                wp, wm = wc.copy(), wc.copy()
                wp[i] += h
                wm[i] -= h
                fd[i] = (
                    bellman_error(wp, wa, z, LISSAJOUS, GAINS, IDENTITY_COST).delta
                    - bellman_error(wm, wa, z, LISSAJOUS, GAINS, IDENTITY_COST).delta
                ) / (2 * h)
            worst = max(worst, np.abs(res.omega - fd).max() / max(1.0, np.abs(res.omega).max()))
        assert worst < 1e-6

    def test_normalized_regressor_bounded(self, rng):
        for _ in range(1000):
            z = random_state(rng)
            wa = rng.uniform(-3, 3, 9)
            res = bellman_error(rng.uniform(-3, 3, 9), wa, z, LISSAJOUS, GAINS, IDENTITY_COST)
            assert np.linalg.norm(res.omega / res.p) <= 1.0 + 1e-12

    def test_hamiltonian_identity(self, rng):
        # H* = 0, so the residual and the approximate Hamiltonian coincide
        for _ in range(25):
            z = random_state(rng)
            wc, wa = rng.uniform(-2, 2, 9), rng.uniform(-2, 2, 9)
            res = bellman_error(wc, wa, z, LISSAJOUS, GAINS, IDENTITY_COST)
            assert hamiltonian_hat(wc, wa, z, LISSAJOUS, GAINS, IDENTITY_COST) == res.delta

    def test_hamiltonian_with_zero_weights(self, rng):
        z = random_state(rng)
        expected = float(local_cost(z, [0, 0], IDENTITY_COST))
        assert hamiltonian_hat(np.zeros(9), np.zeros(9), z, LISSAJOUS, GAINS, IDENTITY_COST) == pytest.approx(
            expected
        )

    def test_residual_quadratic_in_actor_weights(self, rng):
        # delta along any actor-weight line is an exact parabola (the policy
        # is linear in the weights and enters the residual quadratically)
        z = random_state(rng)
        wc = rng.uniform(-1, 1, 9)
        wa0, d = rng.uniform(-1, 1, 9), rng.uniform(-1, 1, 9)

        def delta(t):
            return float(bellman_error(wc, wa0 + t * d, z, LISSAJOUS, GAINS, IDENTITY_COST).delta)

        c0, c1, c2 = delta(0.0), delta(1.0), delta(2.0)
        # fit on t = 0, 1, 2 and predict t = 5
        a = (c2 - 2 * c1 + c0) / 2.0
        b = c1 - c0 - a
        predicted = a * 25.0 + b * 5.0 + c0
        assert delta(5.0) == pytest.approx(predicted, rel=1e-9, abs=1e-9)


class TestCriticRate:
    def grid(self):
        return SampleGrid.default()

    def test_zero_gains_zero_rate(self, rng):
        gains_l = SimpleNamespace(eta_c1=0.0, eta_c2=0.0, eta_a=0.0)
        rate = critic_rate(
            rng.uniform(-1, 1, 9), rng.uniform(-1, 1, 9), ZETA0, self.grid(), gains_l, LISSAJOUS, GAINS, IDENTITY_COST
        )
        assert np.allclose(rate, 0.0)

    def test_single_point_grid_substitution(self, rng):
        # grid = {zeta} with eta_c2 = N = 1 collapses both terms
        wc, wa = rng.uniform(-1, 1, 9), rng.uniform(-1, 1, 9)
        point_grid = SimpleNamespace(points=ZETA0[None, :], n=1)
        gains_l = SimpleNamespace(eta_c1=0.5, eta_c2=1.0, eta_a=1.0)
        rate = critic_rate(wc, wa, ZETA0, point_grid, gains_l, LISSAJOUS, GAINS, IDENTITY_COST)
        res = bellman_error(wc, wa, ZETA0, LISSAJOUS, GAINS, IDENTITY_COST)
        expected = -(0.5 + 1.0) * res.omega * res.delta / res.p
        assert np.allclose(rate, expected, rtol=1e-12)

    def test_grid_term_is_objective_gradient(self, rng):
        # with the instantaneous term off, the rate is the negative gradient
        # of (eta_c2 / 2N) sum_j delta_j^2 / p_j  (p_j does not depend on wc)
        grid = self.grid()
        wc, wa = rng.uniform(-1, 1, 9), rng.uniform(-1, 1, 9)
        eta_c2 = 10.0
        gains_l = SimpleNamespace(eta_c1=0.0, eta_c2=eta_c2, eta_a=1.0)
        rate = critic_rate(wc, wa, ZETA0, grid, gains_l, LISSAJOUS, GAINS, IDENTITY_COST)

        def objective(w):
            total = 0.0
            for zj in grid.points:
                res = bellman_error(w, wa, zj, LISSAJOUS, GAINS, IDENTITY_COST)
                total += res.delta**2 / res.p
            return eta_c2 / (2.0 * grid.n) * total

        h = 1e-6
        fd = np.zeros(9)
        for i in range(9):
            wp, wm = wc.copy(), wc.copy()
            wp[i] += h
            wm[i] -= h
            fd[i] = (objective(wp) - objective(wm)) / (2 * h)
        assert np.abs(rate + fd).max() / max(1.0, np.abs(fd).max()) < 1e-6

    def test_vectorized_grid_matches_pointwise_loop(self, rng):
        grid = self.grid()
        wc, wa = rng.uniform(-1, 1, 9), rng.uniform(-1, 1, 9)
        ws = GridWorkspace(grid, LISSAJOUS, GAINS, IDENTITY_COST)
        dj, oj, pj = ws.residuals(wc, wa)
        for idx in (0, 17, 40, 80):
            res = bellman_error(wc, wa, grid.points[idx], LISSAJOUS, GAINS, IDENTITY_COST)
            assert dj[idx] == pytest.approx(res.delta, rel=1e-12)
            assert np.allclose(oj[idx], res.omega, rtol=1e-12)
            assert pj[idx] == pytest.approx(res.p, rel=1e-12)


class TestActorRate:
    def test_settled_pair_is_stationary(self, rng):
        w = rng.uniform(-1, 1, 9)
        assert np.allclose(actor_rate(w, w, 5.0, bound=10.0), 0.0)

    def test_interior_passthrough(self, rng):
        wa, wc = rng.uniform(-0.5, 0.5, 9), rng.uniform(-0.5, 0.5, 9)
        assert np.allclose(actor_rate(wa, wc, 5.0, bound=100.0), -5.0 * (wa - wc))

    def test_boundary_blocks_outward_growth(self, rng):
        bound = 2.0
        for _ in range(200):
            w = rng.standard_normal(9)
            wa = bound * w / np.linalg.norm(w)
            wc = rng.uniform(-3, 3, 9)
            rate = actor_rate(wa, wc, 5.0, bound=bound)
            raw = -5.0 * (wa - wc)
            assert float(wa @ rate) <= 1e-12 * max(1.0, np.abs(raw).max())
            assert np.linalg.norm(rate) <= np.linalg.norm(raw) + 1e-12

    def test_project_rate_smoothstep_interior_edge(self):
        w = np.zeros(9)
        w[0] = 0.98
        raw = np.ones(9)
        assert np.allclose(project_rate(w, raw, 1.0, layer_frac=0.01), raw)

    def test_uses_actor_weight_bound(self):
        wa = ActorWeights(np.ones(9), bound=1.0)
        rate = actor_rate(wa, np.zeros(9), 1.0)
        assert float(wa.w @ rate) <= 1e-12


class TestActorWeights:
    def test_clamped_to_ball_at_construction(self):
        wa = ActorWeights(W0, bound=0.9 * float(np.linalg.norm(W0)))
        assert np.linalg.norm(wa.w) == pytest.approx(wa.bound)
        # direction preserved
        assert np.allclose(wa.w / np.linalg.norm(wa.w), W0 / np.linalg.norm(W0))

    def test_interior_untouched(self):
        wa = ActorWeights(W0, bound=100.0)
        assert np.allclose(wa.w, W0)

    def test_invalid_bound(self):
        with pytest.raises(ValueError):
            ActorWeights(W0, bound=0.0)


class TestSampleGrid:
    def test_default_is_symmetric_81(self):
        grid = SampleGrid.default()
        assert grid.n == 81
        assert grid.is_symmetric()

    def test_asymmetric_detected(self):
        grid = SampleGrid.from_axes((0.0, 0.5, 1.0), (-1, 0, 1), (-1, 0, 1), (-0.5, 0, 0.5))
        assert not grid.is_symmetric()

    def test_too_few_points(self):
        with pytest.raises(ValueError):
            SampleGrid(points=np.zeros((4, 4)))

    def test_saturated_phi_rejected(self):
        pts = np.zeros((9, 4))
        pts[0, 3] = 1.0
        with pytest.raises(ValueError):
            SampleGrid(points=pts)


class TestRankCheck:
    def test_default_grid_full_rank(self):
        # regression baseline for the default grid at the documented
        # initial actor weights
        rank, c_lower = rank_check(SampleGrid.default(), W0, LISSAJOUS, GAINS, IDENTITY_COST)
        assert rank == 9
        assert c_lower > 0.0
        assert c_lower == pytest.approx(0.5419394736235246, rel=1e-6)

    def test_single_point_rank_one(self):
        point_grid = SimpleNamespace(points=ZETA0[None, :], n=1)
        rank, _ = rank_check(point_grid, W0, LISSAJOUS, GAINS, IDENTITY_COST)
        assert rank == 1

    def test_duplicates_do_not_raise_rank(self):
        pts = np.tile(ZETA0[None, :], (12, 1))
        dup = SimpleNamespace(points=pts, n=12)
        rank, _ = rank_check(dup, W0, LISSAJOUS, GAINS, IDENTITY_COST)
        assert rank == 1

    def test_regressor_sum_symmetric_psd(self, rng):
        ws = GridWorkspace(SampleGrid.default(), LISSAJOUS, GAINS, IDENTITY_COST)
        M = ws.regressor_sum(rng.uniform(-2, 2, 9))
        assert np.allclose(M, M.T, atol=1e-12)
        assert np.linalg.eigvalsh(M)[0] > -1e-12


class TestGainConditions:
    LEARN = LearningGains(eta_c1=0.5, eta_c2=10.0, eta_a=5.0)

    def test_zero_eps_limit(self):
        rep = gain_condition_check(IDENTITY_COST, self.LEARN, c_lower=1.0, n_grid=81, eps_bound=0.0, lf_estimate=2.0)
        assert rep.cond1_rhs == 0.0
        assert rep.cond1_ok  # q_lower = 1 > 0
        assert rep.cond2_rhs == pytest.approx(81 * 5.0 / (2 * 10.0))

    def test_benchmark_margin_arithmetic(self):
        c_lower = 1.7
        rep = gain_condition_check(IDENTITY_COST, self.LEARN, c_lower, 81, 0.0, 0.45)
        assert rep.cond2_margin == pytest.approx(c_lower - 81 * 5.0 / (2 * 10.0))

    def test_condition2_fails_for_large_actor_gain(self):
        margins = []
        for eta_a in (0.01, 0.1, 1.0, 10.0):
            learn = LearningGains(eta_c1=0.5, eta_c2=10.0, eta_a=eta_a)
            rep = gain_condition_check(IDENTITY_COST, learn, c_lower=1.0, n_grid=81, eps_bound=0.0, lf_estimate=1.0)
            margins.append(rep.cond2_margin)
        assert margins == sorted(margins, reverse=True)
        assert margins[0] > 0.0 > margins[-1]


class TestEstimateLf:
    def test_positive_and_deterministic(self):
        a = estimate_lf(LISSAJOUS, GAINS)
        b = estimate_lf(LISSAJOUS, GAINS)
        assert a == b > 0.0
