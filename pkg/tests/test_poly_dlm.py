import unittest

import numpy as np
import pytest

from dynmix.errors import InvalidDimensionError, InvalidIndexError
from dynmix.models import DlmPriors, PolyDlmState
from dynmix.services import poly_dlm
from dynmix.services.banded_linalg import cholesky


def dense(A) -> np.ndarray:
    T = A.dim
    out = np.diag(A.bands[0])
    for d in range(1, min(A.bandwidth, T - 1) + 1):
        sub = np.diag(A.bands[d, : T - d], k=-d)
        out = out + sub + sub.T
    return out


def random_state(seed: int, p: int, T: int) -> PolyDlmState:
    rng = np.random.default_rng(seed)
    return PolyDlmState(
        theta=rng.normal(size=(p, T)),
        theta0=rng.normal(size=p),
        W=rng.uniform(0.3, 2.0, size=p),
        V=float(rng.uniform(0.3, 2.0)),
    )


def recursion_quadratic(state: PolyDlmState):
    """Precision and linear term of the states under theta_t = G theta_(t-1) + omega_t.

    States are flattened block-major, matching ``state.theta.reshape(-1)``.
    """
    p, T = state.p, state.T
    _, G = poly_dlm.canonical_system(p)
    n = p * T
    A = np.zeros((n, n))
    c = np.zeros(n)
    weights = np.zeros(n)
    for t in range(T):
        for j in range(p):
            row = j * T + t
            A[row, row] += 1.0
            weights[row] = 1.0 / state.W[j]
            for l in range(p):
                if G[j, l] == 0.0:
                    continue
                if t == 0:
                    c[row] += G[j, l] * state.theta0[l]
                else:
                    A[row, l * T + t - 1] -= G[j, l]
    Q = A.T @ np.diag(weights) @ A
    h = A.T @ (weights * c)
    return Q, h


def block_conditional(Q: np.ndarray, h: np.ndarray, x: np.ndarray, k: int, T: int):
    idx = np.arange((k - 1) * T, k * T)
    rest = np.setdiff1d(np.arange(x.size), idx)
    Qkk = Q[np.ix_(idx, idx)]
    rhs = h[idx] - Q[np.ix_(idx, rest)] @ x[rest]
    return Qkk, np.linalg.solve(Qkk, rhs)


class BlockConditionalTests(unittest.TestCase):
    def test_upper_blocks_match_recursion_oracle(self):
        for p, T in ((2, 5), (3, 6), (4, 4)):
            state = random_state(p * 10 + T, p, T)
            context = poly_dlm.DlmContext.for_length(T)
            Q, h = recursion_quadratic(state)
            x = state.theta.reshape(-1)
            for k in range(2, p + 1):
                precision, b_vec = poly_dlm.theta_block_system(k, state, context)
                Qkk, mean = block_conditional(Q, h, x, k, T)
                np.testing.assert_allclose(dense(precision), Qkk, atol=1e-10)
                np.testing.assert_allclose(cholesky(precision).solve(b_vec), mean, atol=1e-10)

    def test_first_block_with_gaussian_observations_matches_oracle(self):
        for p, T in ((1, 4), (2, 6), (3, 5)):
            state = random_state(p + T, p, T)
            y = np.random.default_rng(7).normal(size=T)
            context = poly_dlm.DlmContext.for_length(T)
            Q, h = recursion_quadratic(state)
            Q[:T, :T] += np.eye(T) / state.V
            h[:T] += y / state.V
            precision, b_vec = poly_dlm.first_block_system(state, y, 1.0 / state.V, context)
            Qkk, mean = block_conditional(Q, h, state.theta.reshape(-1), 1, T)
            np.testing.assert_allclose(dense(precision), Qkk, atol=1e-10)
            np.testing.assert_allclose(cholesky(precision).solve(b_vec), mean, atol=1e-10)

    def test_zero_noise_draw_is_the_conditional_mean(self):
        state = random_state(1, 3, 7)
        context = poly_dlm.DlmContext.for_length(7)
        precision, b_vec = poly_dlm.theta_block_system(2, state, context)
        expected = cholesky(precision).solve(b_vec)
        draw = poly_dlm.sample_theta_block(np.random.default_rng(0), 2, state, context, noise=np.zeros(7))
        np.testing.assert_array_equal(draw, expected)
        np.testing.assert_array_equal(state.block(2), expected)

    def test_gaussian_first_block_uses_observation_precision(self):
        state = random_state(2, 2, 5)
        y = np.linspace(-1.0, 1.0, 5)
        context = poly_dlm.DlmContext.for_length(5)
        precision, b_vec = poly_dlm.first_block_system(state, y, 1.0 / state.V, context)
        draw = poly_dlm.sample_theta_block_gaussian(np.random.default_rng(0), state, y, context, noise=np.zeros(5))
        np.testing.assert_allclose(draw, cholesky(precision).solve(b_vec))

    def test_vague_evolution_returns_data(self):
        state = random_state(3, 2, 6)
        state.W[:] = 1e12
        y = np.arange(6.0)
        context = poly_dlm.DlmContext.for_length(6)
        draw = poly_dlm.sample_first_block(np.random.default_rng(0), state, y, 1.0, context, noise=np.zeros(6))
        np.testing.assert_allclose(draw, y, atol=1e-6)

    def test_block_index_is_checked(self):
        state = random_state(4, 2, 3)
        context = poly_dlm.DlmContext.for_length(3)
        with self.assertRaises(InvalidIndexError):
            poly_dlm.theta_block_system(1, state, context)
        with self.assertRaises(InvalidIndexError):
            poly_dlm.theta_block_system(3, state, context)
        with self.assertRaises(InvalidDimensionError):
            poly_dlm.first_block_system(state, np.zeros(4), 1.0, context)


class HyperparameterConditionalTests(unittest.TestCase):
    def test_theta0_matches_dense_conditioning(self):
        p, T = 3, 4
        state = random_state(8, p, T)
        priors = DlmPriors.from_dict({"theta0_mean": [0.5, -0.2, 0.1], "theta0_var": [2.0, 1.5, 0.7]}, p)
        _, G = poly_dlm.canonical_system(p)
        D = np.diag(1.0 / state.W)
        Q = G.T @ D @ G + np.diag(1.0 / priors.theta0_var)
        h = G.T @ D @ state.theta[:, 0] + priors.theta0_mean / priors.theta0_var
        for k in range(1, p + 1):
            i = k - 1
            rest = [j for j in range(p) if j != i]
            expected_var = 1.0 / Q[i, i]
            expected_mean = expected_var * (h[i] - Q[i, rest] @ state.theta0[rest])
            mean, var = poly_dlm.theta0_posterior(k, state, priors)
            self.assertAlmostEqual(var, expected_var, places=12)
            self.assertAlmostEqual(mean, expected_mean, places=12)

    def test_theta0_vague_prior_last_block(self):
        state = random_state(9, 2, 5)
        priors = DlmPriors.from_dict({"theta0_var": 1e300}, 2)
        mean, var = poly_dlm.theta0_posterior(2, state, priors)
        W1, W2 = state.W
        expected_var = 1.0 / (1.0 / W1 + 1.0 / W2)
        expected_mean = expected_var * ((state.theta[0, 0] - state.theta0[0]) / W1 + state.theta[1, 0] / W2)
        self.assertAlmostEqual(var, expected_var, places=10)
        self.assertAlmostEqual(mean, expected_mean, places=10)

    def test_w_posterior_uses_recursion_residuals(self):
        p, T = 2, 6
        state = random_state(10, p, T)
        priors = DlmPriors.from_dict({"w_shape": [1.0, 2.0], "w_rate": [0.5, 0.25]}, p)
        _, G = poly_dlm.canonical_system(p)
        stacked = poly_dlm.stack_states(state.theta)
        previous = np.vstack([state.theta0, stacked[:-1]])
        residuals = stacked - previous @ G.T
        for k in (1, 2):
            shape, rate = poly_dlm.w_posterior(k, state, priors)
            self.assertAlmostEqual(shape, priors.w_shape[k - 1] + T / 2.0)
            self.assertAlmostEqual(rate, priors.w_rate[k - 1] + 0.5 * np.sum(residuals[:, k - 1] ** 2), places=10)

    def test_v_posterior(self):
        state = random_state(11, 1, 4)
        y = state.block(1) + np.array([1.0, -1.0, 2.0, 0.0])
        shape, rate = poly_dlm.v_posterior(state, DlmPriors.default(1), y)
        self.assertAlmostEqual(shape, 0.01 + 2.0)
        self.assertAlmostEqual(rate, 0.01 + 3.0)

    def test_sample_w_stores_inverse_gamma_draw(self):
        state = random_state(12, 2, 5)
        priors = DlmPriors.default(2)
        shape, rate = poly_dlm.w_posterior(1, state, priors)
        expected = 1.0 / np.random.default_rng(5).gamma(shape, 1.0 / rate)
        self.assertEqual(poly_dlm.sample_W(np.random.default_rng(5), 1, state, priors), expected)
        self.assertEqual(state.W[0], expected)


class PriorStructureTests(unittest.TestCase):
    def test_canonical_system(self):
        F, G = poly_dlm.canonical_system(3)
        np.testing.assert_array_equal(F, [1.0, 0.0, 0.0])
        np.testing.assert_array_equal(G, [[1.0, 1.0, 0.0], [0.0, 1.0, 1.0], [0.0, 0.0, 1.0]])
        with self.assertRaises(InvalidDimensionError):
            poly_dlm.canonical_system(0)

    def test_stack_and_reorder_are_inverse(self):
        theta = np.arange(12.0).reshape(3, 4)
        stacked = poly_dlm.stack_states(theta)
        self.assertEqual(stacked.shape, (4, 3))
        np.testing.assert_array_equal(poly_dlm.reorder_states(stacked), theta)

    def test_prior_mean_vector(self):
        state = PolyDlmState(theta=[[0.0, 0.0, 0.0], [1.0, 2.0, 3.0]], theta0=[0.5, 0.25], W=[1.0, 1.0])
        np.testing.assert_allclose(poly_dlm.prior_mean_vector(1, state), [0.75, 1.75, 3.75])
        np.testing.assert_allclose(poly_dlm.prior_mean_vector(2, state), [0.25, 0.25, 0.25])

    def test_reordered_prior_matches_recursion_moments(self):
        for p in (1, 2, 3):
            for T in (1, 4, 8):
                state = random_state(100 * p + T, p, T)
                Q, h = recursion_quadratic(state)
                cov = np.linalg.inv(Q)
                mean = cov @ h
                # Reordered form: block k = mu_k(block k+1) + H^{-1} sqrt(W_k) eps_k.
                H_inv = np.tril(np.ones((T, T)))
                lag = H_inv - np.eye(T)
                loadings = [None] * p
                offsets = [None] * p
                for k in range(p, 0, -1):
                    own = np.zeros((T, p * T))
                    own[:, (k - 1) * T:k * T] = H_inv * np.sqrt(state.W[k - 1])
                    if k == p:
                        offsets[k - 1] = np.full(T, state.theta0[k - 1])
                        loadings[k - 1] = own
                    else:
                        offsets[k - 1] = state.theta0[k - 1] + state.theta0[k] + lag @ offsets[k]
                        loadings[k - 1] = own + lag @ loadings[k]
                L = np.vstack(loadings)
                np.testing.assert_allclose(np.concatenate(offsets), mean, atol=1e-9)
                np.testing.assert_allclose(L @ L.T, cov, atol=1e-9)

    def test_simulate_prior_shapes_and_positivity(self):
        priors = DlmPriors.from_dict({"w_shape": 20.0, "w_rate": 2.0, "v_shape": 20.0, "v_rate": 2.0}, 2)
        state, y = poly_dlm.simulate_prior(np.random.default_rng(0), 2, 30, priors)
        self.assertEqual(state.theta.shape, (2, 30))
        self.assertEqual(y.shape, (30,))
        self.assertTrue(np.all(state.W > 0) and state.V > 0)
        self.assertTrue(np.all(np.isfinite(state.theta)))

    def test_simulate_prior_is_seeded(self):
        priors = DlmPriors.default(2)
        a, ya = poly_dlm.simulate_prior(np.random.default_rng(4), 2, 10, priors)
        b, yb = poly_dlm.simulate_prior(np.random.default_rng(4), 2, 10, priors)
        np.testing.assert_array_equal(a.theta, b.theta)
        np.testing.assert_array_equal(ya, yb)


def test_state_validates_shapes():
    with pytest.raises(InvalidDimensionError):
        PolyDlmState(theta=np.zeros((2, 3)), theta0=[0.0], W=[1.0, 1.0])


def test_initial_values_past_last_block_read_as_zero():
    state = PolyDlmState(theta=np.zeros((1, 3)), theta0=[2.0], W=[1.0])
    assert state.initial_value(2) == 0.0
    np.testing.assert_array_equal(state.next_block(1), np.zeros(3))
