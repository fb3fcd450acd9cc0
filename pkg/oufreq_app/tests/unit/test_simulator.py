from oufreq_app.src.core.signal import evaluate_array
from oufreq_app.src.core.simulator import derive_seed, ou_covariance, ou_transition, simulate
from oufreq_app.src.models.model_config import ModelConfig
from oufreq_app.src.models.signal_spec import SignalSpec
from oufreq_app.src.utils.errors import ConfigurationError
import math
import os
import sys
import unittest

import numpy as np

# Add parent directory to path for importing from the main app
sys.path.insert(0, os.path.abspath(
    os.path.join(os.path.dirname(__file__), '../../..')))


class TestModelConfig(unittest.TestCase):
    """Parameter validation and step resolution."""

    def test_theta_must_lie_inside_interval(self):
        with self.assertRaises(ConfigurationError):
            ModelConfig(theta=2.0)

    def test_invalid_parameters(self):
        for kwargs in ({'a': 0.0}, {'b': -1.0}, {'epsilon': 0.0}, {'T': -1.0}, {'seed': -1}):
            with self.subTest(kwargs=kwargs):
                with self.assertRaises(ConfigurationError):
                    ModelConfig(**kwargs)

    def test_auto_step_respects_guards(self):
        config = ModelConfig(epsilon=0.1, T=2.0)
        h, n_steps = config.resolve_step(3.0)
        self.assertLessEqual(h, 0.1 / (20 * 3.0) * (1 + 1e-12))
        self.assertLessEqual(h, config.T / 100)
        self.assertAlmostEqual(h * n_steps, config.T)

    def test_no_diffusion_uses_coarse_step(self):
        config = ModelConfig(b=0.0, T=5.0)
        self.assertEqual(config.resolve_step(3.0), (0.05, 100))

    def test_explicit_step_violating_stiffness_guard(self):
        config = ModelConfig(epsilon=0.01, T=1.0, h=0.01)
        with self.assertRaises(ConfigurationError) as ctx:
            config.resolve_step(3.0)
        self.assertIn("stiffness", str(ctx.exception))

    def test_with_epsilon_drops_explicit_step(self):
        config = ModelConfig(h=0.0001, T=1.0)
        self.assertIsNone(config.with_epsilon(0.05).h)

    def test_round_trip_dict(self):
        config = ModelConfig(theta=1.2, seed=9)
        self.assertEqual(ModelConfig.from_dict(config.to_dict()), config)


class TestSimulator(unittest.TestCase):
    """Reproducible simulation of (X, Y)."""

    def setUp(self):
        self.config = ModelConfig(epsilon=0.1, T=2.0, seed=123)
        self.spec = SignalSpec()

    def test_same_seed_is_bitwise_identical(self):
        first = simulate(self.config, self.spec)
        second = simulate(self.config, self.spec)
        self.assertTrue(np.array_equal(first.X, second.X))
        self.assertTrue(np.array_equal(first.Y, second.Y))
        self.assertTrue(np.array_equal(first.dW, second.dW))

    def test_different_seeds_differ(self):
        first = simulate(self.config, self.spec)
        second = simulate(self.config.with_seed(124), self.spec)
        self.assertFalse(np.array_equal(first.dW, second.dW))

    def test_shapes_and_grid(self):
        path = simulate(self.config, self.spec)
        n_steps = path.n_steps
        self.assertEqual(len(path.times), n_steps + 1)
        self.assertEqual(len(path.X), n_steps + 1)
        self.assertEqual(len(path.Y), n_steps + 1)
        self.assertEqual(len(path.dW), n_steps)
        self.assertEqual(path.X[0], 0.0)
        self.assertEqual(path.Y[0], self.config.y0)
        self.assertAlmostEqual(path.T, self.config.T)

    def test_increment_identity(self):
        path = simulate(self.config, self.spec)
        f_left, _, _ = evaluate_array(self.spec, self.config.theta * path.times[:-1])
        np.testing.assert_allclose(np.diff(path.X), path.dX, atol=1e-12)
        np.testing.assert_allclose(path.dX, f_left * path.Y[:-1] * path.h + self.config.epsilon * path.dW,
                                   atol=1e-15)

    def test_deterministic_hidden_state_without_diffusion(self):
        config = ModelConfig(b=0.0, y0=1.5, T=3.0, seed=1)
        path = simulate(config, self.spec)
        np.testing.assert_allclose(path.Y, 1.5 * np.exp(-config.a * path.times), rtol=1e-10)

    def test_stationary_variance(self):
        config = ModelConfig(a=1.0, b=1.0, epsilon=1.0, y0=0.0, T=2000.0, seed=2024)
        path = simulate(config, self.spec)
        tail = path.Y[path.times > 10.0]
        self.assertAlmostEqual(float(tail.var()), ou_covariance(1.0, 1.0, 0.0), delta=0.1)

    def test_stationary_autocovariance(self):
        config = ModelConfig(a=1.0, b=1.0, epsilon=1.0, y0=0.0, T=2000.0, seed=31)
        path = simulate(config, self.spec)
        tail = path.Y[path.times > 10.0]
        length = config.T - 10.0
        for tau in (0.0, 0.5, 1.0):
            with self.subTest(tau=tau):
                lag = int(round(tau / path.h))
                product = tail[:tail.size - lag] * tail[lag:]
                self.assertAlmostEqual(float(product.mean()), ou_covariance(1.0, 1.0, tau),
                                       delta=4.0 * math.sqrt(0.5 / length))

    def test_variance_at_fixed_time(self):
        config = ModelConfig(epsilon=1.0, T=5.0)
        finals = np.array([simulate(config.with_seed(seed), self.spec).Y[-1] for seed in range(10_000)])
        # Y_T = e^{-aT} y0 + N(0, b^2 (1 - e^{-2aT}) / (2a)) = N(e^{-5}, 0.49998)
        expected = 0.5 * (1.0 - math.exp(-10.0))
        standard_error = expected * math.sqrt(2.0 / finals.size)
        self.assertAlmostEqual(float(finals.var(ddof=1)), expected, delta=3.0 * standard_error)

    def test_quadratic_variation_of_observations(self):
        config = ModelConfig(epsilon=0.5, T=1.0, h=2.5e-5, seed=8)
        path = simulate(config, self.spec)
        quadratic_variation = float(np.sum(path.dX ** 2))
        self.assertAlmostEqual(quadratic_variation / (config.epsilon ** 2 * config.T), 1.0, delta=0.05)

    def test_observed_view_hides_state(self):
        observed = simulate(self.config, self.spec).observed()
        self.assertFalse(hasattr(observed, 'Y'))

    def test_coarsen(self):
        path = simulate(self.config, self.spec)
        coarse = path.coarsen(2)
        self.assertEqual(coarse.n_steps, path.n_steps // 2)
        np.testing.assert_allclose(np.diff(coarse.X), coarse.dX, atol=1e-12)
        self.assertAlmostEqual(coarse.h, 2 * path.h)
        with self.assertRaises(ConfigurationError):
            path.coarsen(7)


class TestHelpers(unittest.TestCase):
    """OU transition and seed derivation."""

    def test_ou_transition(self):
        decay, noise_sd = ou_transition(2.0, 1.0, 0.1)
        self.assertAlmostEqual(decay, math.exp(-0.2))
        self.assertAlmostEqual(noise_sd ** 2, (1 - math.exp(-0.4)) / 4.0)

    def test_ou_covariance(self):
        self.assertEqual(ou_covariance(1.0, 1.0, 0.0), 0.5)
        self.assertAlmostEqual(ou_covariance(1.0, 2.0, -1.0), 2.0 * math.exp(-1.0))
        with self.assertRaises(ConfigurationError):
            ou_covariance(0.0, 1.0, 0.0)

    def test_derive_seed(self):
        self.assertEqual(derive_seed(0, 1, 5), 4294967301)
        seeds = {derive_seed(42, e, r) for e in range(4) for r in range(50)}
        self.assertEqual(len(seeds), 200)


if __name__ == '__main__':
    unittest.main()
