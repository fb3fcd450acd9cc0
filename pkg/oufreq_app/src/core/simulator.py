"""
Path simulator for OUFreq.
Generates reproducible sample paths of

    dX = f(theta t) Y dt + eps dW,  X_0 = 0
    dY = -a Y dt + b dV,            Y_0 = y0

on a uniform grid. Y uses the exact OU transition, X the left-point Euler step.
"""

import logging
import math
import time
from typing import Tuple

import numpy as np
from scipy import signal as sp_signal

from ..models.model_config import SEED_MASK, ModelConfig, SamplePath
from ..models.signal_spec import SignalSpec
from ..utils.errors import ConfigurationError, StiffnessError
from .signal import bounds, evaluate_array

# Set up logger for this module
logger = logging.getLogger(__name__)


def ou_covariance(a: float, b: float, tau: float) -> float:
    """
    Stationary OU autocovariance R(tau) = b^2/(2a) e^{-a|tau|}.

    Args:
        a: Mean-reversion rate, > 0
        b: Diffusion
        tau: Lag

    Returns:
        float: Covariance at lag tau

    Example:
        >>> ou_covariance(1.0, 1.0, 0.0)
        0.5
    """
    if a <= 0:
        raise ConfigurationError(f"ou_covariance: a must be > 0, got {a}")
    return b * b / (2.0 * a) * math.exp(-a * abs(tau))


def ou_transition(a: float, b: float, h: float) -> Tuple[float, float]:
    """Exact one-step OU transition: (decay e^{-ah}, noise sd b sqrt((1 - e^{-2ah})/(2a)))."""
    decay = math.exp(-a * h)
    noise_sd = b * math.sqrt(-math.expm1(-2.0 * a * h) / (2.0 * a))
    return decay, noise_sd


def derive_seed(base_seed: int, epsilon_index: int, replication: int) -> int:
    """
    Seed of one Monte Carlo work unit.

    Injective in (epsilon_index, replication) for replication < 2^32 and
    epsilon_index < 2^32.

    Example:
        >>> derive_seed(0, 1, 5)
        4294967301
    """
    if not (0 <= replication < 2 ** 32 and 0 <= epsilon_index < 2 ** 32):
        raise ConfigurationError("derive_seed: indices must lie in [0, 2^32)")
    return (int(base_seed) ^ (int(epsilon_index) << 32) ^ int(replication)) & SEED_MASK


def simulate(config: ModelConfig, spec: SignalSpec) -> SamplePath:
    """
    Simulate one path.

    The W and V streams are spawned from one SeedSequence so the same seed
    always produces a bitwise-identical path.

    Args:
        config: Model configuration (theta, a, b, eps, y0, T, h, seed)
        spec: Signal specification

    Returns:
        SamplePath: times, X, Y, dX, dW, dV

    Raises:
        ConfigurationError: Step violates the stiffness guard
        StiffnessError: Non-finite output
    """
    start = time.perf_counter()
    _, sup_f = bounds(spec)
    h, n_steps = config.resolve_step(sup_f)
    times = np.linspace(0.0, config.T, n_steps + 1)

    w_seq, v_seq = np.random.SeedSequence(config.seed).spawn(2)
    zeta = np.random.default_rng(w_seq).standard_normal(n_steps)
    xi = np.random.default_rng(v_seq).standard_normal(n_steps)
    root_h = math.sqrt(h)
    dW = root_h * zeta
    dV = root_h * xi

    # Y[i+1] = decay * Y[i] + noise_sd * xi[i], run as a first-order recursive filter
    decay, noise_sd = ou_transition(config.a, config.b, h)
    y_tail, _ = sp_signal.lfilter([1.0], [1.0, -decay], noise_sd * xi, zi=[decay * config.y0])
    Y = np.concatenate(([config.y0], y_tail))

    f_left, _, _ = evaluate_array(spec, config.theta * times[:-1])
    dX = f_left * Y[:-1] * h + config.epsilon * dW
    X = np.concatenate(([0.0], np.cumsum(dX)))

    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(Y))):
        raise StiffnessError(
            f"simulate: non-finite path (h={h:.6g}, eps={config.epsilon}); check the stiffness guard")

    logger.debug(f"Simulated path: N={n_steps}, h={h:.6g}, eps={config.epsilon}, seed={config.seed}, "
                 f"{time.perf_counter() - start:.3f}s")
    return SamplePath(times=times, X=X, Y=Y, dX=dX, dW=dW, dV=dV,
                      epsilon=config.epsilon, seed=config.seed,
                      meta={'theta': config.theta, 'h': h})
