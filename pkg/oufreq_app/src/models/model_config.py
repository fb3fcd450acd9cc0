"""
Model configuration and sample path types for OUFreq.
Holds the parameters of the partially observed system

    dX = f(theta t) Y dt + eps dW,   dY = -a Y dt + b dV

and the simulated trajectories on a uniform grid.
"""

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Any, Dict, Optional, Tuple

import numpy as np

from ..utils.errors import ConfigurationError
from ..utils.file_loader import provenance_line, write_csv

logger = logging.getLogger(__name__)

# Seeds are 64-bit unsigned integers
SEED_MASK = (1 << 64) - 1

# Filter time constant is eps/(b f); the step must resolve it twenty times over
STIFFNESS_FACTOR = 20.0


@dataclass(frozen=True)
class ModelConfig:
    """
    Parameters of one experiment.

    Attributes:
        theta: True frequency (cycles per unit time)
        theta_interval: Open parameter interval (alpha, beta)
        a: Mean-reversion rate of the hidden OU state, > 0
        b: Diffusion of the hidden state, >= 0
        epsilon: Observation noise level, > 0
        y0: Initial hidden state
        T: Horizon, > 0
        h: Grid step, or None for the largest step satisfying the guards
        seed: 64-bit unsigned base seed
    """
    theta: float = 1.0
    theta_interval: Tuple[float, float] = (0.5, 1.5)
    a: float = 1.0
    b: float = 1.0
    epsilon: float = 0.02
    y0: float = 1.0
    T: float = 10.0
    h: Optional[float] = None
    seed: int = 0

    def __post_init__(self) -> None:
        interval = tuple(float(v) for v in self.theta_interval)
        if len(interval) != 2:
            raise ConfigurationError("model.theta_interval: expected [alpha, beta]")
        object.__setattr__(self, "theta_interval", interval)
        alpha, beta = interval

        for name in ("theta", "a", "b", "epsilon", "y0", "T"):
            if not math.isfinite(getattr(self, name)):
                raise ConfigurationError(f"model.{name}: must be finite")
        if not alpha < self.theta < beta:
            raise ConfigurationError(
                f"model.theta: {self.theta} is outside the interval ({alpha}, {beta})")
        if self.a <= 0:
            raise ConfigurationError(f"model.a: must be > 0, got {self.a}")
        if self.b < 0:
            raise ConfigurationError(f"model.b: must be >= 0, got {self.b}")
        if self.epsilon <= 0:
            raise ConfigurationError(f"model.epsilon: must be > 0, got {self.epsilon}")
        if self.T <= 0:
            raise ConfigurationError(f"model.T: must be > 0, got {self.T}")
        if self.h is not None:
            if not (self.h > 0 and self.h <= self.T / 100 * (1 + 1e-12)):
                raise ConfigurationError(
                    f"model.h: must satisfy 0 < h <= T/100 = {self.T / 100}, got {self.h}")
        if not 0 <= int(self.seed) <= SEED_MASK:
            raise ConfigurationError(f"model.seed: must be a 64-bit unsigned integer, got {self.seed}")
        object.__setattr__(self, "seed", int(self.seed))

    @property
    def alpha(self) -> float:
        return self.theta_interval[0]

    @property
    def beta(self) -> float:
        return self.theta_interval[1]

    def max_step(self, sup_f: float) -> float:
        """Largest admissible step: min(T/100, eps/(20 b K)) with K = sup f."""
        h_max = self.T / 100
        if self.b > 0:
            h_max = min(h_max, self.epsilon / (STIFFNESS_FACTOR * self.b * sup_f))
        return h_max

    def resolve_step(self, sup_f: float) -> Tuple[float, int]:
        """
        Resolve the grid step for a signal with supremum sup_f.

        Args:
            sup_f: Supremum K of the modulation

        Returns:
            Tuple[float, int]: (h, N) with N*h = T

        Raises:
            ConfigurationError: An explicit h violates the stiffness guard
        """
        h_max = self.max_step(sup_f)
        if self.h is None:
            n_steps = int(math.ceil(self.T / h_max - 1e-9))
            return self.T / n_steps, n_steps

        if self.h > h_max * (1 + 1e-12):
            raise ConfigurationError(
                f"model.h: step {self.h} violates the stiffness guard h <= eps/(20 b K) = {h_max:.6g}")
        n_steps = int(round(self.T / self.h))
        if not math.isclose(n_steps * self.h, self.T, rel_tol=1e-9):
            raise ConfigurationError(f"model.h: T={self.T} is not a multiple of h={self.h}")
        return self.h, n_steps

    def with_epsilon(self, epsilon: float) -> 'ModelConfig':
        """Copy with a new noise level; an explicit step is dropped so it is re-resolved."""
        return replace(self, epsilon=epsilon, h=None)

    def with_seed(self, seed: int) -> 'ModelConfig':
        return replace(self, seed=int(seed) & SEED_MASK)

    def with_theta(self, theta: float) -> 'ModelConfig':
        return replace(self, theta=theta)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'ModelConfig':
        """
        Create a ModelConfig from the `model` section of a configuration.

        Args:
            data: Dictionary with theta, theta_interval, a, b, epsilon, y0, T, h, seed

        Returns:
            ModelConfig instance
        """
        defaults = cls()
        try:
            return cls(
                theta=float(data.get('theta', defaults.theta)),
                theta_interval=tuple(data.get('theta_interval', defaults.theta_interval)),
                a=float(data.get('a', defaults.a)),
                b=float(data.get('b', defaults.b)),
                epsilon=float(data.get('epsilon', defaults.epsilon)),
                y0=float(data.get('y0', defaults.y0)),
                T=float(data.get('T', defaults.T)),
                h=None if data.get('h') is None else float(data['h']),
                seed=int(data.get('seed', defaults.seed)),
            )
        except (TypeError, ValueError) as e:
            if isinstance(e, ConfigurationError):
                raise
            raise ConfigurationError(f"model: {e}") from e

    def to_dict(self) -> Dict[str, Any]:
        """Convert to the `model` section of a configuration."""
        return {
            'theta': self.theta,
            'theta_interval': list(self.theta_interval),
            'a': self.a,
            'b': self.b,
            'epsilon': self.epsilon,
            'y0': self.y0,
            'T': self.T,
            'h': self.h,
            'seed': self.seed,
        }


@dataclass(frozen=True)
class ObservedPath:
    """The observable part of a trajectory: grid, X and its increments."""
    times: np.ndarray
    X: np.ndarray
    dX: np.ndarray

    @property
    def h(self) -> float:
        return float(self.times[1] - self.times[0])

    @property
    def n_steps(self) -> int:
        return len(self.dX)

    @property
    def T(self) -> float:
        return float(self.times[-1])


@dataclass(frozen=True)
class SamplePath:
    """
    Simulated trajectory on t_i = i h, i = 0..N.

    dW and dV hold Brownian increments (variance h). X[i+1] - X[i] equals
    dX[i] = f(theta t_i) Y[i] h + eps dW[i] as stored.
    """
    times: np.ndarray
    X: np.ndarray
    Y: np.ndarray
    dX: np.ndarray
    dW: np.ndarray
    dV: np.ndarray
    epsilon: float
    seed: Optional[int] = None
    meta: Dict[str, Any] = field(default_factory=dict)

    @property
    def h(self) -> float:
        return float(self.times[1] - self.times[0])

    @property
    def n_steps(self) -> int:
        return len(self.dX)

    @property
    def T(self) -> float:
        return float(self.times[-1])

    def observed(self) -> ObservedPath:
        """Drop the hidden state; estimators only ever see this view."""
        return ObservedPath(times=self.times, X=self.X, dX=self.dX)

    def coarsen(self, k: int) -> 'SamplePath':
        """
        Aggregate increments onto the grid with step k*h.

        The coarse dX still sums to X, but the left-point identity with Y only
        holds on the original grid.

        Raises:
            ConfigurationError: k < 1 or N not divisible by k
        """
        if k < 1 or self.n_steps % k != 0:
            raise ConfigurationError(f"coarsen: factor {k} does not divide N={self.n_steps}")
        if k == 1:
            return self
        n_coarse = self.n_steps // k
        return SamplePath(
            times=self.times[::k].copy(),
            X=self.X[::k].copy(),
            Y=self.Y[::k].copy(),
            dX=self.dX.reshape(n_coarse, k).sum(axis=1),
            dW=self.dW.reshape(n_coarse, k).sum(axis=1),
            dV=self.dV.reshape(n_coarse, k).sum(axis=1),
            epsilon=self.epsilon,
            seed=self.seed,
            meta={**self.meta, 'coarsened_by': k},
        )

    def to_csv(self, filename: str, config_digest: str) -> bool:
        """Write columns t, X, Y behind a provenance comment line."""
        header = provenance_line(config_digest, self.seed)
        rows = zip(self.times.tolist(), self.X.tolist(), self.Y.tolist())
        return write_csv(filename, ['t', 'X', 'Y'], rows, header=header)
