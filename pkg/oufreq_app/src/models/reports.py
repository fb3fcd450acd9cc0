"""
Result and plan models for OUFreq.
Likelihood profiles, contrast limits, estimate reports, normality summaries
and Monte Carlo plans with their results.
"""

import math
from dataclasses import dataclass, field, asdict
from enum import Enum
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..utils.errors import ConfigurationError
from ..utils.file_loader import provenance_line, write_csv
from .model_config import ModelConfig
from .signal_spec import SignalSpec


class EstimatorMethod(str, Enum):
    MLE = "mle"
    KERNEL_PSI = "kernel-psi"
    LIMIT_ORACLE = "limit-oracle"


class CheckName(str, Enum):
    RICCATI_RATE = "riccati-rate"
    FISHER_LIMIT = "fisher-limit"
    LAN_RESIDUAL = "lan-residual"
    NORMALITY = "normality"
    CONTRAST = "contrast"


@dataclass(frozen=True)
class LikelihoodProfile:
    """ln V, the normalised score and eps*I_eps on a candidate grid."""
    thetas: np.ndarray
    loglik: np.ndarray
    score: np.ndarray
    fisher_eps: np.ndarray

    def to_csv(self, filename: str, config_digest: str, seed: Optional[int]) -> bool:
        rows = zip(self.thetas.tolist(), self.loglik.tolist(), self.score.tolist(),
                   self.fisher_eps.tolist())
        return write_csv(filename, ['theta', 'loglik', 'score', 'fisher_eps'], rows,
                         header=provenance_line(config_digest, seed))


@dataclass(frozen=True)
class ContrastLimit:
    """Contrast G(theta, theta0) on a grid and the fitted quadratic lower-bound constant."""
    theta0: float
    thetas: np.ndarray
    G: np.ndarray
    c_lower: Optional[float] = None


# Column order of the per-replication CSV
ESTIMATE_COLUMNS = ['seed', 'method', 'epsilon', 'theta_true', 'theta_hat', 'normalized_error',
                    'se_hat', 'loglik_at_hat', 'iterations', 'converged', 'boundary']


@dataclass(frozen=True)
class EstimateReport:
    """Outcome of one estimator on one path."""
    method: EstimatorMethod
    theta_hat: float
    theta_true: float
    epsilon: float
    normalized_error: float
    loglik_at_hat: float
    se_hat: float
    iterations: int
    converged: bool
    boundary: bool = False
    seed: Optional[int] = None

    @classmethod
    def build(cls, method: EstimatorMethod, theta_hat: float, config: ModelConfig,
              loglik_at_hat: float, fisher0_at_hat: float, iterations: int,
              converged: bool, boundary: bool = False,
              seed: Optional[int] = None) -> 'EstimateReport':
        """Fill the derived fields (normalised error, standard error) from the config."""
        root_eps = math.sqrt(config.epsilon)
        se_hat = math.sqrt(config.epsilon / fisher0_at_hat) if fisher0_at_hat > 0 else math.inf
        return cls(
            method=EstimatorMethod(method),
            theta_hat=float(theta_hat),
            theta_true=config.theta,
            epsilon=config.epsilon,
            normalized_error=(float(theta_hat) - config.theta) / root_eps,
            loglik_at_hat=float(loglik_at_hat),
            se_hat=se_hat,
            iterations=int(iterations),
            converged=bool(converged),
            boundary=bool(boundary),
            seed=config.seed if seed is None else seed,
        )

    @property
    def usable(self) -> bool:
        """True when the estimate enters moment computations."""
        return self.converged and not self.boundary and math.isfinite(self.theta_hat)

    def to_row(self) -> List[Any]:
        return [self.seed, self.method.value, self.epsilon, self.theta_true, self.theta_hat,
                self.normalized_error, self.se_hat, self.loglik_at_hat, self.iterations,
                self.converged, self.boundary]

    def to_dict(self) -> Dict[str, Any]:
        return dict(zip(ESTIMATE_COLUMNS, self.to_row()))


@dataclass(frozen=True)
class KernelSpec:
    """
    Biweight kernel K(u) = (15/16)(1 - u^2)^2 on (-1, 1) with bandwidth phi.

    K is C^1 including the endpoints, integrates to 1 and has int K^2 = 5/7.
    """
    bandwidth: float

    SUPPORT = 1.0
    L2_NORM_SQUARED = 5.0 / 7.0

    def __post_init__(self) -> None:
        if not (self.bandwidth > 0 and math.isfinite(self.bandwidth)):
            raise ConfigurationError(f"estimation.bandwidth: must be > 0, got {self.bandwidth}")

    def weights(self, u: np.ndarray) -> np.ndarray:
        """Kernel values; zero outside the support."""
        u = np.asarray(u, dtype=float)
        inside = np.abs(u) < self.SUPPORT
        return np.where(inside, 15.0 / 16.0 * (1.0 - u * u) ** 2, 0.0)

    def derivative(self, u: np.ndarray) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        inside = np.abs(u) < self.SUPPORT
        return np.where(inside, -15.0 / 4.0 * u * (1.0 - u * u), 0.0)


@dataclass(frozen=True)
class NormalityReport:
    """Moments and KS distance of normalised errors against N(0, 1/I0)."""
    n: int
    mean: float
    variance: float
    skewness: float
    excess_kurtosis: float
    ks_distance: float
    variance_ratio: float
    degenerate: bool = False

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass(frozen=True)
class ExperimentPlan:
    """
    Monte Carlo plan: a base configuration swept over a decreasing epsilon ladder.

    Invariants: ladder strictly decreasing; replications >= 30 when the
    normality check is requested.
    """
    config: ModelConfig
    signal: SignalSpec
    epsilon_ladder: Tuple[float, ...]
    replications: int
    methods: Tuple[EstimatorMethod, ...] = (EstimatorMethod.MLE,)
    checks: Tuple[CheckName, ...] = ()
    base_seed: int = 0
    workers: int = 1
    bandwidth: Optional[float] = None
    panel_fractions: Tuple[float, ...] = (0.3, 0.5, 0.7)
    lan_u: float = 1.0
    contrast_theta: float = 1.1

    def __post_init__(self) -> None:
        ladder = tuple(float(e) for e in self.epsilon_ladder)
        if not ladder:
            raise ConfigurationError("experiment.epsilon_ladder: must not be empty")
        if any(e <= 0 for e in ladder):
            raise ConfigurationError("experiment.epsilon_ladder: values must be > 0")
        if any(later >= earlier for earlier, later in zip(ladder, ladder[1:])):
            raise ConfigurationError(f"experiment.epsilon_ladder: must be strictly decreasing, got {ladder}")
        object.__setattr__(self, "epsilon_ladder", ladder)

        try:
            methods = tuple(EstimatorMethod(m) for m in self.methods)
            checks = tuple(CheckName(c) for c in self.checks)
        except ValueError as e:
            raise ConfigurationError(f"experiment: {e}") from e
        if EstimatorMethod.LIMIT_ORACLE in methods:
            raise ConfigurationError("experiment.methods: limit-oracle does not run on sample paths")
        object.__setattr__(self, "methods", methods)
        object.__setattr__(self, "checks", checks)

        if self.replications < 1:
            raise ConfigurationError("experiment.replications: must be >= 1")
        if CheckName.NORMALITY in checks and self.replications < 30:
            raise ConfigurationError(
                f"experiment.replications: normality needs >= 30 replications, got {self.replications}")
        if self.workers < 1:
            raise ConfigurationError(f"--workers: must be >= 1, got {self.workers}")

    @classmethod
    def from_dict(cls, data: Dict[str, Any], base_seed: Optional[int] = None,
                  workers: int = 1) -> 'ExperimentPlan':
        """
        Build a plan from a full configuration dictionary.

        Args:
            data: Configuration with signal, model, estimation and experiment sections
            base_seed: Overrides model.seed when given
            workers: Worker process count

        Returns:
            ExperimentPlan instance
        """
        config = ModelConfig.from_dict(data.get('model', {}))
        if base_seed is not None:
            config = config.with_seed(base_seed)
        estimation = data.get('estimation', {})
        experiment = data.get('experiment', {})
        return cls(
            config=config,
            signal=SignalSpec.from_dict(data.get('signal', {})),
            epsilon_ladder=tuple(experiment.get('epsilon_ladder', [config.epsilon])),
            replications=int(experiment.get('replications', 30)),
            methods=tuple(experiment.get('methods', ['mle'])),
            checks=tuple(experiment.get('checks', [])),
            base_seed=config.seed,
            workers=workers,
            bandwidth=estimation.get('bandwidth'),
            panel_fractions=tuple(estimation.get('panel_fractions', (0.3, 0.5, 0.7))),
            lan_u=float(experiment.get('lan_u', 1.0)),
            contrast_theta=float(experiment.get('contrast_theta', 1.1)),
        )


@dataclass(frozen=True)
class CheckResult:
    """One row of the acceptance table printed by `check`."""
    name: str
    value: float
    criterion: str
    passed: bool
    detail: str = ""

    def to_row(self) -> List[Any]:
        return [self.name, self.value, self.criterion, self.passed, self.detail]


@dataclass(frozen=True)
class ReplicationResult:
    """Everything computed on one (epsilon, replication) work unit."""
    epsilon_index: int
    replication: int
    epsilon: float
    seed: int
    estimates: Tuple[EstimateReport, ...] = ()
    checks: Dict[str, float] = field(default_factory=dict)
    error: Optional[str] = None

    @property
    def failed(self) -> bool:
        return self.error is not None


@dataclass(frozen=True)
class EpsilonSummary:
    """Per-epsilon aggregate for one estimator method."""
    epsilon: float
    method: str
    replications: int
    failures: int
    excluded: int
    median_abs_error: float
    normality: Optional[NormalityReport]
    check_stats: Dict[str, float] = field(default_factory=dict)
    # E[eps I_eps] at this eps; the reference of the normality report
    expected_fisher: float = math.nan

    @property
    def exclusion_rate(self) -> float:
        usable_pool = self.replications - self.failures
        return self.excluded / usable_pool if usable_pool > 0 else 1.0

    def to_dict(self) -> Dict[str, Any]:
        return {
            'epsilon': self.epsilon,
            'method': self.method,
            'replications': self.replications,
            'failures': self.failures,
            'excluded': self.excluded,
            'exclusion_rate': self.exclusion_rate,
            'median_abs_error': self.median_abs_error,
            'normality': self.normality.to_dict() if self.normality else None,
            'check_stats': dict(self.check_stats),
            'expected_fisher_eps': self.expected_fisher,
        }


@dataclass(frozen=True)
class PlanResult:
    """Ordered replication results and per-epsilon summaries of a plan."""
    plan: ExperimentPlan
    replications: Tuple[ReplicationResult, ...]
    summaries: Tuple[EpsilonSummary, ...]
    fisher_limit: float
    riccati_rates: Optional[Sequence[Dict[str, float]]] = None
    passed: bool = True
    messages: Tuple[str, ...] = ()
    stationary_fisher_limit: float = math.nan

    def estimate_rows(self) -> List[List[Any]]:
        return [report.to_row() for rep in self.replications for report in rep.estimates]

    def to_dict(self) -> Dict[str, Any]:
        return {
            'fisher_limit': self.fisher_limit,
            'stationary_fisher_limit': self.stationary_fisher_limit,
            'passed': self.passed,
            'messages': list(self.messages),
            'epsilon_summaries': [s.to_dict() for s in self.summaries],
            'riccati_rates': list(self.riccati_rates) if self.riccati_rates else None,
        }
