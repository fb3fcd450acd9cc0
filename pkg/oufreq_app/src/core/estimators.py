"""
Frequency estimators for OUFreq.

- mle: grid search over the parameter interval plus golden-section refinement
- kernel-psi: kernel-smoothed derivative of X, the quadratic-variation statistic
  Psi-hat and a least-squares fit of b^2 int f(theta s)^2 ds on a panel of times
- limit-oracle: exact recovery for the pure-cosine limit model
"""

import logging
import math
from functools import lru_cache
from typing import Optional, Sequence, Tuple, Union

import numpy as np
from scipy import integrate, optimize

from ..models.model_config import ModelConfig, ObservedPath, SamplePath
from ..models.reports import EstimateReport, EstimatorMethod, KernelSpec
from ..models.signal_spec import SignalSpec
from ..utils.errors import ConfigurationError, RootNotFoundError
from .inference import fisher_limit, log_likelihood, loglik_from_output
from .kalman_filter import run_filter
from .signal import evaluate_array

# Set up logger for this module
logger = logging.getLogger(__name__)

# MLE: grid spacing sqrt(eps)/4, refinement to width 1e-4 sqrt(eps)
MLE_GRID_FRACTION = 0.25
MLE_REFINE_FRACTION = 1e-4
MLE_MAX_ITER = 200

# Psi estimator: candidate spacing and panel
PSI_GRID_STEP = 1e-3
DEFAULT_PANEL_FRACTIONS = (0.3, 0.5, 0.7)

# Resolution of the tabulated antiderivative of f^2
SQUARED_TABLE_STEP = 1e-4

# Relative spread below which an objective counts as flat
FLAT_TOLERANCE = 1e-12


def _observed(path: Union[SamplePath, ObservedPath]) -> ObservedPath:
    return path.observed() if isinstance(path, SamplePath) else path


def _fisher0(theta: float, config: ModelConfig, spec: SignalSpec) -> float:
    return fisher_limit(theta, config.T, config.b, spec)


# ---------------------------------------------------------------------------
# Maximum likelihood
# ---------------------------------------------------------------------------

def mle(path: Union[SamplePath, ObservedPath], config: ModelConfig, spec: SignalSpec) -> EstimateReport:
    """
    Maximum likelihood estimate over the parameter interval.

    Stage 1 evaluates ln V on a grid with spacing sqrt(eps)/4. Stage 2 runs a
    golden-section search in the bracket around the grid argmax down to width
    1e-4 sqrt(eps). An argmax within one grid step of either end is refined with
    a bounded search and flagged as a boundary solution.

    Args:
        path: Observed path (the hidden state is never read)
        config: Model configuration (theta is the true value used for reporting)
        spec: Signal specification

    Returns:
        EstimateReport for method "mle"
    """
    observed = _observed(path)
    root_eps = math.sqrt(config.epsilon)
    step = MLE_GRID_FRACTION * root_eps
    n_grid = int(math.ceil((config.beta - config.alpha) / step)) + 1
    grid = np.linspace(config.alpha, config.beta, n_grid)
    step = grid[1] - grid[0]

    profile = np.array([log_likelihood(float(theta), observed, config, spec) for theta in grid])
    best = int(np.argmax(profile))
    grid_max = float(profile[best])
    lo, hi = grid[max(best - 1, 0)], grid[min(best + 1, n_grid - 1)]
    boundary = best <= 1 or best >= n_grid - 2

    def objective(theta: float) -> float:
        return -log_likelihood(float(theta), observed, config, spec)

    width = MLE_REFINE_FRACTION * root_eps
    bounded_options = {"xatol": width / 2.0, "maxiter": MLE_MAX_ITER}
    converged = True
    if boundary:
        logger.warning(f"MLE grid argmax {grid[best]:.6g} is within one step of the interval end")
        result = optimize.minimize_scalar(objective, bounds=(lo, hi), method="bounded",
                                          options=bounded_options)
    else:
        try:
            result = optimize.minimize_scalar(objective, bracket=(lo, grid[best], hi), method="golden",
                                              options={"xtol": width / (2.0 * abs(grid[best])),
                                                       "maxiter": MLE_MAX_ITER})
        except ValueError as e:
            # Tied neighbours: the triple is not a strict bracket
            logger.warning(f"MLE golden-section bracket rejected ({e}); using bounded search")
            converged = False
            result = optimize.minimize_scalar(objective, bounds=(lo, hi), method="bounded",
                                              options=bounded_options)

    theta_hat = float(np.clip(result.x, config.alpha, config.beta))
    loglik_hat = -float(result.fun)
    converged = converged and bool(getattr(result, "success", True))
    if loglik_hat < grid_max - 1e-9 * max(1.0, abs(grid_max)):
        # Refinement moved downhill: the profile is not unimodal near the argmax
        logger.warning(f"MLE refinement ended below the grid maximum ({loglik_hat:.10g} < {grid_max:.10g})")
        converged = False
    iterations = n_grid + int(getattr(result, "nfev", 0))

    report = EstimateReport.build(EstimatorMethod.MLE, theta_hat, config, loglik_hat,
                                  _fisher0(theta_hat, config, spec), iterations, converged, boundary)
    logger.debug(f"MLE theta_hat={theta_hat:.10g} (grid {n_grid} pts, {iterations} evaluations)")
    return report


# ---------------------------------------------------------------------------
# Kernel estimator
# ---------------------------------------------------------------------------

def default_kernel(config: ModelConfig, bandwidth: Optional[float] = None) -> KernelSpec:
    """Biweight kernel with bandwidth phi = eps unless given."""
    return KernelSpec(bandwidth=config.epsilon if bandwidth is None else bandwidth)


def _admissible_centre(t: float, kernel: KernelSpec, T: float) -> float:
    phi = kernel.bandwidth
    return min(max(t, phi), T - phi)


def kernel_derivative(path: Union[SamplePath, ObservedPath], t: float, kernel: KernelSpec,
                      config: ModelConfig) -> float:
    """
    z-hat_t = (1/phi) sum_i K((t_i - t)/phi) dX_i with left-point t_i.

    Raises:
        ConfigurationError: The kernel support [t - phi, t + phi] leaves [0, T]
    """
    observed = _observed(path)
    phi = kernel.bandwidth
    T = observed.T
    slack = 1e-12 * max(1.0, T)
    if t - phi < -slack or t + phi > T + slack:
        raise ConfigurationError(
            f"kernel_derivative: support [{t - phi:.6g}, {t + phi:.6g}] leaves [0, {T:.6g}]")
    h = observed.h
    first = max(int(math.floor((t - phi) / h)), 0)
    last = min(int(math.ceil((t + phi) / h)), observed.n_steps - 1)
    left_points = observed.times[first:last + 1]
    weights = kernel.weights((left_points - t) / phi)
    return float(np.dot(weights, observed.dX[first:last + 1]) / phi)


def psi_statistic(z: Sequence[float]) -> float:
    """z_K^2 - 2 sum_{k<K} z_k (z_{k+1} - z_k) for node values z_0..z_K."""
    values = np.asarray(z, dtype=float)
    if values.size < 2:
        return float(values[-1] ** 2) if values.size else 0.0
    return float(values[-1] ** 2 - 2.0 * np.dot(values[:-1], np.diff(values)))


def default_subdivisions(t: float, kernel: KernelSpec) -> int:
    """K_sub = ceil(t / sqrt(phi)), at least 2."""
    return max(2, int(math.ceil(t / math.sqrt(kernel.bandwidth))))


def psi_hat(path: Union[SamplePath, ObservedPath], t: float, kernel: KernelSpec,
            config: ModelConfig, n_sub: Optional[int] = None) -> float:
    """
    Psi-hat(t) = z-hat_t^2 - 2 sum_k z-hat_{t_k} (z-hat_{t_{k+1}} - z-hat_{t_k}), t_k = k t/K_sub.

    Nodes whose kernel window would leave [0, T] use the nearest admissible
    centre. t = 0 gives z-hat_0^2 and a degenerate-statistic warning.

    Args:
        t: Evaluation time in [0, T]
        n_sub: Number of subdivisions (default ceil(t/sqrt(phi)))
    """
    observed = _observed(path)
    T = observed.T
    if not 0.0 <= t <= T:
        raise ConfigurationError(f"psi_hat: t={t} is outside [0, {T}]")
    if 2.0 * kernel.bandwidth > T:
        raise ConfigurationError(f"psi_hat: bandwidth {kernel.bandwidth} does not fit in [0, {T}]")
    if t == 0.0:
        logger.warning("psi_hat at t=0 is degenerate: empty subdivision sum")
        z0 = kernel_derivative(observed, _admissible_centre(0.0, kernel, T), kernel, config)
        return z0 * z0

    k_sub = default_subdivisions(t, kernel) if n_sub is None else int(n_sub)
    if k_sub < 2:
        raise ConfigurationError(f"psi_hat: need at least 2 subdivisions, got {k_sub}")
    nodes = np.linspace(0.0, t, k_sub + 1)
    z = [kernel_derivative(observed, _admissible_centre(node, kernel, T), kernel, config)
         for node in nodes]
    return psi_statistic(z)


@lru_cache(maxsize=16)
def _squared_table(spec: SignalSpec, u_max: float) -> Tuple[np.ndarray, np.ndarray]:
    """Antiderivative of f(u)^2 on [0, u_max] (trapezoid rule, step 1e-4)."""
    n_points = int(math.ceil(u_max / SQUARED_TABLE_STEP)) + 1
    u = np.linspace(0.0, u_max, n_points)
    f, _, _ = evaluate_array(spec, u)
    return u, integrate.cumulative_trapezoid(f * f, u, initial=0.0)


def psi_model(thetas: Union[float, np.ndarray], t: float, config: ModelConfig,
              spec: SignalSpec) -> np.ndarray:
    """
    Psi_theta(t) = z0^2 + b^2 int_0^t f(theta s)^2 ds with z0 = f(0) y0.

    The integral is (1/theta) F2(theta t), F2 the tabulated antiderivative of f^2.
    """
    thetas = np.atleast_1d(np.asarray(thetas, dtype=float))
    u_max = max(config.beta, float(thetas.max())) * config.T
    u, F2 = _squared_table(spec, round(u_max, 9))
    f0 = float(evaluate_array(spec, 0.0)[0])
    z0 = f0 * config.y0
    return z0 * z0 + config.b ** 2 * np.interp(thetas * t, u, F2) / thetas


def fit_psi_panel(psi_values: Sequence[float], times: Sequence[float], config: ModelConfig,
                  spec: SignalSpec) -> Tuple[float, int, bool, bool]:
    """
    Minimise sum_j [psi_j - Psi_theta(t_j)]^2 over the parameter interval.

    A grid with spacing 1e-3 locates the minimum; a bounded search refines it.

    Returns:
        Tuple[float, int, bool, bool]: (theta, evaluations, converged, boundary)
    """
    n_grid = int(math.ceil((config.beta - config.alpha) / PSI_GRID_STEP)) + 1
    grid = np.linspace(config.alpha, config.beta, n_grid)
    targets = np.asarray(psi_values, dtype=float)
    objective_grid = np.zeros(n_grid)
    for value, t in zip(targets, times):
        objective_grid += (value - psi_model(grid, t, config, spec)) ** 2

    spread = float(objective_grid.max() - objective_grid.min())
    if spread <= FLAT_TOLERANCE * (1.0 + abs(float(objective_grid.min()))):
        logger.warning("Psi objective is flat over the parameter interval; theta is not identified")
        return float(grid[n_grid // 2]), n_grid, False, False

    best = int(np.argmin(objective_grid))
    boundary = best <= 1 or best >= n_grid - 2
    lo, hi = grid[max(best - 1, 0)], grid[min(best + 1, n_grid - 1)]

    def objective(theta: float) -> float:
        model = np.array([psi_model(theta, t, config, spec)[0] for t in times])
        return float(np.sum((targets - model) ** 2))

    result = optimize.minimize_scalar(objective, bounds=(lo, hi), method="bounded",
                                      options={"xatol": 1e-9})
    theta = float(result.x)
    converged = bool(getattr(result, "success", True))
    if result.fun > objective_grid[best]:
        theta = float(grid[best])
    return theta, n_grid + int(getattr(result, "nfev", 0)), converged, boundary


def psi_estimator(path: Union[SamplePath, ObservedPath], config: ModelConfig, spec: SignalSpec,
                  kernel: Optional[KernelSpec] = None,
                  panel_fractions: Sequence[float] = DEFAULT_PANEL_FRACTIONS,
                  n_sub: Optional[int] = None) -> EstimateReport:
    """
    Kernel estimator: fit Psi_theta to Psi-hat on a panel of times (0.3T, 0.5T, 0.7T by default).

    Raises:
        ConfigurationError: b is not positive
    """
    if config.b <= 0:
        raise ConfigurationError("psi_estimator: needs a known b > 0")
    observed = _observed(path)
    kernel = kernel or default_kernel(config)
    times = [fraction * observed.T for fraction in panel_fractions]
    psi_values = [psi_hat(observed, t, kernel, config, n_sub=n_sub) for t in times]
    theta_hat, evaluations, converged, boundary = fit_psi_panel(psi_values, times, config, spec)
    loglik_hat = loglik_from_output(run_filter(theta_hat, observed, config, spec, sensitivity=False),
                                    observed, config.epsilon)
    logger.debug(f"Kernel-psi theta_hat={theta_hat:.10g}, panel values {psi_values}")
    return EstimateReport.build(EstimatorMethod.KERNEL_PSI, theta_hat, config, loglik_hat,
                                _fisher0(theta_hat, config, spec), evaluations, converged, boundary)


# ---------------------------------------------------------------------------
# Limit model
# ---------------------------------------------------------------------------

def limit_model_psi(theta: float, A: float, t: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
    """Psi-tilde(t) = (A^2/(4 theta)) sin(2 theta t) for f(theta t) = A cos(theta t)."""
    return A * A * np.sin(2.0 * theta * np.asarray(t, dtype=float)) / (4.0 * theta)


def limit_model_full_psi(theta: float, A: float, b: float,
                         t: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
    """Psi(t) = b^2 (A^2 t/2 + (A^2/(4 theta)) sin(2 theta t))."""
    t = np.asarray(t, dtype=float)
    return b * b * (A * A * t / 2.0 + limit_model_psi(theta, A, t))


def limit_model_oracle(theta: float, A: float, b: float, t_grid: Sequence[float],
                       t0: float = 0.0) -> Tuple[np.ndarray, float, float]:
    """
    Recover theta from noiseless Psi of the pure-cosine model.

    Psi-tilde = Psi/b^2 - A^2 t/2 is computed from Psi, tau is the first
    root past t0 (grid sign change refined with brentq) and theta = pi/(2 tau).

    Returns:
        Tuple[np.ndarray, float, float]: (Psi-tilde on the grid, tau, recovered theta)

    Raises:
        RootNotFoundError: No sign change on the grid past t0

    Example:
        >>> _, tau, theta = limit_model_oracle(1.0, 1.0, 1.0, np.linspace(0, 10, 10001))
        >>> round(tau, 10), round(theta, 10)
        (1.5707963268, 1.0)
    """
    if b == 0 or A == 0:
        raise RootNotFoundError("limit_model_oracle: Psi carries no frequency information when A b = 0")
    grid = np.asarray(t_grid, dtype=float)

    def psi_tilde(t):
        return limit_model_full_psi(theta, A, b, t) / (b * b) - A * A * np.asarray(t) / 2.0

    values = psi_tilde(grid)
    candidates = np.nonzero(grid > t0)[0]
    for k in candidates[:-1]:
        left, right = values[k], values[k + 1]
        if left == 0.0:
            tau = float(grid[k])
            break
        if left * right < 0.0:
            tau = optimize.brentq(lambda t: float(psi_tilde(t)), grid[k], grid[k + 1],
                                  xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)
            break
    else:
        raise RootNotFoundError(f"limit_model_oracle: no sign change of Psi-tilde past t0={t0}")
    return values, float(tau), math.pi / (2.0 * tau)


def limit_oracle_estimate(config: ModelConfig, spec: SignalSpec, n_grid: int = 10_001) -> EstimateReport:
    """
    Limit-model oracle as an EstimateReport (amplitude taken from the signal spec).

    Raises:
        ConfigurationError: The signal amplitude is zero
    """
    if spec.amplitude == 0:
        raise ConfigurationError("limit-oracle: needs a signal with non-zero amplitude")
    _, _, theta_rec = limit_model_oracle(config.theta, spec.amplitude, config.b,
                                         np.linspace(0.0, config.T, n_grid))
    return EstimateReport.build(EstimatorMethod.LIMIT_ORACLE, theta_rec, config, math.nan,
                                _fisher0(theta_rec, config, spec), 1, True, False)
