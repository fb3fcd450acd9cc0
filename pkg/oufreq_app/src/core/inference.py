"""
Likelihood inference for OUFreq.
Log-likelihood, normalised score, Fisher information, their small-noise limits,
the LAN expansion and the contrast function, all built on filter outputs.
"""

import logging
import math
from typing import Callable, Iterable, Optional, Tuple

import numpy as np
from scipy import integrate

from ..models.filter_output import FilterOutput
from ..models.model_config import ModelConfig
from ..models.reports import ContrastLimit, LikelihoodProfile
from ..models.signal_spec import SignalSpec
from ..utils.errors import ConfigurationError, IdentifiabilityError, QuadratureError
from .kalman_filter import Path, run_filter, sensitivity_finite_difference, sensitivity_second_moments
from .signal import evaluate_array, modulation

# Set up logger for this module
logger = logging.getLogger(__name__)

QUAD_RTOL = 1e-10
SIMPSON_POINTS_PER_PERIOD = 2000

# Grid used by quadratic_lower_bound
LOWER_BOUND_GRID = 200


def _segmented_quad(func: Callable[[float], float], T: float, piece: float) -> float:
    """Adaptive quadrature over [0, T] split into pieces no longer than `piece`."""
    n_pieces = max(1, int(math.ceil(T / piece)))
    edges = np.linspace(0.0, T, n_pieces + 1)
    total = 0.0
    for left, right in zip(edges[:-1], edges[1:]):
        value, abserr = integrate.quad(func, left, right, epsabs=0.0, epsrel=QUAD_RTOL, limit=200)
        if abserr > max(1e-8 * abs(value), 1e-13):
            raise QuadratureError(f"quadrature error {abserr:.3g} on [{left:.6g}, {right:.6g}]")
        total += value
    return total


def _simpson(func_array: Callable[[np.ndarray], np.ndarray], T: float, piece: float) -> float:
    """Composite Simpson rule at SIMPSON_POINTS_PER_PERIOD points per piece."""
    n_points = 2 * (max(1, int(math.ceil(T / piece))) * SIMPSON_POINTS_PER_PERIOD // 2) + 1
    t = np.linspace(0.0, T, n_points)
    return float(integrate.simpson(func_array(t), x=t))


# ---------------------------------------------------------------------------
# Path functionals
# ---------------------------------------------------------------------------

def loglik_from_output(output: FilterOutput, path: Path, epsilon: float) -> float:
    """sum M_i dX_i/eps^2 - sum M_i^2 h/(2 eps^2) with left-point M."""
    M = output.M[:-1]
    h = path.h
    return float((np.dot(M, path.dX) - 0.5 * h * np.dot(M, M)) / epsilon ** 2)


def score_from_output(output: FilterOutput, path: Path, epsilon: float) -> float:
    """eps^{-1/2} sum M_dot_i dWbar_i with dWbar_i = (dX_i - M_i h)/eps."""
    innovation = (path.dX - output.M[:-1] * path.h) / epsilon
    return float(np.dot(output.M_dot[:-1], innovation) / math.sqrt(epsilon))


def fisher_from_output(output: FilterOutput, path: Path, epsilon: float) -> float:
    """(1/eps) sum M_dot_i^2 h, the normalised information eps I_eps."""
    M_dot = output.M_dot[:-1]
    return float(np.dot(M_dot, M_dot) * path.h / epsilon)


def log_likelihood(theta: float, path: Path, config: ModelConfig, spec: SignalSpec) -> float:
    """
    ln V(theta, X^T) = (1/eps^2) sum M_i dX_i - (1/(2 eps^2)) sum M_i^2 h.

    Example:
        >>> log_likelihood(1.0, path.observed(), config, spec)  # y0 = 0, b = 0
        0.0
    """
    output = run_filter(theta, path, config, spec, sensitivity=False)
    return loglik_from_output(output, path, config.epsilon)


def score(theta: float, path: Path, config: ModelConfig, spec: SignalSpec) -> float:
    """
    Normalised score eps^{-1/2} sum M_dot_i (dX_i - M_i h)/eps, equal to sqrt(eps) d ln V/d theta.
    """
    output = run_filter(theta, path, config, spec)
    return score_from_output(output, path, config.epsilon)


def score_alternate_sign(theta: float, path: Path, config: ModelConfig, spec: SignalSpec) -> float:
    """
    Score-type statistic with integrand t f'(theta t) m - f(theta t) m_dot.

    Diagnostic only: it differs from the gradient of ln V in the sign of the
    m_dot term.
    """
    output = run_filter(theta, path, config, spec)
    f_arr, s_arr = modulation(spec, theta, path.times)
    integrand = (s_arr * output.m - f_arr * output.m_dot)[:-1]
    innovation = (path.dX - output.M[:-1] * path.h) / config.epsilon
    return float(np.dot(integrand, innovation) / math.sqrt(config.epsilon))


def fisher_eps(theta: float, path: Path, config: ModelConfig, spec: SignalSpec,
               finite_difference: bool = False) -> float:
    """
    eps I_eps(theta) = (1/eps) sum M_dot_i^2 h.

    Args:
        finite_difference: Use central differences in theta for m_dot instead
            of the sensitivity recursion
    """
    if not finite_difference:
        return fisher_from_output(run_filter(theta, path, config, spec), path, config.epsilon)

    output = run_filter(theta, path, config, spec, sensitivity=False)
    m_dot, _ = sensitivity_finite_difference(theta, path, config, spec)
    f_arr, s_arr = modulation(spec, theta, path.times)
    M_dot = (s_arr * output.m + f_arr * m_dot)[:-1]
    return float(np.dot(M_dot, M_dot) * path.h / config.epsilon)


def fisher_limit(theta: float, T: float, b: float, spec: SignalSpec) -> float:
    """
    I0(theta) = (b/2) int_0^T t^2 f'(theta t)^2 dt by adaptive quadrature (rel-tol 1e-10).

    Example:
        >>> round(fisher_limit(1.0, 10.0, 1.0, SignalSpec()), 1)  # 1000 pi^2/3 - 5/4
        3288.6
    """
    def integrand(t: float) -> float:
        _, df, _ = evaluate_array(spec, theta * t)
        return float(t * t * df * df)

    return 0.5 * b * _segmented_quad(integrand, T, 0.5 / theta)


def stationary_fisher_limit(theta: float, T: float, b: float, spec: SignalSpec) -> float:
    """
    (b/2) int_0^T t^2 f'(theta t)^2 / f(theta t) dt.

    This is the limit of eps I_eps along the filter: in the small-noise regime
    the sensitivity M_dot fluctuates with variance proportional to eps/f, not
    eps. It differs from fisher_limit only by the 1/f weight and equals the
    second theta-derivative of the contrast G(., theta0) at theta0.
    """
    def integrand(t: float) -> float:
        f, df, _ = evaluate_array(spec, theta * t)
        return float(t * t * df * df / f)

    return 0.5 * b * _segmented_quad(integrand, T, 0.5 / theta)


def expected_fisher_eps(theta: float, config: ModelConfig, spec: SignalSpec,
                        n_steps: Optional[int] = None) -> float:
    """
    E[eps I_eps(theta)] at the configured eps for paths generated at theta.

    Exact for the discrete filter on the resolved grid (no Monte Carlo), so it
    is the reference the simulated information, the score variance and the
    MLE spread are compared with at a finite eps.
    """
    moments = sensitivity_second_moments(theta, config, spec, n_steps)
    h = config.T / (len(moments) - 1)
    value = float(np.sum(moments[:-1]) * h / config.epsilon)
    logger.debug(f"Expected eps I_eps at theta={theta}, eps={config.epsilon}: {value:.6g}")
    return value


def lan_expansion_check(u: float, path: Path, config: ModelConfig, spec: SignalSpec,
                        theta: Optional[float] = None) -> Tuple[float, float]:
    """
    Local likelihood ratio against its quadratic expansion.

    lhs = ln V(theta + sqrt(eps) u) - ln V(theta)
    rhs = u score(theta) - u^2/2 eps I_eps(theta)

    Args:
        u: Local parameter
        theta: Centre (defaults to config.theta)

    Returns:
        Tuple[float, float]: (lhs, rhs)

    Raises:
        ConfigurationError: theta + sqrt(eps) u outside the parameter interval
    """
    centre = config.theta if theta is None else theta
    candidate = centre + math.sqrt(config.epsilon) * u
    if not config.alpha < candidate < config.beta:
        raise ConfigurationError(
            f"lan_expansion_check: candidate {candidate:.6g} is outside ({config.alpha}, {config.beta})")
    if u == 0:
        return 0.0, 0.0

    base = run_filter(centre, path, config, spec)
    shifted = run_filter(candidate, path, config, spec, sensitivity=False)
    lhs = loglik_from_output(shifted, path, config.epsilon) - loglik_from_output(base, path, config.epsilon)
    rhs = (u * score_from_output(base, path, config.epsilon)
           - 0.5 * u * u * fisher_from_output(base, path, config.epsilon))
    return lhs, rhs


def empirical_contrast(theta: float, path: Path, config: ModelConfig, spec: SignalSpec,
                       theta0: Optional[float] = None) -> float:
    """-eps (ln V(theta) - ln V(theta0)), which tends to G(theta, theta0)."""
    reference = config.theta if theta0 is None else theta0
    return -config.epsilon * (log_likelihood(theta, path, config, spec)
                              - log_likelihood(reference, path, config, spec))


def contrast_limit(theta: float, theta0: float, b: float, T: float, spec: SignalSpec,
                   method: str = "quad") -> float:
    """
    G(theta, theta0) = b int_0^T [f(theta t) - f(theta0 t)]^2 / (4 f(theta t)) dt.

    Args:
        method: "quad" (adaptive, rel-tol 1e-10) or "simpson" (composite rule,
            used as an independent cross-check)
    """
    if theta == theta0:
        return 0.0
    piece = 0.5 / max(theta, theta0)

    if method == "simpson":
        def integrand_array(t: np.ndarray) -> np.ndarray:
            f_theta = evaluate_array(spec, theta * t)[0]
            f_ref = evaluate_array(spec, theta0 * t)[0]
            return (f_theta - f_ref) ** 2 / (4.0 * f_theta)
        return b * _simpson(integrand_array, T, piece)
    if method != "quad":
        raise ConfigurationError(f"contrast_limit: unknown method {method!r}")

    def integrand(t: float) -> float:
        f_theta = float(evaluate_array(spec, theta * t)[0])
        f_ref = float(evaluate_array(spec, theta0 * t)[0])
        return (f_theta - f_ref) ** 2 / (4.0 * f_theta)

    return b * _segmented_quad(integrand, T, piece)


def contrast_profile(theta0: float, config: ModelConfig, spec: SignalSpec,
                     thetas: Optional[Iterable[float]] = None) -> ContrastLimit:
    """G(., theta0) on a grid over the parameter interval (200 points by default)."""
    grid = np.linspace(config.alpha, config.beta, LOWER_BOUND_GRID) if thetas is None \
        else np.asarray(list(thetas), dtype=float)
    values = np.array([contrast_limit(theta, theta0, config.b, config.T, spec) for theta in grid])
    return ContrastLimit(theta0=theta0, thetas=grid, G=values)


def quadratic_lower_bound(theta0: float, config: ModelConfig, spec: SignalSpec) -> float:
    """
    min over the grid of G(theta, theta0)/(theta - theta0)^2, excluding |theta - theta0| < sqrt(eps).

    Raises:
        IdentifiabilityError: The minimum is not positive
    """
    profile = contrast_profile(theta0, config, spec)
    distance = profile.thetas - theta0
    mask = np.abs(distance) >= math.sqrt(config.epsilon)
    if not np.any(mask):
        raise IdentifiabilityError("quadratic_lower_bound: no grid point outside the sqrt(eps) neighbourhood")
    ratios = profile.G[mask] / distance[mask] ** 2
    c_lower = float(np.min(ratios))
    if not (math.isfinite(c_lower) and c_lower > 0):
        raise IdentifiabilityError(
            f"quadratic_lower_bound: contrast does not separate theta0={theta0} (c_lower={c_lower:.3g})")
    logger.info(f"Quadratic lower bound c_lower={c_lower:.6g} at theta0={theta0}")
    return c_lower


def log_likelihood_profile(thetas: Iterable[float], path: Path, config: ModelConfig,
                           spec: SignalSpec) -> LikelihoodProfile:
    """ln V, score and eps I_eps for each candidate."""
    grid = np.asarray(list(thetas), dtype=float)
    loglik = np.empty_like(grid)
    scores = np.empty_like(grid)
    fisher = np.empty_like(grid)
    for j, theta in enumerate(grid):
        output = run_filter(float(theta), path, config, spec)
        loglik[j] = loglik_from_output(output, path, config.epsilon)
        scores[j] = score_from_output(output, path, config.epsilon)
        fisher[j] = fisher_from_output(output, path, config.epsilon)
    return LikelihoodProfile(thetas=grid, loglik=loglik, score=scores, fisher_eps=fisher)
