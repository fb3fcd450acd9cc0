"""
Kalman-Bucy filter for OUFreq.

For a candidate frequency theta this module computes the error variance
gamma (Riccati equation), the conditional mean m, their theta-derivatives,
innovations and the oracle diagnostics that use the hidden state.

All stiff linear terms are stepped with the integrating factor e^{-z}
and phi1(z) = (1 - e^{-z})/z. The sensitivities are the exact theta-derivatives
of those discrete recursions, so the score built from them is the exact
gradient of the discrete log-likelihood.
"""

import logging
import math
from dataclasses import replace
from functools import lru_cache
from typing import Callable, Dict, Iterable, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import integrate

from ..models.filter_output import DiscreteFilterResult, FilterDiagnostics, FilterOutput
from ..models.model_config import ModelConfig, ObservedPath, SamplePath
from ..models.signal_spec import SignalSpec
from ..utils.errors import ConfigurationError, QuadratureError, StiffnessError
from .signal import bounds, modulation
from .simulator import ou_transition

# Set up logger for this module
logger = logging.getLogger(__name__)

Path = Union[SamplePath, ObservedPath]

# Below these arguments phi1 and its derivative switch to their Taylor series
_PHI1_SERIES_BELOW = 1e-5
_DPHI1_SERIES_BELOW = 1e-3

# Fraction of T after which small-eps asymptotics are compared
DEFAULT_T0_FRACTION = 0.1

# Riccati passes are deterministic in (theta, a, b, eps, T, N, spec)
RICCATI_CACHE_SIZE = 128


def phi1(z: float) -> float:
    """(1 - e^{-z})/z with phi1(0) = 1."""
    if z < _PHI1_SERIES_BELOW:
        return 1.0 - z / 2.0 + z * z / 6.0
    return -math.expm1(-z) / z


def dphi1(z: float, exp_minus_z: float, phi1_z: float) -> float:
    """Derivative of phi1: (e^{-z} - phi1(z))/z."""
    if z < _DPHI1_SERIES_BELOW:
        return -0.5 + z / 3.0 - z * z / 8.0 + z * z * z / 30.0
    return (exp_minus_z - phi1_z) / z


def phi1_array(z: np.ndarray) -> np.ndarray:
    """Elementwise phi1 with the same series switch-over as phi1."""
    z = np.asarray(z, dtype=float)
    small = z < _PHI1_SERIES_BELOW
    safe = np.where(small, 1.0, z)
    return np.where(small, 1.0 - z / 2.0 + z * z / 6.0, -np.expm1(-safe) / safe)


def dphi1_array(z: np.ndarray, exp_minus_z: np.ndarray, phi1_z: np.ndarray) -> np.ndarray:
    """Elementwise dphi1."""
    z = np.asarray(z, dtype=float)
    small = z < _DPHI1_SERIES_BELOW
    safe = np.where(small, 1.0, z)
    series = -0.5 + z / 3.0 - z * z / 8.0 + z * z * z / 30.0
    return np.where(small, series, (exp_minus_z - phi1_z) / safe)


# Cumulative decay after which solve_linear_recurrence starts a new block
_RECURRENCE_BLOCK_DECAY = 30.0


def solve_linear_recurrence(z: np.ndarray, forcing: np.ndarray, x0: float) -> np.ndarray:
    """
    Solve x_{i+1} = e^{-z_i} x_i + forcing_i, x_0 = x0, for z_i >= 0 without a Python loop per step.

    Inside a block x_j = e^{-L_j} (x_start + sum_{l<j} forcing_l e^{L_{l+1}}), where
    L is the decay accumulated since the block start. A block ends before L
    passes 30, so the weights stay finite and well conditioned.

    Returns:
        np.ndarray: x_0 .. x_n
    """
    z = np.asarray(z, dtype=float)
    forcing = np.asarray(forcing, dtype=float)
    n = z.size
    x = np.empty(n + 1)
    x[0] = x0
    cumulative = np.concatenate(([0.0], np.cumsum(z)))
    start = 0
    while start < n:
        end = int(np.searchsorted(cumulative, cumulative[start] + _RECURRENCE_BLOCK_DECAY,
                                  side='right')) - 1
        end = min(end, n)
        if end <= start:
            # one step decays by more than the block allowance
            x[start + 1] = math.exp(-z[start]) * x[start] + forcing[start]
            start += 1
            continue
        decay = cumulative[start + 1:end + 1] - cumulative[start]
        x[start + 1:end + 1] = np.exp(-decay) * (x[start] + np.cumsum(forcing[start:end] * np.exp(decay)))
        start = end
    return x


def gamma_hat(f0: float, a: float, b: float, epsilon: float) -> float:
    """
    Equilibrium of the constant-signal Riccati equation,
    (a eps^2/f0^2)(sqrt(1 + b^2 f0^2/(a^2 eps^2)) - 1), in the cancellation-free form b^2/(a + r).

    Example:
        >>> round(gamma_hat(1.0, 1.0, 1.0, 0.1), 4)
        0.0905
    """
    r = math.sqrt(a * a + (b * f0 / epsilon) ** 2)
    return b * b / (a + r)


def gamma_star_explicit(t: Union[float, np.ndarray], f0: float, a: float, b: float,
                        epsilon: float, gamma0: float = 0.0) -> Union[float, np.ndarray]:
    """
    Closed-form solution of the constant-signal Riccati equation.

    gamma*(t) = e^{-2rt} [1/(gamma0 - gamma_hat) + (f0^2/(2 r eps^2))(1 - e^{-2rt})]^{-1} + gamma_hat
    with r = sqrt(a^2 + b^2 f0^2/eps^2). With f0 = inf f it bounds the filter variance from above.

    Args:
        t: Time or array of times
        f0: Constant signal level, > 0
        a, b, epsilon: Model parameters
        gamma0: Initial value (default 0)

    Returns:
        Value(s) of gamma*(t); gamma_hat when gamma0 == gamma_hat
    """
    g_hat = gamma_hat(f0, a, b, epsilon)
    if gamma0 == g_hat:
        return np.full_like(np.asarray(t, dtype=float), g_hat) if np.ndim(t) else g_hat
    r = math.sqrt(a * a + (b * f0 / epsilon) ** 2)
    decay = np.exp(-2.0 * r * np.asarray(t, dtype=float))
    bracket = 1.0 / (gamma0 - g_hat) + f0 * f0 / (2.0 * r * epsilon * epsilon) * (1.0 - decay)
    value = decay / bracket + g_hat
    return float(value) if np.ndim(value) == 0 else value


def _grid(T: float, n_steps: int) -> np.ndarray:
    return np.linspace(0.0, T, n_steps + 1)


def _frozen(values: Sequence[float]) -> np.ndarray:
    array = np.asarray(values, dtype=float)
    array.setflags(write=False)
    return array


@lru_cache(maxsize=RICCATI_CACHE_SIZE)
def _riccati_pass(theta: float, a: float, b: float, epsilon: float, T: float, n_steps: int,
                  spec: SignalSpec) -> Tuple[np.ndarray, np.ndarray]:
    """gamma and gamma_dot on the grid; cached and read-only."""
    times = _grid(T, n_steps)
    h = T / n_steps
    f_arr, s_arr = modulation(spec, theta, times)
    f_list, s_list = f_arr.tolist(), s_arr.tolist()
    eps2 = epsilon * epsilon
    b2h = b * b * h
    two_a = 2.0 * a

    gamma = [0.0] * (n_steps + 1)
    gamma_dot = [0.0] * (n_steps + 1)
    exp = math.exp
    for i in range(n_steps):
        fi, si = f_list[i], s_list[i]
        gi, gdi = gamma[i], gamma_dot[i]
        lam = two_a + gi * fi * fi / eps2
        z = lam * h
        e = exp(-z)
        p = phi1(z)
        gamma[i + 1] = e * gi + b2h * p
        lam_dot = (gdi * fi * fi + 2.0 * gi * fi * si) / eps2
        gamma_dot[i + 1] = e * gdi - h * lam_dot * e * gi + b2h * dphi1(z, e, p) * h * lam_dot

    gamma_arr, gamma_dot_arr = _frozen(gamma), _frozen(gamma_dot)
    if not (np.all(np.isfinite(gamma_arr)) and np.all(np.isfinite(gamma_dot_arr))):
        raise StiffnessError(
            f"riccati_solve: non-finite variance at theta={theta}, h={h:.6g}; "
            f"the step violates the stiffness guard h <= eps/(20 b K)")
    logger.debug(f"Riccati pass theta={theta:.10g}, eps={epsilon}, N={n_steps}, "
                 f"gamma(T)={gamma[-1]:.6g}")
    return gamma_arr, gamma_dot_arr


def _grid_size(config: ModelConfig, spec: SignalSpec, n_steps: Optional[int]) -> int:
    if n_steps is not None:
        return int(n_steps)
    _, sup_f = bounds(spec)
    return config.resolve_step(sup_f)[1]


def riccati_solve(theta: float, config: ModelConfig, spec: SignalSpec,
                  n_steps: Optional[int] = None) -> np.ndarray:
    """
    Solve d gamma/dt = -2a gamma - gamma^2 f(theta t)^2/eps^2 + b^2, gamma(0) = 0.

    Exponential step: gamma_{i+1} = e^{-lam h} gamma_i + b^2 h phi1(lam h)
    with lam = 2a + gamma_i f_i^2/eps^2. The result is cached per
    (theta, config, spec, grid) and returned read-only.

    Args:
        theta: Candidate frequency
        config: Model configuration
        spec: Signal specification
        n_steps: Grid size; defaults to the configuration's resolved grid

    Returns:
        np.ndarray: gamma on the N+1 grid nodes (non-negative)

    Raises:
        StiffnessError: Non-finite variance
    """
    n = _grid_size(config, spec, n_steps)
    return _riccati_pass(float(theta), config.a, config.b, config.epsilon, config.T, n, spec)[0]


def riccati_sensitivity(theta: float, config: ModelConfig, spec: SignalSpec,
                        n_steps: Optional[int] = None) -> np.ndarray:
    """theta-derivative of the discrete Riccati solution (gamma_dot), from the same cached pass."""
    n = _grid_size(config, spec, n_steps)
    return _riccati_pass(float(theta), config.a, config.b, config.epsilon, config.T, n, spec)[1]


def clear_riccati_cache() -> None:
    _riccati_pass.cache_clear()


def _mean_pass(f: np.ndarray, s: Optional[np.ndarray], gamma: np.ndarray,
               gamma_dot: Optional[np.ndarray], dX: np.ndarray, h: float, a: float,
               eps2: float, y0: float):
    """m and, when gamma_dot is given, m_dot plus the gain terms of the m_dot equation."""
    f_left, gamma_left = f[:-1], gamma[:-1]
    k = gamma_left * f_left / eps2
    z = (a + k * f_left) * h
    e = np.exp(-z)
    p = phi1_array(z)
    m = solve_linear_recurrence(z, k * p * dX, y0)
    if gamma_dot is None:
        return m, None, None, None

    s_left, gamma_dot_left = s[:-1], gamma_dot[:-1]
    q_dot = (gamma_dot_left * f_left * f_left + 2.0 * gamma_left * f_left * s_left) / eps2
    k_dot = (gamma_dot_left * f_left + gamma_left * s_left) / eps2
    forcing = -h * q_dot * e * m[:-1] + (k_dot * p + k * dphi1_array(z, e, p) * h * q_dot) * dX
    m_dot = solve_linear_recurrence(z, forcing, 0.0)
    return m, m_dot, np.append(k_dot, 0.0), np.append(-q_dot, 0.0)


def _check_finite(name: str, theta: float, *arrays: np.ndarray) -> None:
    for array in arrays:
        if not np.all(np.isfinite(array)):
            raise StiffnessError(f"{name}: non-finite filter output at theta={theta}; "
                                 f"the step violates the stiffness guard")


def filter_mean(theta: float, path: Path, gamma: np.ndarray, config: ModelConfig,
                spec: SignalSpec) -> FilterOutput:
    """
    Conditional mean m(theta, t) and innovations.

    Step: m_{i+1} = e^{-q h} m_i + (gamma_i f_i/eps^2) phi1(q h) dX_i,
    q = a + gamma_i f_i^2/eps^2.

    Args:
        theta: Candidate frequency
        path: Observed (or full) path; only times and dX are read
        gamma: Riccati solution on the path grid
        config: Model configuration
        spec: Signal specification

    Returns:
        FilterOutput without sensitivities
    """
    if len(gamma) != path.n_steps + 1:
        raise ConfigurationError(
            f"filter_mean: gamma has {len(gamma)} nodes, path grid has {path.n_steps + 1}")
    f_arr, _ = modulation(spec, theta, path.times)
    h = path.h
    m, _, _, _ = _mean_pass(f_arr, None, np.asarray(gamma, dtype=float), None, path.dX,
                            h, config.a, config.epsilon ** 2, config.y0)
    M = f_arr * m
    innov = path.dX - M[:-1] * h
    _check_finite("filter_mean", theta, m)
    return FilterOutput(theta=float(theta), times=path.times, m=m, gamma=gamma, innov=innov, M=M)


def filter_sensitivity(theta: float, path: Path, output: FilterOutput, config: ModelConfig,
                       spec: SignalSpec) -> Tuple[np.ndarray, np.ndarray]:
    """
    theta-derivatives (m_dot, gamma_dot) of the filter.

    m_dot follows dm_dot = -q m_dot dt - q_dot m dt + g dX with
    g = (gamma_dot f + gamma t f')/eps^2, stepped as the exact derivative of the
    mean recursion. Both start at zero.

    Returns:
        Tuple[np.ndarray, np.ndarray]: (m_dot, gamma_dot)
    """
    return _sensitivity_arrays(theta, path, output, config, spec)[:2]


def _sensitivity_arrays(theta: float, path: Path, output: FilterOutput, config: ModelConfig,
                        spec: SignalSpec):
    gamma_dot = _riccati_pass(float(theta), config.a, config.b, config.epsilon, path.T,
                              path.n_steps, spec)[1]
    f_arr, s_arr = modulation(spec, theta, path.times)
    _, m_dot, gain, drift = _mean_pass(f_arr, s_arr, np.asarray(output.gamma, dtype=float),
                                       gamma_dot, path.dX, path.h, config.a,
                                       config.epsilon ** 2, config.y0)
    _check_finite("filter_sensitivity", theta, m_dot)
    return m_dot, gamma_dot, gain, drift, s_arr, f_arr


def run_filter(theta: float, path: Path, config: ModelConfig, spec: SignalSpec,
               sensitivity: bool = True) -> FilterOutput:
    """
    Riccati solution, conditional mean and (optionally) sensitivities in one call.

    Example:
        >>> output = run_filter(1.0, path.observed(), config, spec)
        >>> output.M_dot.shape == output.m.shape
        True
    """
    gamma = _riccati_pass(float(theta), config.a, config.b, config.epsilon, path.T,
                          path.n_steps, spec)[0]
    output = filter_mean(theta, path, gamma, config, spec)
    if not sensitivity:
        return output
    m_dot, gamma_dot, gain, drift, s_arr, f_arr = _sensitivity_arrays(theta, path, output, config, spec)
    return replace(output, m_dot=m_dot, gamma_dot=gamma_dot, M_dot=s_arr * output.m + f_arr * m_dot,
                   g=gain, h_gain=drift)


def sensitivity_finite_difference(theta: float, path: Path, config: ModelConfig, spec: SignalSpec,
                                  step: Optional[float] = None) -> Tuple[np.ndarray, np.ndarray]:
    """
    Central differences of m and gamma in theta.

    Args:
        step: Difference step; defaults to sqrt(eps)/100

    Returns:
        Tuple[np.ndarray, np.ndarray]: (m_dot, gamma_dot) approximations
    """
    delta = math.sqrt(config.epsilon) / 100.0 if step is None else step
    upper = run_filter(theta + delta, path, config, spec, sensitivity=False)
    lower = run_filter(theta - delta, path, config, spec, sensitivity=False)
    return (upper.m - lower.m) / (2.0 * delta), (upper.gamma - lower.gamma) / (2.0 * delta)


def gamma_dot_duhamel(theta: float, config: ModelConfig, spec: SignalSpec,
                      eval_times: Optional[Iterable[float]] = None,
                      n_steps: Optional[int] = None) -> Tuple[np.ndarray, np.ndarray]:
    """
    gamma_dot from its variation-of-constants form,

        gamma_dot(t) = -(2/eps^2) int_0^t exp(-2 int_s^t q dv) gamma(s)^2 f(theta s) s f'(theta s) ds,

    evaluated by Simpson quadrature on the grid. It shares gamma with the ODE
    route but none of the sensitivity recursion.

    Args:
        eval_times: Times at which to evaluate; defaults to 50 points on (T/10, T]
        n_steps: Grid size; defaults to the configuration's resolved grid

    Returns:
        Tuple[np.ndarray, np.ndarray]: (evaluation times snapped to the grid, gamma_dot values)
    """
    n = _grid_size(config, spec, n_steps)
    times = _grid(config.T, n)
    gamma = riccati_solve(theta, config, spec, n_steps=n)
    f_arr, s_arr = modulation(spec, theta, times)
    eps2 = config.epsilon ** 2
    q = config.a + gamma * f_arr ** 2 / eps2
    Q = integrate.cumulative_trapezoid(2.0 * q, times, initial=0.0)
    source = -2.0 * gamma ** 2 * f_arr * s_arr / eps2

    if eval_times is None:
        eval_times = np.linspace(DEFAULT_T0_FRACTION * config.T, config.T, 50)
    indices = np.clip(np.rint(np.asarray(list(eval_times)) / (config.T / n)).astype(int), 0, n)

    values = np.empty(len(indices))
    for j, idx in enumerate(indices):
        if idx == 0:
            values[j] = 0.0
            continue
        weights = np.exp(-(Q[idx] - Q[:idx + 1]))
        values[j] = integrate.simpson(weights * source[:idx + 1], x=times[:idx + 1])
    return times[indices], values


def filter_diagnostics(output: FilterOutput, path: SamplePath, spec: SignalSpec) -> FilterDiagnostics:
    """Oracle-only r = m - Y and k = m_dot + (t f'/f) Y; needs the hidden state."""
    f_arr, s_arr = modulation(spec, output.theta, path.times)
    r = output.m - path.Y
    k = None if output.m_dot is None else output.m_dot + s_arr / f_arr * path.Y
    return FilterDiagnostics(times=path.times, r=r, k=k)


def sensitivity_second_moments(theta: float, config: ModelConfig, spec: SignalSpec,
                               n_steps: Optional[int] = None) -> np.ndarray:
    """
    E[M_dot_i^2] on the grid for data generated at theta itself.

    (Y_i, m_i, m_dot_i) is a linear Gaussian recursion driven by the exact OU
    transition and the observation noise, so its second moments obey a closed
    deterministic recursion. Nothing is simulated.

    Args:
        theta: Frequency of both the data and the filter
        config: Model configuration (a, b, eps, y0, T)
        spec: Signal specification
        n_steps: Grid size; defaults to the configuration's resolved grid

    Returns:
        np.ndarray: E[M_dot_i^2] for i = 0..N
    """
    n = _grid_size(config, spec, n_steps)
    h = config.T / n
    gamma, gamma_dot = _riccati_pass(float(theta), config.a, config.b, config.epsilon, config.T, n, spec)
    f_arr, s_arr = modulation(spec, theta, _grid(config.T, n))
    eps2 = config.epsilon ** 2
    f_left, s_left = f_arr[:-1], s_arr[:-1]
    gamma_left, gamma_dot_left = gamma[:-1], gamma_dot[:-1]

    k = gamma_left * f_left / eps2
    z = (config.a + k * f_left) * h
    e = np.exp(-z)
    p = phi1_array(z)
    q_dot = (gamma_dot_left * f_left * f_left + 2.0 * gamma_left * f_left * s_left) / eps2
    k_dot = (gamma_dot_left * f_left + gamma_left * s_left) / eps2
    c = k_dot * p + k * dphi1_array(z, e, p) * h * q_dot
    noise = config.epsilon * math.sqrt(h)

    # m' = alpha Y + e m + beta xi,  m_dot' = kappa Y - nu m + e m_dot + delta xi
    alpha, beta = (k * p * f_left * h).tolist(), (k * p * noise).tolist()
    kappa, delta = (c * f_left * h).tolist(), (c * noise).tolist()
    nu = (h * q_dot * e).tolist()
    e_list = e.tolist()
    rho, sigma = ou_transition(config.a, config.b, h)
    rho2, sigma2 = rho * rho, sigma * sigma

    mm, md, dd = [0.0] * (n + 1), [0.0] * (n + 1), [0.0] * (n + 1)
    y2 = config.y0 * config.y0
    yy, ym, yd = y2, y2, 0.0
    mm[0] = y2
    for i in range(n):
        al, be, ka, de, nu_i, ei = alpha[i], beta[i], kappa[i], delta[i], nu[i], e_list[i]
        mmi, mdi, ddi = mm[i], md[i], dd[i]
        mm[i + 1] = al * al * yy + 2.0 * al * ei * ym + ei * ei * mmi + be * be
        md[i + 1] = (al * ka * yy - al * nu_i * ym + al * ei * yd + ei * ka * ym
                     - ei * nu_i * mmi + ei * ei * mdi + be * de)
        dd[i + 1] = (ka * ka * yy + nu_i * nu_i * mmi + ei * ei * ddi - 2.0 * ka * nu_i * ym
                     + 2.0 * ka * ei * yd - 2.0 * nu_i * ei * mdi + de * de)
        yy, ym, yd = (rho2 * yy + sigma2, rho * (al * yy + ei * ym),
                      rho * (ka * yy - nu_i * ym + ei * yd))

    moments = s_arr ** 2 * np.asarray(mm) + 2.0 * s_arr * f_arr * np.asarray(md) + f_arr ** 2 * np.asarray(dd)
    _check_finite("sensitivity_second_moments", theta, moments)
    return moments


def innovation_whiteness(output: FilterOutput, path: Path, config: ModelConfig) -> Dict[str, float]:
    """Mean, variance and lag-1 autocorrelation of the normalised innovations (dX - f m h)/(eps sqrt(h))."""
    normalised = output.innov / (config.epsilon * math.sqrt(path.h))
    centred = normalised - normalised.mean()
    lag1 = float(np.dot(centred[:-1], centred[1:]) / np.dot(centred, centred))
    return {
        'n': int(normalised.size),
        'mean': float(normalised.mean()),
        'variance': float(normalised.var(ddof=1)),
        'lag1_autocorrelation': lag1,
        'mean_bound': 3.0 / math.sqrt(normalised.size),
    }


def riccati_asymptotic_error(theta: float, config: ModelConfig, spec: SignalSpec,
                             t0: Optional[float] = None) -> float:
    """e(eps) = sup_{t >= t0} |gamma - b eps/f(theta t)| with t0 = T/10 by default."""
    gamma = riccati_solve(theta, config, spec)
    times = _grid(config.T, len(gamma) - 1)
    f_arr, _ = modulation(spec, theta, times)
    start = DEFAULT_T0_FRACTION * config.T if t0 is None else t0
    mask = times >= start
    return float(np.max(np.abs(gamma[mask] - config.b * config.epsilon / f_arr[mask])))


def comparison_bound_epsilon0(config: ModelConfig, spec: SignalSpec, ladder: Sequence[float],
                              t0: Optional[float] = None) -> Dict[str, object]:
    """
    Check the small-eps bracket b/(2K) <= gamma/eps <= 2b/kappa on t > t0 over a ladder.

    Returns:
        Dict with per-eps results and 'epsilon0': the largest ladder value from
        which the bracket holds for it and every smaller value (None if never)
    """
    kappa, sup_f = bounds(spec)
    start = DEFAULT_T0_FRACTION * config.T if t0 is None else t0
    rows = []
    for epsilon in sorted(ladder, reverse=True):
        scaled = config.with_epsilon(epsilon)
        gamma = riccati_solve(config.theta, scaled, spec)
        times = _grid(config.T, len(gamma) - 1)
        ratio = gamma[times > start] / epsilon
        lower, upper = float(ratio.min()), float(ratio.max())
        holds = lower >= config.b / (2.0 * sup_f) and upper <= 2.0 * config.b / kappa
        rows.append({'epsilon': epsilon, 'min_ratio': lower, 'max_ratio': upper, 'holds': holds})

    epsilon0 = None
    for row in reversed(rows):  # smallest eps first
        if not row['holds']:
            break
        epsilon0 = row['epsilon']
    logger.info(f"Empirical eps0 for the Riccati bracket: {epsilon0}")
    return {'rows': rows, 'epsilon0': epsilon0}


def discrete_kalman_filter(theta: float, path: Path, config: ModelConfig,
                           spec: SignalSpec) -> DiscreteFilterResult:
    """
    Discrete-time Kalman filter on the path grid.

    State: Y_{i+1} = e^{-ah} Y_i + noise with variance b^2(1 - e^{-2ah})/(2a).
    Measurement: dX_i = f_i h Y_i + noise with variance eps^2 h.
    Returns prior means/variances (the analogue of m_i, gamma_i) and the
    Gaussian innovation log-likelihood.
    """
    f_arr, _ = modulation(spec, theta, path.times)
    h = path.h
    decay, noise_sd = ou_transition(config.a, config.b, h)
    process_var = noise_sd * noise_sd
    meas_var = config.epsilon ** 2 * h
    n_steps = path.n_steps

    m = [0.0] * (n_steps + 1)
    P = [0.0] * (n_steps + 1)
    m[0] = config.y0
    loglik = 0.0
    log_2pi = math.log(2.0 * math.pi)
    f_list, dX = f_arr.tolist(), path.dX.tolist()
    for i in range(n_steps):
        c = f_list[i] * h
        mi, Pi = m[i], P[i]
        S = c * c * Pi + meas_var
        v = dX[i] - c * mi
        gain = Pi * c / S
        loglik -= 0.5 * (log_2pi + math.log(S) + v * v / S)
        m[i + 1] = decay * (mi + gain * v)
        P[i + 1] = decay * decay * Pi * (1.0 - gain * c) + process_var
    return DiscreteFilterResult(times=path.times, m=np.asarray(m), P=np.asarray(P), loglik=loglik)


def laplace_asymptotic(F: Callable[[float], float], G: Callable[[float], float], t: float,
                       epsilon: float) -> Tuple[float, float]:
    """
    N_eps(t) = int_0^t exp(-(1/eps) int_s^t F dv) G(s) ds by quadrature, and its
    small-eps approximation eps G(t)/F(t).

    The substitution s = t - eps u moves the boundary layer to u = O(1); the
    outer integral runs over geometrically growing u-segments.

    Args:
        F: Rate function with F(0) = 0 and F > 0 on (0, T]
        G: Weight function
        t: Evaluation point
        epsilon: Small parameter

    Returns:
        Tuple[float, float]: (quadrature value, asymptotic value)

    Raises:
        QuadratureError: Quadrature did not converge
    """
    def inner(u: float) -> float:
        if u == 0.0:
            return 0.0
        value, abserr = integrate.quad(F, t - epsilon * u, t, epsabs=0.0, epsrel=1e-12, limit=200)
        return value

    def integrand(u: float) -> float:
        return math.exp(-inner(u) / epsilon) * G(t - epsilon * u)

    u_max = t / epsilon
    edges = [0.0]
    edge = 1.0
    while edge < u_max:
        edges.append(edge)
        edge *= 2.0
    edges.append(u_max)

    total = 0.0
    for left, right in zip(edges, edges[1:]):
        value, abserr = integrate.quad(integrand, left, right, epsabs=1e-300, epsrel=1e-11, limit=200)
        if abserr > max(1e-8 * abs(value), 1e-15):
            raise QuadratureError(f"laplace_asymptotic: quadrature error {abserr:.3g} on [{left}, {right}]")
        total += value
        # exp(-745) underflows; nothing beyond this segment contributes
        if inner(right) / epsilon > 745.0:
            break

    F_t = F(t)
    asymptotic = epsilon * G(t) / F_t if F_t != 0 else math.inf
    return epsilon * total, asymptotic
