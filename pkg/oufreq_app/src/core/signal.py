"""
Periodic modulation f(s) for OUFreq.
Analytic values, derivatives and positivity bounds for every SignalSpec kind.
"""

import logging
import math
from functools import lru_cache
from typing import Tuple, Union

import numpy as np
from scipy import optimize

from ..models.signal_spec import Harmonic, SignalKind, SignalSpec
from ..utils.errors import ConfigurationError

# Set up logger for this module
logger = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi

# Grid size used to locate the extrema of custom-harmonic signals
BOUNDS_GRID_POINTS = 10_001

ArrayLike = Union[float, np.ndarray]


def harmonic_form(spec: SignalSpec) -> Tuple[float, Tuple[Harmonic, ...]]:
    """
    Rewrite any signal kind as c + sum_n [alpha_n cos(2 pi n s) + beta_n sin(2 pi n s)].

    Args:
        spec: Signal specification

    Returns:
        Tuple[float, Tuple[Harmonic, ...]]: (constant, harmonic terms)
    """
    if spec.kind is SignalKind.OFFSET_COSINE:
        return spec.offset, ((1, spec.amplitude, 0.0),)
    if spec.kind is SignalKind.RAISED_COSINE:
        # cos^2(pi s) = (1 + cos(2 pi s)) / 2
        return spec.offset + spec.amplitude / 2.0, ((1, spec.amplitude / 2.0, 0.0),)
    return spec.offset, spec.harmonics


def evaluate_array(spec: SignalSpec, s: ArrayLike) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Vectorised f(s), f'(s), f''(s).

    Args:
        spec: Signal specification
        s: Points (any shape)

    Returns:
        Tuple of arrays with the shape of s
    """
    s = np.asarray(s, dtype=float)
    constant, terms = harmonic_form(spec)
    f = np.full(s.shape, constant, dtype=float)
    df = np.zeros(s.shape, dtype=float)
    d2f = np.zeros(s.shape, dtype=float)
    for n, alpha, beta in terms:
        w = TWO_PI * n
        cos_ws = np.cos(w * s)
        sin_ws = np.sin(w * s)
        f += alpha * cos_ws + beta * sin_ws
        df += w * (beta * cos_ws - alpha * sin_ws)
        d2f -= w * w * (alpha * cos_ws + beta * sin_ws)
    return f, df, d2f


def evaluate(spec: SignalSpec, s: float) -> Tuple[float, float, float]:
    """
    Analytic f(s), f'(s), f''(s) at one point.

    Example:
        >>> evaluate(SignalSpec(amplitude=1.0, offset=2.0), 0.0)[:2]
        (3.0, 0.0)
    """
    f, df, d2f = evaluate_array(spec, float(s))
    return float(f), float(df), float(d2f)


def modulation(spec: SignalSpec, theta: float, times: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    f(theta t) and its theta-derivative t f'(theta t) on a time grid.

    Args:
        spec: Signal specification
        theta: Candidate frequency
        times: Time grid

    Returns:
        Tuple[np.ndarray, np.ndarray]: (f(theta t), t f'(theta t))
    """
    times = np.asarray(times, dtype=float)
    f, df, _ = evaluate_array(spec, theta * times)
    return f, times * df


def _refine_extreme(spec: SignalSpec, s0: float, step: float, sign: float) -> float:
    """Bounded scalar refinement of sign*f around a grid extreme."""
    result = optimize.minimize_scalar(
        lambda s: sign * evaluate(spec, s)[0],
        bounds=(s0 - step, s0 + step),
        method="bounded",
        options={"xatol": 1e-12},
    )
    return sign * float(result.fun)


@lru_cache(maxsize=64)
def bounds(spec: SignalSpec) -> Tuple[float, float]:
    """
    Positivity bounds (kappa, K) = (inf f, sup f).

    Exact for the built-in kinds; custom-harmonic signals use a dense grid
    followed by bounded refinement around the extreme grid points.

    Args:
        spec: Signal specification

    Returns:
        Tuple[float, float]: (kappa, K)

    Raises:
        ConfigurationError: kappa <= 0

    Example:
        >>> bounds(SignalSpec(amplitude=1.0, offset=2.0))
        (1.0, 3.0)
    """
    if spec.kind is SignalKind.OFFSET_COSINE:
        kappa, sup = spec.offset - abs(spec.amplitude), spec.offset + abs(spec.amplitude)
    elif spec.kind is SignalKind.RAISED_COSINE:
        kappa = spec.offset + min(0.0, spec.amplitude)
        sup = spec.offset + max(0.0, spec.amplitude)
    else:
        grid = np.linspace(0.0, 1.0, BOUNDS_GRID_POINTS)
        values, _, _ = evaluate_array(spec, grid)
        step = grid[1] - grid[0]
        kappa = min(float(values.min()), _refine_extreme(spec, grid[int(values.argmin())], step, 1.0))
        sup = max(float(values.max()), _refine_extreme(spec, grid[int(values.argmax())], step, -1.0))
        logger.debug(f"Custom-harmonic bounds refined to kappa={kappa:.12g}, K={sup:.12g}")

    if kappa <= 0:
        raise ConfigurationError(f"signal: infimum {kappa:.6g} is not positive")
    return kappa, sup
