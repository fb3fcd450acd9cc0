"""
Filter output models for OUFreq.
Kalman-Bucy filter trajectories, oracle diagnostics and the discrete Kalman oracle.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..utils.file_loader import provenance_line, write_csv


@dataclass(frozen=True)
class FilterOutput:
    """
    Filter state for one candidate frequency on the path grid.

    m, gamma, M have N+1 entries (grid nodes); innov has N entries
    (one per increment). Sensitivity fields are None until computed.
    """
    theta: float
    times: np.ndarray
    m: np.ndarray
    gamma: np.ndarray
    innov: np.ndarray
    M: np.ndarray
    m_dot: Optional[np.ndarray] = None
    gamma_dot: Optional[np.ndarray] = None
    M_dot: Optional[np.ndarray] = None
    g: Optional[np.ndarray] = None  # Gain on dX in the m_dot equation
    h_gain: Optional[np.ndarray] = None  # Coefficient of m in the m_dot drift

    @property
    def has_sensitivity(self) -> bool:
        return self.m_dot is not None

    def to_csv(self, filename: str, config_digest: str, seed: Optional[int]) -> bool:
        """
        Write the filter trace: t, m, gamma, m_dot, gamma_dot, innovation.

        The innovation column is empty on the last node, which has no increment.
        """
        n = len(self.times)
        m_dot = self.m_dot if self.m_dot is not None else np.full(n, np.nan)
        gamma_dot = self.gamma_dot if self.gamma_dot is not None else np.full(n, np.nan)
        innov = self.innov.tolist() + [None]
        rows = zip(self.times.tolist(), self.m.tolist(), self.gamma.tolist(),
                   m_dot.tolist(), gamma_dot.tolist(), innov)
        return write_csv(filename, ['t', 'm', 'gamma', 'm_dot', 'gamma_dot', 'innovation'],
                         rows, header=provenance_line(config_digest, seed))


@dataclass(frozen=True)
class FilterDiagnostics:
    """Oracle-only diagnostics that use the hidden state: r = m - Y, k = m_dot + (t f'/f) Y."""
    times: np.ndarray
    r: np.ndarray
    k: Optional[np.ndarray] = None


@dataclass(frozen=True)
class DiscreteFilterResult:
    """Discrete-time Kalman filter: prior means, prior variances and innovation log-likelihood."""
    times: np.ndarray
    m: np.ndarray
    P: np.ndarray
    loglik: float
