"""
Solution models - Reflection states, precoders, rate reports and solver results
"""
from dataclasses import dataclass

import numpy as np


@dataclass
class ReflectionState:
    """Phases phi (radians) and unit-modulus coefficients theta = exp(j phi)"""
    phi: np.ndarray
    theta: np.ndarray


@dataclass
class Precoder:
    """M x K precoding matrix, one column per user"""
    W: np.ndarray

    @property
    def frobenius_norm(self):
        return float(np.linalg.norm(self.W))


@dataclass
class RateReport:
    """Per-user SINR and rate, and the weighted sum-rate"""
    gamma: np.ndarray
    rates: np.ndarray
    wsr: float


@dataclass
class BeamformingSolution:
    """Discrete (or continuous) phases, reflection coefficients, precoder and rates"""
    phi: np.ndarray
    theta: np.ndarray
    W: np.ndarray
    report: RateReport
    mode: str = "hard"

    @property
    def wsr(self):
        return self.report.wsr


@dataclass
class OracleResult:
    """Exhaustive search maximizer over all B^N discrete phase vectors"""
    best_phi: np.ndarray
    best_wsr: float
    evaluated_count: int
    precoder_rule: str
    best_W: np.ndarray = None
