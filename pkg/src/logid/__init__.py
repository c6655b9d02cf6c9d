"""Moments of limit log-infinitely-divisible multiplicative chaos.

Four independent routes to the same numbers: Levy-Khinchine closed forms
(:mod:`logid.closedform`), singular simplex quadrature
(:mod:`logid.quadrature`), exact binomial sums (:mod:`logid.binomsum`) and
Monte Carlo of the cone construction (:mod:`logid.simulator`).
"""

from .errors import AccuracyError, BudgetError, DomainError, LogIDError, RangeError
from .levy import LevySpectrum, gaussian, log_poisson

__version__ = "0.1.0"

__all__ = [
    "AccuracyError",
    "BudgetError",
    "DomainError",
    "LevySpectrum",
    "LogIDError",
    "RangeError",
    "gaussian",
    "log_poisson",
]
