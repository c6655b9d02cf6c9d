"""Closed-form and semi-closed-form moment evaluators.

Normalization convention
------------------------
:func:`selberg_product` and :func:`morris_product` return integrals over the
unit *cube* ``[0,1]^N``.  The single-moment integrals ``I_n``, ``J_n`` and the
generalized Selberg integral of :mod:`logid.quadrature` live on the *ordered
simplex* ``0 < t_1 < ... < t_n < 1``.  For a symmetric integrand the two
differ by ``n!``; moments ``E[M^n]`` equal the cube value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping

import numpy as np

from .errors import AccuracyError, DomainError
from .levy import gaussian, moment_finiteness

__all__ = [
    "GammaProductResult",
    "log_gamma",
    "selberg_product",
    "selberg_product_exact",
    "lognormal_moment",
    "morris_product",
    "morris_product_exact",
    "hyp3f2_unit",
    "hyp3f2_terminating_exact",
    "poisson_I",
    "poisson_J",
    "logpoisson_moment",
    "poisson_joint",
    "lognormal_joint_from_sum",
]


@dataclass(frozen=True)
class GammaProductResult:
    """A positive gamma-function product kept in log space.

    ``value`` is ``inf`` when ``exp(log_value)`` does not fit in a double;
    ``log_value`` stays exact in that case.
    """

    log_value: float
    value: float

    @classmethod
    def from_log(cls, log_value: float) -> "GammaProductResult":
        try:
            value = math.exp(log_value)
        except OverflowError:
            value = math.inf
        return cls(log_value, value)

    @property
    def overflow(self) -> bool:
        return math.isinf(self.value)


def log_gamma(x: float) -> float:
    """``log Gamma(x)`` for ``x > 0``; ``log|Gamma(x)|`` off the poles for ``x < 0``."""
    x = float(x)
    if x <= 0 and x == math.floor(x):
        raise DomainError(f"Gamma has a pole at {x:g}")
    return math.lgamma(x)


def _lg(x: float, what: str) -> float:
    if not x > 0:
        raise DomainError(f"gamma argument {what} = {x:.6g} is not positive")
    return math.lgamma(x)


def selberg_product(N: int, lam: float, lam1: float = 0.0, lam2: float = 0.0) -> GammaProductResult:
    """Selberg's gamma product: the ``[0,1]^N`` integral of
    ``prod t_i^lam1 (1-t_i)^lam2 prod_{k<p} |t_p - t_k|^{2 lam}``.
    """
    if N < 1:
        raise DomainError(f"N must be >= 1, got {N}")
    terms = []
    for k in range(N):
        terms.append(_lg(1 + (k + 1) * lam, f"1+({k}+1)*lambda"))
        terms.append(_lg(1 + lam1 + k * lam, f"1+lambda1+{k}*lambda"))
        terms.append(_lg(1 + lam2 + k * lam, f"1+lambda2+{k}*lambda"))
        terms.append(-_lg(1 + lam, "1+lambda"))
        terms.append(-_lg(2 + lam1 + lam2 + (N + k - 1) * lam,
                          f"2+lambda1+lambda2+({N}+{k}-1)*lambda"))
    return GammaProductResult.from_log(math.fsum(terms))


def _fact(x: int) -> int:
    if x < 0:
        raise DomainError(f"factorial of negative integer {x}")
    return math.factorial(x)


def selberg_product_exact(N: int, lam: int, lam1: int = 0, lam2: int = 0) -> Fraction:
    """Selberg's product at nonnegative integer parameters, as an exact rational."""
    for name, v in (("lambda", lam), ("lambda1", lam1), ("lambda2", lam2)):
        if int(v) != v or v < 0:
            raise DomainError(f"{name} must be a nonnegative integer, got {v}")
    out = Fraction(1)
    for k in range(N):
        num = _fact((k + 1) * lam) * _fact(lam1 + k * lam) * _fact(lam2 + k * lam)
        den = _fact(lam) * _fact(1 + lam1 + lam2 + (N + k - 1) * lam)
        out *= Fraction(num, den)
    return out


def lognormal_moment(mu: float, n: int) -> float:
    """``E[M_mu(0,1)^n]`` for the limit lognormal measure."""
    if n < 1:
        raise DomainError(f"moment order must be >= 1, got {n}")
    if n == 1:
        return 1.0
    fin = moment_finiteness(gaussian(1.0), mu, n)
    if not fin.finite:
        raise DomainError(
            f"moment of order {n} is not finite at mu={mu} "
            f"(multiscaling exponent {fin.exponent:.6g} <= 1)")
    res = selberg_product(n, -mu / 2.0, 0.0, 0.0)
    return res.value


def morris_product(N: int, a: float, b: float, lam: float) -> GammaProductResult:
    """Morris constant ``M_N(a, b, lambda)`` as a gamma product."""
    if N < 1:
        raise DomainError(f"N must be >= 1, got {N}")
    terms = []
    for j in range(N):
        terms.append(_lg(1 + a + b + lam * j, f"1+a+b+{j}*lambda"))
        terms.append(_lg(1 + lam * (j + 1), f"1+({j}+1)*lambda"))
        terms.append(-_lg(1 + a + lam * j, f"1+a+{j}*lambda"))
        terms.append(-_lg(1 + b + lam * j, f"1+b+{j}*lambda"))
        terms.append(-_lg(1 + lam, "1+lambda"))
    return GammaProductResult.from_log(math.fsum(terms))


def morris_product_exact(N: int, a: int, b: int, lam: int) -> Fraction:
    """Morris constant at nonnegative integers, exactly (it is an integer)."""
    out = Fraction(1)
    for j in range(N):
        num = _fact(a + b + lam * j) * _fact(lam * (j + 1))
        den = _fact(a + lam * j) * _fact(b + lam * j) * _fact(lam)
        out *= Fraction(num, den)
    return out


# -- 3F2 at unit argument -------------------------------------------------------

def _nonpos_int(x: float) -> bool:
    return x <= 0 and float(x).is_integer()


def hyp3f2_terminating_exact(a1, a2, a3, b1, b2) -> Fraction:
    """Exact sum of a terminating ``3F2(...; 1)``.

    Parameters are converted to :class:`~fractions.Fraction` without rounding,
    so float inputs are summed as the binary rationals they are.
    """
    a = [Fraction(v) for v in (a1, a2, a3)]
    b = [Fraction(v) for v in (b1, b2)]
    stops = [-int(x) for x in a if x.denominator == 1 and x <= 0]
    if not stops:
        raise DomainError("series does not terminate: no top parameter is a nonpositive integer")
    last = min(stops)
    total = Fraction(0)
    term = Fraction(1)
    for k in range(last + 1):
        total += term
        den = (b[0] + k) * (b[1] + k) * (k + 1)
        if den == 0:
            raise DomainError("bottom parameter hits a nonpositive integer inside the sum")
        term = term * (a[0] + k) * (a[1] + k) * (a[2] + k) / den
    return total


def hyp3f2_unit(a1: float, a2: float, a3: float, b1: float, b2: float,
                rtol: float = 1e-13, max_terms: int = 10**6) -> float:
    """Generalized hypergeometric ``3F2(a1, a2, a3; b1, b2; 1)``.

    Terminating series are summed exactly in rational arithmetic.  Otherwise
    the series needs ``s = b1 + b2 - a1 - a2 - a3 > 0``; its terms decay like
    ``k^{-1-s}``, so the partial sums ``S_K`` behave as
    ``S + sum_i c_i K^{-s-i}`` and are extrapolated in ``K`` with those known
    exponents.

    Raises
    ------
    DomainError
        Divergent series, or a bottom parameter at a nonpositive integer.
    AccuracyError
        ``rtol`` not reached within ``max_terms`` terms; ``.estimate`` holds
        the best value.
    """
    for b in (b1, b2):
        if _nonpos_int(b):
            raise DomainError(f"bottom parameter {b} is a nonpositive integer")
    if any(_nonpos_int(a) for a in (a1, a2, a3)):
        return float(hyp3f2_terminating_exact(a1, a2, a3, b1, b2))
    s = b1 + b2 - a1 - a2 - a3
    if not s > 0:
        raise DomainError(f"3F2 at unit argument diverges: convergence margin s = {s:.6g} <= 0")

    K0 = 512
    K = K0
    while True:
        k = np.arange(K, dtype=float)
        ratio = (a1 + k) * (a2 + k) * (a3 + k) / ((b1 + k) * (b2 + k) * (k + 1))
        terms = np.empty(K)
        terms[0] = 1.0
        terms[1:] = np.cumprod(ratio[:-1])
        checkpoints = []
        Kc = K0
        while Kc <= K:
            checkpoints.append(Kc)
            Kc *= 2
        partial = [math.fsum(terms[:c]) for c in checkpoints]
        rounding = 8 * np.finfo(float).eps * math.fsum(np.abs(terms))
        # fast decay: the tail is already below rounding level
        tail_bound = abs(terms[-1]) * K / s
        if tail_bound <= rtol * abs(partial[-1]):
            return partial[-1]
        estimates = []
        for order in (4, 5):
            if len(checkpoints) < order + 1:
                continue
            idx = range(len(checkpoints) - order - 1, len(checkpoints))
            A = np.array([[1.0] + [(K0 / checkpoints[j]) ** (s + i) for i in range(order)]
                          for j in idx])
            rhs = np.array([partial[j] for j in idx])
            estimates.append(float(np.linalg.solve(A, rhs)[0]))
        if len(estimates) == 2:
            value = estimates[1]
            err = abs(estimates[1] - estimates[0]) + rounding
            if err <= rtol * abs(value):
                return value
        if 2 * K > max_terms:
            best = estimates[-1] if estimates else partial[-1]
            raise AccuracyError(
                f"3F2 did not reach rtol={rtol:g} within {K} terms", estimate=best,
                error=err if len(estimates) == 2 else tail_bound)
        K = 2 * K if K >= K0 * 64 else K0 * 64


# -- log-Poisson low moments ---------------------------------------------------

def _check_integrable(n: int, exponent_by_lag, what: str) -> None:
    # every cluster of k consecutive points must be integrable:
    # (k-1) + sum over its pairs of the pair exponent > 0
    for k in range(2, n + 1):
        margin = (k - 1) + sum((k - m) * exponent_by_lag(m) for m in range(1, k))
        if not margin > 0:
            raise DomainError(
                f"{what}: the defining integral diverges (cluster of {k} points has "
                f"margin {margin:.6g} <= 0)")


def _nonzero(x: float, what: str) -> float:
    if x == 0:
        raise DomainError(f"{what} vanishes")
    return x


def _beta(x: float, y: float, what: str) -> float:
    return math.exp(_lg(x, what) + _lg(y, what) - _lg(x + y, what))


def poisson_I(n: int, lam: float) -> float:
    """Ordered-simplex integral ``I_n`` of the c = 2 log-Poisson measure.

    ``I_n(lam) = int prod_{i<j} |x_i - x_j|^{lam 2^{j-i}} dx`` and
    ``E[M^n] = n! I_n(-mu/2)``.  Only ``n`` in {2, 3, 4} is available.
    """
    if n not in (2, 3, 4):
        raise DomainError(f"I_n is available for n in {{2,3,4}}, got {n}")
    _check_integrable(n, lambda m: lam * 2 ** m, f"I_{n}({lam})")
    if n == 2:
        return 1.0 / (_nonzero(1 + 2 * lam, "1+2lambda") * (2 + 2 * lam))
    b1 = _beta(1 + 2 * lam, 1 + 2 * lam, "I_3 beta factor")
    if n == 3:
        return b1 / (_nonzero(2 + 8 * lam, "2+8lambda") * _nonzero(3 + 8 * lam, "3+8lambda"))
    b2 = _beta(1 + 2 * lam, 2 + 8 * lam, "I_4 beta factor")
    f = hyp3f2_unit(-4 * lam, 1 + 2 * lam, 2 + 8 * lam, 2 + 4 * lam, 3 + 10 * lam)
    return b1 * b2 * f / (_nonzero(3 + 22 * lam, "3+22lambda") * _nonzero(4 + 22 * lam, "4+22lambda"))


def poisson_J(n: int, lam: float) -> float:
    """Ordered-simplex integral ``J_n`` of the c = 1/2 log-Poisson measure.

    ``J_n(lam) = int prod_{i<j} |x_i - x_j|^{lam 2^{n-(j-i)}} dx`` and
    ``E[M^n] = n! J_n(-2^{-n} mu/2)``.
    """
    if n not in (2, 3, 4):
        raise DomainError(f"J_n is available for n in {{2,3,4}}, got {n}")
    _check_integrable(n, lambda m: lam * 2 ** (n - m), f"J_{n}({lam})")
    if n == 2:
        return 1.0 / (_nonzero(1 + 2 * lam, "1+2lambda") * (2 + 2 * lam))
    if n == 3:
        b1 = _beta(1 + 4 * lam, 1 + 4 * lam, "J_3 beta factor")
        return b1 / (_nonzero(2 + 10 * lam, "2+10lambda") * _nonzero(3 + 10 * lam, "3+10lambda"))
    b1 = _beta(1 + 8 * lam, 1 + 8 * lam, "J_4 beta factor")
    b2 = _beta(1 + 8 * lam, 2 + 20 * lam, "J_4 beta factor")
    f = hyp3f2_unit(-4 * lam, 1 + 8 * lam, 2 + 20 * lam, 2 + 16 * lam, 3 + 28 * lam)
    return b1 * b2 * f / (_nonzero(3 + 34 * lam, "3+34lambda") * _nonzero(4 + 34 * lam, "4+34lambda"))


def logpoisson_moment(c: float, mu: float, n: int) -> float:
    """``E[M_mu(0,1)^n]`` for the log-Poisson measure with any ``c``, ``n <= 4``.

    Uses the same two-step dimension reduction as ``I_n``/``J_n`` with the
    pair exponents ``d(m) = (c-1)^2 c^{m-1}`` kept symbolic; for ``c = 2`` and
    ``c = 1/2`` it reproduces ``n! I_n`` and ``n! J_n``.
    """
    if not (c > 0) or c == 1:
        raise DomainError(f"c must be positive and != 1, got {c}")
    if n not in (1, 2, 3, 4):
        raise DomainError(f"closed form available for n <= 4, got {n}")
    if n == 1:
        return 1.0
    lam = -mu / 2.0
    d = [(c - 1) ** 2 * c ** (m - 1) for m in range(1, n)]
    _check_integrable(n, lambda m: 2 * lam * d[m - 1], f"log-Poisson moment n={n}")
    phi_n = sum((n - m) * d[m - 1] for m in range(1, n))
    a = 2 * lam * d[0]
    if n == 2:
        S = 1.0 / (_nonzero(1 + a, "1+2lambda d(1)") * (2 + a))
    elif n == 3:
        S = _beta(1 + a, 1 + a, "beta factor") / (
            _nonzero(2 + 2 * lam * phi_n, "2+2lambda phi(-3i)") * (3 + 2 * lam * phi_n))
    else:
        e2 = 2 * lam * d[1]
        top = 2 + 2 * lam * (2 * d[0] + d[1])
        f = hyp3f2_unit(-e2, 1 + a, top, 2 + 2 * a, 3 + 2 * lam * (3 * d[0] + d[1]))
        S = _beta(1 + a, 1 + a, "beta factor") * _beta(1 + a, top, "beta factor") * f / (
            _nonzero(3 + 2 * lam * phi_n, "3+2lambda phi(-4i)") * (4 + 2 * lam * phi_n))
    return math.factorial(n) * S


def poisson_joint(c: float, mu: float, pair: tuple[int, int]) -> float:
    """Joint moments of the log-Poisson masses of ``(0, 1/2)`` and ``(1/2, 1)``.

    ``pair = (1, 1)`` gives ``E[M(0,1/2) M(1/2,1)]`` and ``(1, 2)`` gives
    ``E[M(0,1/2) M(1/2,1)^2]``.  Both follow from the binomial split of
    ``E[M(0,1)^n]`` and the multiscaling law.
    """
    pair = tuple(pair)
    if pair == (1, 1):
        single = _single_logpoisson(c, mu, 2)
        return 0.5 * (1 - 2.0 ** (mu * (c - 1) ** 2 - 1)) * single
    if pair == (1, 2):
        single = _single_logpoisson(c, mu, 3)
        return (1 - 2.0 ** (mu * (c ** 3 - 3 * c + 2) - 2)) * single / 6.0
    raise DomainError(f"pair must be (1, 1) or (1, 2), got {pair}")


def _single_logpoisson(c: float, mu: float, n: int) -> float:
    if c == 2:
        return math.factorial(n) * poisson_I(n, -mu / 2.0)
    if c == 0.5:
        return math.factorial(n) * poisson_J(n, -(2.0 ** -n) * mu / 2.0)
    return logpoisson_moment(c, mu, n)


def lognormal_joint_from_sum(N: int, n: int, lam: float,
                             s_values: Mapping[tuple[int, int], float]) -> float:
    """Solve ``2^{lam N(N-1)+N} S_N = sum_k C(N,k) S_{k,N-k}`` for ``S_{n,N-n}``.

    ``s_values`` maps ``(k, N-k)`` to known cube integrals; a missing entry is
    filled from its mirror ``(N-k, k)`` and the two pure blocks default to the
    Selberg product.  The unknown and its mirror share one value.
    """
    if not 0 < n < N:
        raise DomainError(f"unknown must be a mixed split 0 < n < N, got n={n}, N={N}")
    known = {tuple(k): float(v) for k, v in s_values.items()}
    for (k, m) in known:
        if k + m != N or k < 0 or m < 0:
            raise DomainError(f"entry {(k, m)} does not split N={N}")
    unknown = {(n, N - n), (N - n, n)}
    if unknown & set(known):
        raise DomainError(f"S_{{{n},{N - n}}} is already supplied")
    S_N = selberg_product(N, lam).value
    total = 2.0 ** (lam * N * (N - 1) + N) * S_N
    coeff = 0.0
    for k in range(N + 1):
        if (k, N - k) in unknown:
            coeff += math.comb(N, k)
            continue
        if (k, N - k) in known:
            v = known[(k, N - k)]
        elif (N - k, k) in known:
            v = known[(N - k, k)]
        elif k in (0, N):
            v = S_N
        else:
            raise DomainError(f"missing S_{{{k},{N - k}}}: the relation has more than one unknown")
        total -= math.comb(N, k) * v
    return total / coeff
