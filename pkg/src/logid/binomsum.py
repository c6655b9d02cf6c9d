"""Exact multiple binomial sums for moments at nonnegative integer ``lam``.

Expanding every ``|y_k -/+ y_l|^{2 lam}`` by the binomial theorem and
integrating over the unit cube leaves a finite sum over one index
``I_kl`` in ``[-lam, lam]`` per pair.  With ``I_lk = -I_kl`` the exponent
collected by ``y_k`` is ``(N-1) lam + sum_{l != k} I_kl``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction

from .errors import BudgetError, DomainError

__all__ = [
    "MAX_TERMS",
    "SignPattern",
    "selberg_sum",
    "joint_sum",
    "morris_sum",
    "sum_relation_residual",
]

MAX_TERMS = 10**8


@dataclass(frozen=True)
class SignPattern:
    """Which pairs come from ``|y_k - y_l|`` (1) versus ``|y_k + y_l|`` (0)."""

    n: int
    m: int

    @property
    def N(self) -> int:
        return self.n + self.m

    def pairs(self) -> list[tuple[int, int]]:
        return list(itertools.combinations(range(self.N), 2))

    def s(self, k: int, l: int) -> int:
        return int((k < self.n) == (l < self.n))


def _check_int(name, v, low=0):
    if isinstance(v, bool) or not isinstance(v, int) or v < low:
        raise DomainError(f"{name} must be an integer >= {low}, got {v!r}")


def _enumerate(N: int, lam: int):
    """Yield ``(I, row_sums)`` over all pair indices in lexicographic order."""
    pairs = list(itertools.combinations(range(N), 2))
    count = (2 * lam + 1) ** len(pairs)
    if count > MAX_TERMS:
        raise BudgetError(f"{count} terms exceed the enumeration budget of {MAX_TERMS}")
    for I in itertools.product(range(-lam, lam + 1), repeat=len(pairs)):
        rows = [0] * N
        for (k, l), v in zip(pairs, I):
            rows[k] += v
            rows[l] -= v
        yield I, rows


def _signed_sum(N: int, lam: int, parity) -> Fraction:
    """``sum (-1)^{parity(I)} prod C(2lam, lam+I) prod 1/(1+(N-1)lam+row_k)``."""
    binom = [math.comb(2 * lam, lam + i) for i in range(-lam, lam + 1)]
    base = 1 + (N - 1) * lam
    # every row exponent lies in [1, 1 + 2(N-1) lam]; one common denominator
    D = math.lcm(*range(1, base + (N - 1) * lam + 1)) ** N
    total = 0
    for I, rows in _enumerate(N, lam):
        coef = 1
        for v in I:
            coef *= binom[v + lam]
        num = D
        for r in rows:
            num //= base + r
        term = coef * num
        total += -term if parity(I) & 1 else term
    return Fraction(total, D)


def selberg_sum(N: int, lam: int) -> Fraction:
    """Cube Selberg integral ``S_N(lam)`` as an exact rational.

    Examples
    --------
    >>> selberg_sum(2, 1)
    Fraction(1, 6)
    """
    _check_int("N", N, 1)
    _check_int("lam", lam)
    sign = -1 if (lam * N * (N - 1) // 2) % 2 else 1
    return sign * _signed_sum(N, lam, lambda I: sum(I))


def joint_sum(n: int, m: int, lam: int) -> Fraction:
    """``S_{n,m}(lam)``: same-block pairs ``|y_k - y_l|``, cross pairs ``|y_k + y_l|``."""
    _check_int("n", n)
    _check_int("m", m)
    _check_int("lam", lam)
    if n + m < 1:
        raise DomainError("n + m must be >= 1")
    if n == 0 or m == 0:
        return selberg_sum(n + m, lam)
    pattern = SignPattern(n, m)
    s = [pattern.s(k, l) for k, l in pattern.pairs()]
    sign = -1 if (lam * (n * (n - 1) + m * (m - 1)) // 2) % 2 else 1
    return sign * _signed_sum(n + m, lam, lambda I: sum(v for v, sk in zip(I, s) if sk))


def morris_sum(N: int, a: int, b: int, lam: int) -> Fraction:
    """Morris integral as ``sum (-1)^{sum I} prod C(2lam, lam+I) prod C(a+b, a+row_k)``."""
    _check_int("N", N, 1)
    for name, v in (("a", a), ("b", b), ("lam", lam)):
        _check_int(name, v)
    binom = [math.comb(2 * lam, lam + i) for i in range(-lam, lam + 1)]
    total = 0
    for I, rows in _enumerate(N, lam):
        term = 1
        for r in rows:
            j = a + r
            if j < 0 or j > a + b:
                term = 0
                break
            term *= math.comb(a + b, j)
        if term == 0:
            continue
        for v in I:
            term *= binom[v + lam]
        total += -term if sum(I) & 1 else term
    return Fraction(total)


def sum_relation_residual(N: int, lam: int) -> Fraction:
    """``2^{lam N(N-1) + N} S_N - sum_{n+m=N} C(N, n) S_{n,m}``; zero when the sums agree."""
    _check_int("N", N, 1)
    _check_int("lam", lam)
    lhs = 2 ** (lam * N * (N - 1) + N) * selberg_sum(N, lam)
    rhs = sum(math.comb(N, n) * joint_sum(n, N - n, lam) for n in range(N + 1))
    return lhs - rhs
