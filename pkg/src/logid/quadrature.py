"""Numerical generalized Selberg integrals in low dimension.

Single moments are ordered-simplex integrals over ``(0, 1)``, joint moments
are integrals over a product of two ordered simplices.  Both reduce to
:func:`logid._sectors.integrate`, which handles the coalescence
singularities exactly, so negative exponents down to the integrability
boundary converge geometrically in the rule order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from . import levy
from ._sectors import PointConfig, QuadResult, integrate
from .errors import DomainError
from .levy import LevySpectrum

__all__ = [
    "SelbergParams",
    "QuadResult",
    "IntervalPair",
    "selberg_general",
    "joint_moment_quad",
    "joint_ordered_integral",
    "recurrence_residual_single",
    "recurrence_residual_joint",
    "s13_2d",
    "s22_2d",
    "s_nm_quad",
]

MAX_SINGLE_DIM = 6
MAX_JOINT_DIM = 5


@dataclass(frozen=True)
class SelbergParams:
    """Dimension, exponents and the pair-interaction sequence ``d(1..n)``."""

    n: int
    lam: float
    lam1: float = 0.0
    lam2: float = 0.0
    d_seq: tuple[float, ...] = field(default=())

    def __post_init__(self):
        if isinstance(self.n, bool) or not isinstance(self.n, int) or self.n < 1:
            raise DomainError(f"n must be an integer >= 1, got {self.n!r}")
        d = tuple(float(v) for v in self.d_seq) if self.d_seq else (1.0,) * self.n
        if len(d) != self.n:
            raise DomainError(f"d_seq must have length n = {self.n}, got {len(d)}")
        if any(not math.isfinite(v) or v < 0 for v in d):
            raise DomainError("d_seq entries must be finite and >= 0")
        for name in ("lam", "lam1", "lam2"):
            if not math.isfinite(getattr(self, name)):
                raise DomainError(f"{name} must be finite")
        object.__setattr__(self, "d_seq", d)

    @classmethod
    def from_spectrum(cls, spec: LevySpectrum, n: int, lam: float,
                      lam1: float = 0.0, lam2: float = 0.0) -> "SelbergParams":
        return cls(n, lam, lam1, lam2, tuple(levy.d_sequence(spec, n)))

    def d(self, m: int) -> float:
        return self.d_seq[m - 1]


@dataclass(frozen=True)
class IntervalPair:
    """Two subintervals ``(a1, b1)`` and ``(a2, b2)`` of ``(0, 1)`` with ``b1 <= a2``."""

    a1: float
    b1: float
    a2: float
    b2: float

    def __post_init__(self):
        if not (0 <= self.a1 < self.b1 <= self.a2 < self.b2 <= 1):
            raise DomainError("intervals must satisfy 0 <= a1 < b1 <= a2 < b2 <= 1, got "
                              f"({self.a1}, {self.b1}, {self.a2}, {self.b2})")

    @property
    def adjacent(self) -> bool:
        return self.b1 == self.a2


def _weights(f, n: int, offset: int = 1) -> Optional[dict[int, Callable]]:
    if f is None:
        return None
    if callable(f):
        return {offset + i: f for i in range(n)}
    fs = list(f)
    if len(fs) != n:
        raise DomainError(f"expected {n} weight functions, got {len(fs)}")
    return {offset + i: fn for i, fn in enumerate(fs) if fn is not None}


def selberg_general(params: SelbergParams, f=None, tol: float = 1e-10,
                    rtol: Optional[float] = None, **engine) -> QuadResult:
    """Ordered-simplex integral ``int_{0<t_1<...<t_n<1}`` of the Selberg integrand.

    The integrand is ``prod f(t_i) t_i^{lam1 d(i)} (1-t_i)^{lam2 d(n-i+1)}
    prod_{k<p} (t_p-t_k)^{2 lam d(p-k)}``; multiply by ``n!`` for the moment.

    Parameters
    ----------
    params : SelbergParams
    f : callable or sequence of callables, optional
        Vectorized weight, either shared by all coordinates or one per
        coordinate (``None`` entries mean 1).
    tol, rtol : float
        Absolute target; if ``rtol`` is given, a relative target
        ``rtol*|value|`` is also accepted.
    **engine
        ``budget``, ``method``, ``samples``, ``seed``, ``threads`` for
        :func:`logid._sectors.integrate`.

    Raises
    ------
    DomainError
        If some cluster of coalescing points is not integrable.
    AccuracyError
        If the target is not met within the evaluation budget.
    """
    n = params.n
    if n > MAX_SINGLE_DIM:
        raise DomainError(f"quadrature supports n <= {MAX_SINGLE_DIM}, got {n}")
    if not tol > 0:
        raise DomainError("tol must be > 0")
    P = n + 2
    E = np.zeros((P, P))
    for i in range(1, n + 1):
        E[0, i] = params.lam1 * params.d(i)
        E[i, P - 1] = params.lam2 * params.d(n - i + 1)
        for j in range(i + 1, n + 1):
            E[i, j] = 2 * params.lam * params.d(j - i)
    config = PointConfig([0.0] + [None] * n + [1.0], E, _weights(f, n))
    return integrate(config, tol=tol, rtol=rtol or 0.0, **engine)


# -- joint moments ---------------------------------------------------------------

def _blocks_config(blocks, exponent, pins=None) -> PointConfig:
    """Points labelled ``1..N`` ordered inside consecutive intervals.

    ``blocks`` is a list of ``(a, b, labels)``; ``exponent(i, j)`` gives the
    exponent of ``|t_i - t_j|``; ``pins`` maps labels to fixed positions.
    Interval ends enter as marker points with no exponent.
    """
    pins = pins or {}
    positions: list[Optional[float]] = []
    labels: list[Optional[int]] = []
    for a, b, labs in blocks:
        positions.append(a)
        labels.append(None)
        for lab in labs:
            positions.append(pins.get(lab))
            labels.append(lab)
        positions.append(b)
        labels.append(None)
    P = len(positions)
    E = np.zeros((P, P))
    for p in range(P):
        for q in range(p + 1, P):
            if labels[p] is not None and labels[q] is not None:
                E[p, q] = exponent(labels[p], labels[q])
    return PointConfig(positions, E)


def joint_ordered_integral(d_seq: Sequence[float], lam: float, iv: IntervalPair,
                           n: int, m: int, pins=None, tol: float = 1e-10,
                           rtol: Optional[float] = None, **engine) -> QuadResult:
    """Product-simplex integral of ``prod |t_p - t_k|^{2 lam d(p-k)}``, no factorials.

    Points ``1..n`` are ordered in ``(a1, b1)`` and ``n+1..n+m`` in
    ``(a2, b2)``; ``pins`` fixes some labels at given positions.

    Adjacent intervals (``b1 == a2``) are handled exactly.  A gap
    ``a2 - b1`` that is tiny but nonzero leaves a near-singularity across
    it, and convergence slows accordingly.
    """
    d = list(d_seq)
    N = n + m
    if len(d) < N - 1:
        raise DomainError(f"need d(1..{N - 1})")
    blocks = [(iv.a1, iv.b1, range(1, n + 1)), (iv.a2, iv.b2, range(n + 1, N + 1))]
    config = _blocks_config(blocks, lambda i, j: 2 * lam * d[abs(j - i) - 1], pins)
    return integrate(config, tol=tol, rtol=rtol or 0.0, **engine)


def joint_moment_quad(spec: LevySpectrum, mu: float, iv: IntervalPair, n: int, m: int,
                      tol: float = 1e-10, rtol: Optional[float] = None,
                      **engine) -> QuadResult:
    """``E[M(a1,b1)^n M(a2,b2)^m]``, the product-simplex integral times ``n! m!``."""
    if n < 1 or m < 1 or n + m > MAX_JOINT_DIM:
        raise DomainError(f"need n, m >= 1 and n + m <= {MAX_JOINT_DIM}, got ({n}, {m})")
    N = n + m
    if N > 1:
        verdict = levy.moment_finiteness(spec, mu, N)
        if not verdict.finite:
            raise DomainError(f"moment of order {N} is not finite "
                              f"(multiscaling exponent {verdict.exponent:.6g})")
    d = levy.d_sequence(spec, N)
    res = joint_ordered_integral(d, -mu / 2, iv, n, m, tol=tol / (math.factorial(n) * math.factorial(m)),
                                 rtol=rtol, **engine)
    return res.scaled(math.factorial(n) * math.factorial(m))


# -- recurrence checks -----------------------------------------------------------

def _relative(lhs: float, rhs: float) -> float:
    return abs(lhs - rhs) / abs(lhs)


def recurrence_residual_single(params: SelbergParams, spec: LevySpectrum,
                               tol: float = 1e-12, rtol: float = 1e-10, **engine) -> float:
    """Relative gap between ``S_n(lam, 0, 0)`` and its two-pin reduction.

    The right side pins ``t_1 = 0`` and ``t_n = 1`` in the same integrand and
    divides by ``(n-1+2 lam phi(-i n))(n+2 lam phi(-i n))``.
    """
    n = params.n
    if n < 2:
        raise DomainError("the recurrence needs n >= 2")
    if params.lam1 != 0 or params.lam2 != 0:
        raise DomainError("the recurrence is stated for lam1 = lam2 = 0")
    lhs = selberg_general(params, tol=tol, rtol=rtol, **engine).value
    d = params.d_seq
    config = _blocks_config([(0.0, 1.0, range(1, n + 1))],
                            lambda i, j: 2 * params.lam * d[abs(j - i) - 1],
                            pins={1: 0.0, n: 1.0})
    pinned = integrate(config, tol=tol, rtol=rtol, **engine).value
    ph = levy.phi_im(spec, n)
    denom = (n - 1 + 2 * params.lam * ph) * (n + 2 * params.lam * ph)
    return _relative(lhs, pinned / denom)


def _joint_recurrence_terms(iv: IntervalPair, n: int, m: int):
    """Signed prefactors and pins of the boundary terms of the joint recurrence.

    Terms whose two pins name the same point (``n = 1`` or ``m = 1``) and
    terms with zero prefactor are left out.
    """
    N = n + m
    a1, b1, a2, b2 = iv.a1, iv.b1, iv.a2, iv.b2
    terms = [
        (+(b2 - a1) ** 2, {1: a1, N: b2}),
        (+(b1 - a1) ** 2, {1: a1, n: b1}),
        (-(a2 - a1) ** 2, {1: a1, n + 1: a2}),
        (-(b2 - b1) ** 2, {n: b1, N: b2}),
        (+(b2 - a2) ** 2, {n + 1: a2, N: b2}),
        (+(a2 - b1) ** 2, {n: b1, n + 1: a2}),
    ]
    return [(c, pins) for c, pins in terms if c != 0 and len(pins) == 2]


def recurrence_residual_joint(spec: LevySpectrum, mu: float, iv: IntervalPair,
                              n: int, m: int, tol: float = 1e-12, rtol: float = 1e-10,
                              **engine) -> float:
    """Relative gap between the joint integral and its boundary-term combination."""
    N = n + m
    if n < 1 or m < 1 or N > MAX_JOINT_DIM:
        raise DomainError(f"need n, m >= 1 and n + m <= {MAX_JOINT_DIM}")
    lam = -mu / 2
    d = levy.d_sequence(spec, N)
    lhs = joint_ordered_integral(d, lam, iv, n, m, tol=tol, rtol=rtol, **engine).value
    parts = []
    for coef, pins in _joint_recurrence_terms(iv, n, m):
        val = joint_ordered_integral(d, lam, iv, n, m, pins=pins, tol=tol, rtol=rtol,
                                     **engine).value
        parts.append(coef * val)
    ph = levy.phi_im(spec, N)
    denom = (N - 1 + 2 * lam * ph) * (N + 2 * lam * ph)
    return _relative(lhs, math.fsum(parts) / denom)


# -- two-dimensional reductions ------------------------------------------------------

def _two_point(layout: str, lam: float, tol: float, rtol: float, **engine) -> QuadResult:
    """One bracket term as a two-point configuration on ``[-1, 1]``.

    Factors ``(x + y)`` are handled by reflecting ``x -> -x`` onto
    ``(-1, 0)``; symmetric terms over the unit square are twice the ordered
    integral.  Each named factor carries exponent ``2 lam``.
    """
    e = 2 * lam
    # layout: positions and list of (point, point) pairs with exponent e
    if layout == "reflected_x0":       # (1-x) x (1+y) y (x+y)
        pos = [-1.0, None, 0.0, None, 1.0]
        pairs = [(0, 1), (1, 2), (0, 3), (2, 3), (1, 3)]
        mult = 1.0
    elif layout == "reflected_x1":     # (1-x)(1+x)(1+y)(1-y)(x+y)
        pos = [-1.0, None, 0.0, None, 1.0]
        pairs = [(0, 1), (1, 4), (0, 3), (3, 4), (1, 3)]
        mult = 1.0
    elif layout == "square_x0":        # (1+x) x (1+y) y (x-y)
        pos = [-1.0, 0.0, None, None, 1.0]
        pairs = [(0, 2), (1, 2), (0, 3), (1, 3), (2, 3)]
        mult = 2.0
    elif layout == "square_pm1":       # (1-x)(1+x)(1+y)(1-y)(x-y)
        pos = [-1.0, 0.0, None, None, 1.0]
        pairs = [(0, 2), (2, 4), (0, 3), (3, 4), (2, 3)]
        mult = 2.0
    elif layout == "square_01":        # (1-x) x (1-y) y (x-y)
        pos = [0.0, None, None, 1.0]
        pairs = [(0, 1), (1, 3), (0, 2), (2, 3), (1, 2)]
        mult = 2.0
    else:
        raise ValueError(layout)
    E = np.zeros((len(pos), len(pos)))
    for a, b in pairs:
        E[a, b] += e
    return integrate(PointConfig(pos, E), tol=tol / mult, rtol=rtol, **engine).scaled(mult)


def _combine(terms, scale: float) -> QuadResult:
    value = scale * math.fsum(c * r.value for c, r in terms)
    err = abs(scale) * math.fsum(abs(c) * r.abs_error_estimate for c, r in terms)
    return QuadResult(value, err, sum(r.evaluations for _, r in terms))


def _check_2d(lam: float):
    if 3 * lam + 1 == 0 or 4 * lam + 1 == 0:
        raise DomainError("3 lam + 1 and 4 lam + 1 must be nonzero")
    if not lam > -0.25:
        raise DomainError(f"two-dimensional reduction needs lam > -1/4, got {lam}")


def s13_2d(lam: float, tol: float = 1e-12, rtol: float = 1e-10, **engine) -> QuadResult:
    """``S_{1,3}(lam)`` from its four-term two-dimensional reduction."""
    _check_2d(lam)
    kw = dict(tol=tol, rtol=rtol, **engine)
    terms = [
        (2.0, _two_point("reflected_x0", lam, **kw)),
        (-1.0, _two_point("square_x0", lam, **kw)),
        (4.0 ** (lam + 1), _two_point("square_pm1", lam, **kw)),
        (-1.0, _two_point("square_01", lam, **kw)),
    ]
    return _combine(terms, 1.0 / (4 * (3 * lam + 1) * (4 * lam + 1)))


def s22_2d(lam: float, tol: float = 1e-12, rtol: float = 1e-10, **engine) -> QuadResult:
    """``S_{2,2}(lam)`` from its three-term two-dimensional reduction."""
    _check_2d(lam)
    kw = dict(tol=tol, rtol=rtol, **engine)
    terms = [
        (1.0, _two_point("square_x0", lam, **kw)),
        (-2.0, _two_point("reflected_x0", lam, **kw)),
        (4.0 ** (lam + 1), _two_point("reflected_x1", lam, **kw)),
    ]
    return _combine(terms, 1.0 / (3 * (3 * lam + 1) * (4 * lam + 1)))


def s_nm_quad(n: int, m: int, lam: float, tol: float = 1e-12, rtol: float = 1e-10,
              **engine) -> QuadResult:
    """Cube integral ``S_{n,m}(lam)`` by direct ``(n+m)``-dimensional quadrature.

    Same-block pairs enter as ``|y_k - y_l|^{2 lam}`` and cross pairs as
    ``|y_k + y_l|^{2 lam}``; reflecting the first block onto ``(-1, 0)``
    turns both into plain distances.
    """
    if n < 0 or m < 0 or n + m < 1 or n + m > MAX_SINGLE_DIM:
        raise DomainError(f"need 1 <= n + m <= {MAX_SINGLE_DIM}")
    mult = math.factorial(n) * math.factorial(m)
    N = n + m
    if n == 0 or m == 0:
        params = SelbergParams(N, lam)
        return selberg_general(params, tol=tol / mult, rtol=rtol, **engine).scaled(mult)
    blocks = [(-1.0, 0.0, range(1, n + 1)), (0.0, 1.0, range(n + 1, N + 1))]
    config = _blocks_config(blocks, lambda i, j: 2 * lam)
    return integrate(config, tol=tol / mult, rtol=rtol, **engine).scaled(mult)
