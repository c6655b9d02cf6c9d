"""Levy-Khinchine data of the infinitely divisible integrator.

The characteristic exponent is only ever needed on the imaginary axis,
``phi(-i s)``, where it is real.  Spectral measures are finite sums of atoms,
so every integral against ``M(du)`` becomes a finite sum.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DomainError, RangeError

__all__ = [
    "LevySpectrum",
    "Verdict",
    "MomentFiniteness",
    "gaussian",
    "log_poisson",
    "phi_im",
    "d_coeff",
    "d_sequence",
    "d_pair_sum",
    "alpha_coeffs",
    "multiscaling",
    "nondegeneracy_margin",
    "is_nondegenerate",
    "max_intermittency",
    "moment_finiteness",
    "log_cov_coefficient",
]

# exp() overflows a double just above this argument
_EXP_MAX = 709.0


@dataclass(frozen=True)
class LevySpectrum:
    """Gaussian variance plus a finite atomic spectral measure.

    Parameters
    ----------
    sigma2 : float
        Variance of the gaussian component, ``>= 0``.
    atoms : sequence of (u, w)
        Spectral measure with mass ``w > 0`` at jump size ``u != 0``.

    The drift is fixed by the normalization ``phi(-i) = 0`` and is never
    stored.  An empty spectrum (no gaussian part, no atoms) is accepted so
    that scalar functionals can be evaluated on it; it describes plain
    Lebesgue measure and :meth:`require_nondegenerate` rejects it.
    """

    sigma2: float = 0.0
    atoms: tuple[tuple[float, float], ...] = field(default=())

    def __post_init__(self):
        sigma2 = float(self.sigma2)
        if not math.isfinite(sigma2) or sigma2 < 0:
            raise DomainError(f"sigma2 must be finite and >= 0, got {self.sigma2!r}")
        atoms = []
        for k, atom in enumerate(self.atoms):
            try:
                u, w = (float(v) for v in atom)
            except (TypeError, ValueError) as exc:
                raise DomainError(f"atom {k} must be a (u, w) pair, got {atom!r}") from exc
            if not (math.isfinite(u) and math.isfinite(w)):
                raise DomainError(f"atom {k} is not finite: {atom!r}")
            if u == 0:
                raise DomainError(f"atom {k} sits at u = 0")
            if w <= 0:
                raise DomainError(f"atom {k} has nonpositive weight {w}")
            atoms.append((u, w))
        object.__setattr__(self, "sigma2", sigma2)
        object.__setattr__(self, "atoms", tuple(atoms))

    @property
    def is_empty(self) -> bool:
        return self.sigma2 == 0 and not self.atoms

    def require_nondegenerate(self) -> "LevySpectrum":
        if self.is_empty:
            raise DomainError("spectrum has neither a gaussian part nor atoms")
        return self

    def to_dict(self) -> dict:
        return {"sigma2": self.sigma2, "atoms": [[u, w] for u, w in self.atoms]}

    @classmethod
    def from_dict(cls, data) -> "LevySpectrum":
        if not isinstance(data, dict):
            raise DomainError("spectrum must be a JSON object")
        unknown = set(data) - {"sigma2", "atoms"}
        if unknown:
            raise DomainError(f"unknown spectrum field(s): {sorted(unknown)}")
        sigma2 = data.get("sigma2", 0.0)
        atoms = data.get("atoms", [])
        if isinstance(sigma2, bool) or not isinstance(sigma2, (int, float)):
            raise DomainError(f"field 'sigma2' must be a number, got {sigma2!r}")
        if not isinstance(atoms, list):
            raise DomainError("field 'atoms' must be a list of [u, w] pairs")
        for k, atom in enumerate(atoms):
            if (not isinstance(atom, (list, tuple)) or len(atom) != 2
                    or any(isinstance(v, bool) or not isinstance(v, (int, float)) for v in atom)):
                raise DomainError(f"field 'atoms[{k}]' must be a [u, w] pair of numbers")
        return cls(sigma2=sigma2, atoms=tuple(tuple(a) for a in atoms))

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "LevySpectrum":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise DomainError(f"invalid spectrum JSON (line {exc.lineno}): {exc.msg}") from exc
        return cls.from_dict(data)


def gaussian(sigma2: float = 1.0) -> LevySpectrum:
    """Purely gaussian spectrum; ``sigma2 = 1`` gives the limit lognormal measure."""
    return LevySpectrum(sigma2=sigma2)


def log_poisson(c: float) -> LevySpectrum:
    """Unit atom at ``log(c)``: the limit log-Poisson measure."""
    if not (c > 0) or c == 1:
        raise DomainError(f"log-Poisson parameter must satisfy c > 0, c != 1; got {c}")
    return LevySpectrum(sigma2=0.0, atoms=((math.log(c), 1.0),))


def _exp_guard(x: float) -> None:
    if x > _EXP_MAX:
        raise RangeError(f"exponent {x:.6g} overflows double precision")


def phi_im(spec: LevySpectrum, s: float) -> float:
    """Characteristic exponent on the imaginary axis, ``phi(-i s)``.

    ``sigma2/2 (s^2 - s) + sum_j w_j (exp(s u_j) - 1 - s (exp(u_j) - 1))``.
    Vanishes at ``s = 0`` and ``s = 1`` for every spectrum.
    """
    s = float(s)
    if not math.isfinite(s):
        raise DomainError(f"s must be finite, got {s}")
    total = 0.5 * spec.sigma2 * (s * s - s)
    for u, w in spec.atoms:
        _exp_guard(s * u)
        _exp_guard(u)
        total += w * (math.expm1(s * u) - s * math.expm1(u))
    return total


def d_coeff(spec: LevySpectrum, m: int) -> float:
    """Pair interaction exponent ``d(m) = sigma2 + sum_j w_j e^{(m-1)u_j} (e^{u_j}-1)^2``."""
    if m < 1:
        raise DomainError(f"d(m) needs m >= 1, got {m}")
    total = spec.sigma2
    for u, w in spec.atoms:
        _exp_guard((m - 1) * u)
        total += w * math.exp((m - 1) * u) * math.expm1(u) ** 2
    return total


def d_sequence(spec: LevySpectrum, n: int) -> list[float]:
    """``[d(1), ..., d(n)]``."""
    return [d_coeff(spec, m) for m in range(1, n + 1)]


def d_pair_sum(spec: LevySpectrum, n: int) -> float:
    """``sum_{1<=l<j<=n} d(j-l)``, which equals ``phi(-i n)``."""
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    return math.fsum((n - m) * d_coeff(spec, m) for m in range(1, n))


def alpha_coeffs(spec: LevySpectrum, s: Sequence[float]) -> np.ndarray:
    """Coefficients of the joint characteristic function of the cone masses.

    Evaluated at purely imaginary arguments ``q_j = -i s_j`` so every ``phi``
    value is real.  Returns the ``n x n`` lower-triangular matrix
    ``alpha[p, k]`` (0-based, ``k <= p``).
    """
    s = [float(v) for v in s]
    n = len(s)
    if n == 0:
        raise DomainError("s must be nonempty")
    prefix = [0.0]
    for v in s:
        prefix.append(prefix[-1] + v)

    cache: dict[tuple[int, int], float] = {}

    def phi_r(k, p):
        # r_{k,p} with 1-based inclusive bounds, zero when k > p
        if k > p:
            return 0.0
        key = (k, p)
        if key not in cache:
            cache[key] = phi_im(spec, prefix[p] - prefix[k - 1])
        return cache[key]

    alpha = np.zeros((n, n))
    for p in range(1, n + 1):
        for k in range(1, p + 1):
            alpha[p - 1, k - 1] = (phi_r(k, p) + phi_r(k + 1, p - 1)
                                   - phi_r(k, p - 1) - phi_r(k + 1, p))
    return alpha


def multiscaling(spec: LevySpectrum, mu: float, q: float) -> float:
    """Multiscaling spectrum ``q - mu phi(-i q)``."""
    if not mu > 0:
        raise DomainError(f"mu must be > 0, got {mu}")
    return q - mu * phi_im(spec, q)


def _phi_slope(spec: LevySpectrum) -> float:
    # -i phi'(-i): sigma2/2 + sum w (u e^u - e^u + 1)
    total = 0.5 * spec.sigma2
    for u, w in spec.atoms:
        _exp_guard(u)
        total += w * (u * math.exp(u) - math.expm1(u))
    return total


def nondegeneracy_margin(spec: LevySpectrum, mu: float) -> float:
    """``1 + i mu phi'(-i)``; the measure is nondegenerate when positive."""
    return 1.0 - mu * _phi_slope(spec)


def is_nondegenerate(spec: LevySpectrum, mu: float) -> bool:
    if not mu > 0:
        raise DomainError(f"mu must be > 0, got {mu}")
    return nondegeneracy_margin(spec, mu) > 0


def max_intermittency(spec: LevySpectrum) -> float:
    """Supremum of ``mu`` for which the measure is nondegenerate (inf if none)."""
    slope = _phi_slope(spec)
    return math.inf if slope <= 0 else 1.0 / slope


class Verdict(enum.Enum):
    FINITE = "Finite"
    BOUNDARY = "Boundary"
    INFINITE = "Infinite"


@dataclass(frozen=True)
class MomentFiniteness:
    verdict: Verdict
    exponent: float

    @property
    def finite(self) -> bool:
        return self.verdict is Verdict.FINITE


def moment_finiteness(spec: LevySpectrum, mu: float, q: float) -> MomentFiniteness:
    """Classify ``E[M(0,1)^q]`` for ``q > 1`` by the multiscaling exponent.

    The boundary case is decided by exact float comparison with 1; callers
    wanting a tolerance band apply it to ``exponent`` themselves.
    """
    if not q > 1:
        raise DomainError(f"moment order must exceed 1, got {q}")
    zeta = multiscaling(spec, mu, q)
    if zeta > 1:
        verdict = Verdict.FINITE
    elif zeta == 1:
        verdict = Verdict.BOUNDARY
    else:
        verdict = Verdict.INFINITE
    return MomentFiniteness(verdict, zeta)


def log_cov_coefficient(spec: LevySpectrum) -> float:
    """``sigma2 + sum_j w_j u_j^2``: slope of the log-mass covariance in ``-mu log t``."""
    return spec.sigma2 + math.fsum(w * u * u for u, w in spec.atoms)


def random_spectrum(rng: np.random.Generator, max_atoms: int = 4,
                    scale: float = 1.5) -> LevySpectrum:
    """Random valid spectrum, used by property checks."""
    k = int(rng.integers(0, max_atoms + 1))
    sigma2 = float(rng.uniform(0, 2)) if (k == 0 or rng.random() < 0.5) else 0.0
    if k == 0 and sigma2 == 0:
        sigma2 = 1.0
    atoms = []
    for _ in range(k):
        u = 0.0
        while u == 0.0:
            u = float(rng.uniform(-scale, scale))
        atoms.append((u, float(rng.uniform(0.05, 2.0))))
    return LevySpectrum(sigma2=sigma2, atoms=tuple(atoms))

