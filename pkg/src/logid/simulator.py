"""Monte Carlo of the finite-scale measure ``exp(P(A_eps(u))) du``.

The field ``u -> P(A_eps(u))`` is sampled at the midpoints of ``grid_n``
equal cells of ``[0, 1]`` and the measure of an interval is the exact
integral of the piecewise-constant density, so masses are additive.

Every path draws from its own counter-based stream keyed by
``(seed, path_index, role)``; results do not depend on how paths are
batched.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import levy
from .errors import DomainError

__all__ = [
    "SimConfig",
    "Model",
    "FieldPath",
    "MomentEstimate",
    "rho_eps",
    "simulate_gaussian",
    "simulate_poisson",
    "simulate",
    "measure_mass",
    "path_statistics",
    "jackknife",
    "estimate_moment",
    "estimate_multiscaling",
    "estimate_log_covariance",
    "log_covariance_slope",
]

_ROLE_GAUSS, _ROLE_CONE, _ROLE_TOP = 0, 1, 2


@dataclass(frozen=True)
class SimConfig:
    """Scale cutoff, grid, number of paths, seed and intermittency."""

    epsilon: float
    grid_n: int
    paths: int
    seed: int = 0
    mu: float = 0.2
    method: str = "circulant"

    def __post_init__(self):
        if not 0 < self.epsilon < 1:
            raise DomainError(f"epsilon must lie in (0, 1), got {self.epsilon}")
        if not isinstance(self.grid_n, int) or self.grid_n < 1:
            raise DomainError(f"grid_n must be a positive integer, got {self.grid_n!r}")
        if 1.0 / self.grid_n > self.epsilon / 4 * (1 + 1e-12):
            raise DomainError(f"grid spacing 1/{self.grid_n} exceeds epsilon/4 = {self.epsilon / 4:g}")
        if not isinstance(self.paths, int) or self.paths < 1:
            raise DomainError(f"paths must be a positive integer, got {self.paths!r}")
        if not isinstance(self.seed, int) or not 0 <= self.seed < 2**64:
            raise DomainError("seed must be a 64-bit unsigned integer")
        if not self.mu > 0:
            raise DomainError(f"mu must be > 0, got {self.mu}")
        if self.method not in ("dense", "circulant"):
            raise DomainError(f"unknown gaussian method {self.method!r}")

    @property
    def nodes(self) -> np.ndarray:
        return (np.arange(self.grid_n) + 0.5) / self.grid_n


@dataclass(frozen=True)
class Model:
    """Integrator: ``gaussian`` (unit variance) or ``poisson`` with atom at ``log c``."""

    kind: str = "gaussian"
    c: float | None = None

    def __post_init__(self):
        if self.kind == "gaussian":
            if self.c is not None:
                raise DomainError("the gaussian model takes no c")
        elif self.kind == "poisson":
            if self.c is None or not self.c > 0 or self.c == 1:
                raise DomainError(f"poisson model needs c > 0, c != 1; got {self.c}")
        else:
            raise DomainError(f"unknown model {self.kind!r}")

    @classmethod
    def gaussian(cls) -> "Model":
        return cls("gaussian")

    @classmethod
    def poisson(cls, c: float) -> "Model":
        return cls("poisson", float(c))

    @property
    def spectrum(self) -> levy.LevySpectrum:
        return levy.gaussian() if self.kind == "gaussian" else levy.log_poisson(self.c)

    @property
    def label(self) -> str:
        return "gaussian" if self.kind == "gaussian" else f"poisson(c={self.c:g})"


@dataclass(frozen=True)
class FieldPath:
    """Field values ``P(A_eps(u_i))`` at the cell midpoints."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 1 or not np.all(np.isfinite(v)):
            raise DomainError("field values must be a finite 1-D array")
        object.__setattr__(self, "values", v)

    @property
    def grid_n(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class MomentEstimate:
    mean: float
    std_error: float
    paths_used: int


def rho_eps(epsilon: float, h):
    """Cone-intersection kernel: ``1 + log(1/eps) - h/eps`` below ``eps``,
    ``log(1/h)`` up to 1, zero beyond."""
    if not 0 < epsilon < 1:
        raise DomainError(f"epsilon must lie in (0, 1), got {epsilon}")
    h = np.abs(np.asarray(h, dtype=float))
    with np.errstate(divide="ignore"):
        out = np.where(h < epsilon, 1.0 + math.log(1.0 / epsilon) - h / epsilon,
                       np.where(h <= 1.0, -np.log(np.maximum(h, epsilon)), 0.0))
    return out if out.ndim else float(out)


def _rng(seed: int, path: int, role: int) -> np.random.Generator:
    ss = np.random.SeedSequence(seed, spawn_key=(path, role))
    return np.random.Generator(np.random.Philox(ss))


# -- gaussian ----------------------------------------------------------------------

class _GaussianSampler:
    def __init__(self, config: SimConfig):
        self.config = config
        n = config.grid_n
        var0 = config.mu * rho_eps(config.epsilon, 0.0)
        self.mean = -0.5 * var0
        lags = np.arange(n) / n
        row = config.mu * rho_eps(config.epsilon, lags)
        if config.method == "dense":
            idx = np.arange(n)
            cov = row[np.abs(idx[:, None] - idx[None, :])]
            cov[np.diag_indices(n)] += 1e-12
            try:
                self.factor = np.linalg.cholesky(cov)
            except np.linalg.LinAlgError as exc:
                raise ArithmeticError("grid covariance is not positive definite") from exc
        else:
            # embedding circle of length 2: the kernel vanishes at lag 1
            circ = np.concatenate([row, [config.mu * rho_eps(config.epsilon, 1.0)], row[:0:-1]])
            eig = np.fft.fft(circ).real
            if eig.min() < -1e-8 * eig.max():
                raise ArithmeticError("circulant embedding is not positive semidefinite")
            self.sqrt_eig = np.sqrt(np.clip(eig, 0.0, None) / circ.size)

    def sample(self, path: int) -> np.ndarray:
        cfg = self.config
        rng = _rng(cfg.seed, path, _ROLE_GAUSS)
        n = cfg.grid_n
        if cfg.method == "dense":
            return self.mean + self.factor @ rng.standard_normal(n)
        m = self.sqrt_eig.size
        z = rng.standard_normal(m) + 1j * rng.standard_normal(m)
        return self.mean + np.fft.fft(self.sqrt_eig * z).real[:n]


def simulate_gaussian(config: SimConfig, path: int = 0) -> FieldPath:
    """One gaussian field path: covariance ``mu rho_eps``, mean ``-mu rho_eps(0)/2``."""
    return FieldPath(_GaussianSampler(config).sample(path))


# -- poisson -----------------------------------------------------------------------

def _poisson_counts(config: SimConfig, path: int) -> np.ndarray:
    """Number of Poisson points inside each node's cone ``A_eps(u_i)``."""
    n, eps, mu = config.grid_n, config.epsilon, config.mu
    # scales eps <= l <= 1: only t in [-l/2, 1 + l/2] can reach a node;
    # intensity mu (1 + l) / l^2 splits into the 1/l^2 and 1/l parts
    rng = _rng(config.seed, path, _ROLE_CONE)
    w_inv, w_log = 1.0 / eps - 1.0, math.log(1.0 / eps)
    k = rng.poisson(mu * (w_inv + w_log))
    pick_inv = rng.random(k) < w_inv / (w_inv + w_log)
    inv = 1.0 / rng.uniform(1.0, 1.0 / eps, k)
    logu = eps ** rng.random(k)
    l = np.where(pick_inv, inv, logu)
    t = -l / 2 + rng.random(k) * (1.0 + l)
    half = l / 2
    # scales l > 1: flat top of half-width 1/2, intensity mu dt over t in [-1/2, 3/2]
    rng_top = _rng(config.seed, path, _ROLE_TOP)
    k_top = rng_top.poisson(2.0 * mu)
    t = np.concatenate([t, rng_top.uniform(-0.5, 1.5, k_top)])
    half = np.concatenate([half, np.full(k_top, 0.5)])
    # node i at (i + 1/2)/n is covered iff |t - u_i| <= half
    lo = np.ceil(n * (t - half) - 0.5).astype(np.int64)
    hi = np.floor(n * (t + half) - 0.5).astype(np.int64)
    lo = np.clip(lo, 0, n)
    hi = np.clip(hi, -1, n - 1)
    keep = lo <= hi
    diff = np.zeros(n + 1, dtype=np.int64)
    np.add.at(diff, lo[keep], 1)
    np.add.at(diff, hi[keep] + 1, -1)
    return np.cumsum(diff[:-1])


def simulate_poisson(config: SimConfig, c: float, path: int = 0) -> FieldPath:
    """One log-Poisson field path: ``log(c) * count - mu (c - 1) rho_eps(0)``."""
    Model.poisson(c)
    counts = _poisson_counts(config, path)
    comp = config.mu * (c - 1.0) * rho_eps(config.epsilon, 0.0)
    return FieldPath(math.log(c) * counts - comp)


def _sampler(config: SimConfig, model: Model) -> Callable[[int], np.ndarray]:
    if model.kind == "gaussian":
        return _GaussianSampler(config).sample
    comp = config.mu * (model.c - 1.0) * rho_eps(config.epsilon, 0.0)
    logc = math.log(model.c)
    return lambda path: logc * _poisson_counts(config, path) - comp


def simulate(config: SimConfig, model: Model, path: int = 0) -> FieldPath:
    return FieldPath(_sampler(config, model)(path))


# -- masses and estimators ---------------------------------------------------------------

def _cell_weights(n: int, a: float, b: float) -> np.ndarray:
    edges = np.arange(n + 1) / n
    return np.clip(np.minimum(edges[1:], b) - np.maximum(edges[:-1], a), 0.0, None)


def measure_mass(path: FieldPath, a: float, b: float) -> float:
    """``int_a^b exp(field)`` for the piecewise-constant field on the grid cells."""
    if not 0 <= a < b <= 1:
        raise DomainError(f"need 0 <= a < b <= 1, got ({a}, {b})")
    return float(np.dot(np.exp(path.values), _cell_weights(path.grid_n, a, b)))


def path_statistics(config: SimConfig, model: Model, intervals: Sequence[tuple[float, float]],
                    chunk: int = 256) -> np.ndarray:
    """Masses of each interval on every path, shape ``(paths, len(intervals))``."""
    for a, b in intervals:
        if not 0 <= a < b <= 1:
            raise DomainError(f"interval ({a}, {b}) is not inside [0, 1]")
    W = np.stack([_cell_weights(config.grid_n, a, b) for a, b in intervals], axis=1)
    sample = _sampler(config, model)
    out = np.empty((config.paths, len(intervals)))
    for start in range(0, config.paths, chunk):
        stop = min(start + chunk, config.paths)
        fields = np.stack([sample(p) for p in range(start, stop)])
        out[start:stop] = np.exp(fields) @ W
    return out


def jackknife(features: np.ndarray, stat: Callable[[np.ndarray], float] = None,
              groups: int = 100) -> tuple[float, float]:
    """Grouped delete-one jackknife for a smooth function of feature means.

    Parameters
    ----------
    features : array, shape (paths,) or (paths, k)
        Per-path values; rows are independent.
    stat : callable, optional
        Maps the vector of feature means to the estimate (default: the
        mean itself, for a single feature).
    groups : int
        Number of contiguous path groups deleted in turn.

    Returns
    -------
    (estimate, std_error)
    """
    f = np.asarray(features, dtype=float)
    if f.ndim == 1:
        f = f[:, None]
    stat = stat or (lambda m: float(m[0]))
    n = f.shape[0]
    g = min(groups, n)
    full = float(stat(f.mean(axis=0)))
    if g < 2:
        return full, math.inf
    labels = np.arange(n) * g // n
    sums = np.stack([f[labels == k].sum(axis=0) for k in range(g)])
    counts = np.bincount(labels, minlength=g)
    total = sums.sum(axis=0)
    reps = np.array([stat((total - sums[k]) / (n - counts[k])) for k in range(g)])
    se = math.sqrt((g - 1) / g * float(np.sum((reps - reps.mean()) ** 2)))
    return full, se


def estimate_moment(config: SimConfig, model: Model, intervals, powers) -> MomentEstimate:
    """Empirical ``E[prod mass(I_j)^{p_j}]`` with its jackknife error.

    Examples
    --------
    >>> cfg = SimConfig(epsilon=0.05, grid_n=80, paths=200, seed=1)
    >>> est = estimate_moment(cfg, Model.gaussian(), [(0, 1)], [1])
    >>> abs(est.mean - 1) < 4 * est.std_error
    True
    """
    intervals = [tuple(iv) for iv in intervals]
    powers = [float(p) for p in powers]
    if len(intervals) != len(powers) or not intervals:
        raise DomainError("intervals and powers must be nonempty and of equal length")
    masses = path_statistics(config, model, intervals)
    values = np.prod(masses ** np.array(powers), axis=1)
    mean, se = jackknife(values)
    return MomentEstimate(mean, se, config.paths)


def _window_intervals(t: float, limit: int = 64):
    count = min(int(round(1.0 / t)), limit)
    return [(k * t, (k + 1) * t) for k in range(count)]


def estimate_multiscaling(config: SimConfig, model: Model, q: float = 2.0,
                          scales: Sequence[float] = (0.125, 0.25, 0.5, 1.0)) -> MomentEstimate:
    """Fitted exponent of ``t`` in ``E[mass(0, t)^q]``.

    By stationarity every window ``(k t, (k+1) t)`` has the law of
    ``(0, t)``, so windows are pooled within each path.
    """
    cols, owner = [], []
    for j, t in enumerate(scales):
        for iv in _window_intervals(t):
            cols.append(iv)
            owner.append(j)
    owner = np.array(owner)
    masses = path_statistics(config, model, cols)
    per_path = np.stack([(masses[:, owner == j] ** q).mean(axis=1)
                         for j in range(len(scales))], axis=1)
    x = np.log(np.asarray(scales))

    def slope(means):
        return float(np.polyfit(x, np.log(means), 1)[0])

    value, se = jackknife(per_path, slope)
    return MomentEstimate(value, se, config.paths)


def _log_cov_columns(t: float, tau: float):
    if not (0 < tau < t and t + tau < 1):
        raise DomainError(f"need 0 < tau < t and t + tau < 1, got t={t}, tau={tau}")
    shifts = [s * tau for s in range(int((1.0 - t - tau) / tau + 1e-9) + 1)]
    return [((s, s + tau), (s + t, s + t + tau)) for s in shifts]


def _cov_features(logs: np.ndarray) -> np.ndarray:
    """Per-path ``x, y, x*y`` for each shifted pair; ``logs`` has shape (paths, shifts, 2)."""
    x, y = logs[..., 0], logs[..., 1]
    return np.concatenate([x, y, x * y], axis=1)


def _pooled_cov(means: np.ndarray, k: int) -> float:
    mx, my, mxy = means[:k], means[k:2 * k], means[2 * k:3 * k]
    return float(np.mean(mxy - mx * my))


def estimate_log_covariance(config: SimConfig, model: Model, t: float,
                            tau: float) -> MomentEstimate:
    """``Cov(log mass(t, t+tau), log mass(0, tau))``, pooled over shifted pairs."""
    pairs = _log_cov_columns(t, tau)
    masses = path_statistics(config, model, [iv for pair in pairs for iv in pair])
    logs = np.log(masses).reshape(config.paths, len(pairs), 2)
    value, se = jackknife(_cov_features(logs), lambda m: _pooled_cov(m, len(pairs)))
    return MomentEstimate(value, se, config.paths)


def log_covariance_slope(config: SimConfig, model: Model,
                         ts: Sequence[float] = (0.2, 0.4, 0.6, 0.8),
                         tau: float = 0.02) -> tuple[MomentEstimate, list[MomentEstimate]]:
    """Regression slope of the log-mass covariance against ``-log t``.

    All lags share the same paths; the slope error is a jackknife over
    paths, so the correlation between lags is accounted for.
    """
    layout = [_log_cov_columns(t, tau) for t in ts]
    cols = [iv for pairs in layout for pair in pairs for iv in pair]
    logs = np.log(path_statistics(config, model, cols))
    feats, blocks, col, off = [], [], 0, 0
    for pairs in layout:
        k = len(pairs)
        feats.append(_cov_features(logs[:, col:col + 2 * k].reshape(-1, k, 2)))
        blocks.append((off, k))
        col += 2 * k
        off += 3 * k
    feats = np.concatenate(feats, axis=1)
    x = -np.log(np.asarray(ts))

    def covs(means):
        return [_pooled_cov(means[o:o + 3 * k], k) for o, k in blocks]

    value, se = jackknife(feats, lambda m: float(np.polyfit(x, covs(m), 1)[0]))
    per_t = []
    for j in range(len(ts)):
        v, s = jackknife(feats, lambda m, j=j: covs(m)[j])
        per_t.append(MomentEstimate(v, s, config.paths))
    return MomentEstimate(value, se, config.paths), per_t
