"""Sector-decomposed integration of products of point-distance powers.

The integrals handled here have the form

    int  prod_{P<Q} |x_P - x_Q|^{E[P,Q]}  prod_free w_P(x_P)  dx_free

over ordered points on a line: some points are fixed, the free ones are
ordered between consecutive fixed points.  Every pair distance is a sum of
consecutive gaps, so singularities sit where runs of consecutive gaps
vanish together.

In each block of free points the largest gap is pulled out (primary
sector) and the remaining gaps become ratios in ``[0, 1]``.  Maximal runs of
such small gaps are then split by which gap is largest, recursively, which
is a sum over binary trees of the run.  Inside one sector every small gap is
a product of cube variables along a root path, and each singular cluster
contributes a pure power ``u^sigma`` that is integrated exactly by a
Gauss-Jacobi rule; what remains is analytic on the closed cube.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.special import roots_jacobi

from .errors import AccuracyError, DomainError

# Gauss-Jacobi orders tried per sector, coarse to fine
ORDERS = (5, 8, 11, 15, 20, 26, 34, 44)


@dataclass(frozen=True)
class QuadResult:
    """Quadrature value with an absolute error estimate."""

    value: float
    abs_error_estimate: float
    evaluations: int
    method: str = "sector-gauss-jacobi"

    def __post_init__(self):
        if not (math.isfinite(self.value) and math.isfinite(self.abs_error_estimate)):
            raise AccuracyError("non-finite quadrature result", estimate=self.value,
                                error=self.abs_error_estimate)
        if self.abs_error_estimate < 0:
            raise ValueError("error estimate must be nonnegative")

    def scaled(self, factor: float) -> "QuadResult":
        return QuadResult(self.value * factor, self.abs_error_estimate * abs(factor),
                          self.evaluations, self.method)


@dataclass
class PointConfig:
    """Ordered points on a line with pairwise distance exponents.

    ``positions[i]`` is a float for a fixed point and ``None`` for a free
    one.  The first and last points must be fixed.  ``exponents`` is read
    from its upper triangle.  ``weights`` optionally maps a free point index
    to a vectorized weight function of its position.
    """

    positions: Sequence[Optional[float]]
    exponents: np.ndarray
    weights: dict[int, Callable] | None = None


@lru_cache(maxsize=4096)
def _jacobi_rule(order: int, sigma: float):
    # int_0^1 u^sigma f(u) du ~ sum w_i f(u_i)
    x, w = roots_jacobi(order, 0.0, sigma)
    return (x + 1.0) / 2.0, w * 2.0 ** (-sigma - 1.0)


class _Prepared:
    """Merged points, blocks and the list of sectors."""

    def __init__(self, config: PointConfig):
        pos = list(config.positions)
        E = np.triu(np.asarray(config.exponents, dtype=float), 1)
        if E.shape != (len(pos), len(pos)):
            raise DomainError("exponent matrix shape does not match the number of points")
        if len(pos) < 2 or pos[0] is None or pos[-1] is None:
            raise DomainError("first and last points must be fixed")
        weights = dict(config.weights or {})
        for i in weights:
            if pos[i] is not None:
                raise DomainError(f"weight given for fixed point {i}")

        # merge consecutive fixed points at the same position
        groups: list[list[int]] = []
        for i, p in enumerate(pos):
            if (p is not None and groups and pos[groups[-1][-1]] is not None
                    and pos[groups[-1][-1]] == p):
                groups[-1].append(i)
            else:
                groups.append([i])
        self.zero = False
        for g in groups:
            inner = sum(E[a, b] for a, b in itertools.combinations(g, 2))
            if inner < 0:
                raise DomainError("coincident fixed points carry a negative distance exponent")
            if inner > 0:
                self.zero = True
        P = len(groups)
        M = np.zeros((P, P))
        for a in range(P):
            for b in range(a + 1, P):
                M[a, b] = sum(E[i, j] for i in groups[a] for j in groups[b])
        self.E = M
        self.pos = [pos[g[0]] for g in groups]
        self.weights = {gi: weights[g[0]] for gi, g in enumerate(groups) if g[0] in weights}
        self.n_points = P

        fixed = [i for i, p in enumerate(self.pos) if p is not None]
        for a, b in zip(fixed, fixed[1:]):
            if self.pos[b] < self.pos[a]:
                raise DomainError("fixed points must be nondecreasing")
        # blocks: (first gap, number of gaps, length, number of free points)
        self.blocks = []
        for a, b in zip(fixed, fixed[1:]):
            length = self.pos[b] - self.pos[a]
            k = b - a - 1
            if length == 0 and k > 0:
                self.zero = True
            self.blocks.append((a, b - a, length, k))
        self.n_gaps = P - 1
        self.n_free = sum(b[3] for b in self.blocks)
        self.fixed = fixed
        self.pairs = [(a, b, self.E[a, b]) for a in range(P) for b in range(a + 1, P)
                      if self.E[a, b] != 0]
        if not self.zero and self.n_free > 0:
            self.sectors = list(self._sectors())
        else:
            self.sectors = []

    # -- sector enumeration ----------------------------------------------------

    def _sectors(self):
        free_blocks = [blk for blk in self.blocks if blk[3] > 0]
        choices = [range(blk[0], blk[0] + blk[1]) for blk in free_blocks]
        const_gaps = {blk[0] for blk in self.blocks if blk[3] == 0}
        for bigs in itertools.product(*choices):
            big = set(bigs) | const_gaps
            runs = []
            cur: list[int] = []
            for g in range(self.n_gaps):
                if g in big:
                    if cur:
                        runs.append(cur)
                    cur = []
                else:
                    cur.append(g)
            if cur:
                runs.append(cur)
            per_run = [list(_trees(0, len(r) - 1)) for r in runs]
            for combo in itertools.product(*per_run):
                yield self._build_sector(bigs, runs, combo)

    def _build_sector(self, bigs, runs, trees):
        small = [g for r in runs for g in r]
        var_of_gap = {g: i for i, g in enumerate(small)}
        D = len(small)
        path = np.zeros((D, D))          # path[gap var, node var]
        jac = np.zeros(D)
        sigma = np.zeros(D)
        for run, tree in zip(runs, trees):
            for node, lo, hi, ancestors in _walk(tree):
                v = var_of_gap[run[node]]
                jac[v] = hi - lo
                glo, ghi = run[lo], run[hi]
                # pairs whose whole gap interval lies inside this subtree range
                s = float(hi - lo)
                for a, b, e in self.pairs:
                    if a >= glo and b - 1 <= ghi:
                        s += e
                sigma[v] = s
                for anc in ancestors + [node]:
                    path[v, var_of_gap[run[anc]]] = 1.0
        for v in range(D):
            if not sigma[v] > -1:
                raise DomainError(
                    "integrand is not integrable: a cluster of coalescing points has "
                    f"singular exponent {sigma[v] - jac[v]:.6g} against "
                    f"{int(jac[v]) + 1}-dimensional volume")
        return _Sector(bigs=tuple(bigs), small=tuple(small), path=path, jac=jac, sigma=sigma)

    # -- evaluation ------------------------------------------------------------

    def evaluate(self, sector: "_Sector", U: np.ndarray) -> np.ndarray:
        """Integrand divided by ``prod u^sigma`` at cube points ``U`` (rows)."""
        npts = U.shape[0]
        logU = np.log(U)
        logx = logU @ sector.path.T
        x = np.exp(logx)
        gaps = np.empty((npts, self.n_gaps))
        log_jac = logU @ (sector.jac - sector.sigma)
        var_of_gap = {g: i for i, g in enumerate(sector.small)}
        big_iter = iter(sector.bigs)
        for first, count, length, k in self.blocks:
            if k == 0:
                gaps[:, first] = length
                continue
            bigg = next(big_iter)
            members = [g for g in range(first, first + count) if g != bigg]
            S = x[:, [var_of_gap[g] for g in members]].sum(axis=1)
            scale = length / (1.0 + S)
            gaps[:, bigg] = scale
            for g in members:
                gaps[:, g] = scale * x[:, var_of_gap[g]]
            log_jac += k * math.log(length) - (k + 1) * np.log1p(S)
        logf = log_jac
        for a, b, e in self.pairs:
            if b == a + 1:
                dist = gaps[:, a]
            else:
                dist = gaps[:, a:b].sum(axis=1)
            logf = logf + e * np.log(dist)
        val = np.exp(logf)
        if self.weights:
            start = self.pos[0]
            positions = start + np.cumsum(gaps, axis=1)
            for i, fn in self.weights.items():
                val = val * np.asarray(fn(positions[:, i - 1]), dtype=float)
        return val

    def fixed_value(self) -> float:
        out = 1.0
        for a, b, e in self.pairs:
            out *= abs(self.pos[b] - self.pos[a]) ** e
        return out


@dataclass(frozen=True)
class _Sector:
    bigs: tuple
    small: tuple
    path: np.ndarray
    jac: np.ndarray
    sigma: np.ndarray


def _trees(lo, hi):
    """All binary trees on positions lo..hi in in-order (Catalan many)."""
    if lo > hi:
        yield None
        return
    for root in range(lo, hi + 1):
        for left in _trees(lo, root - 1):
            for right in _trees(root + 1, hi):
                yield (root, lo, hi, left, right)


def _walk(tree, ancestors=None):
    if tree is None:
        return
    ancestors = ancestors or []
    root, lo, hi, left, right = tree
    yield root, lo, hi, list(ancestors)
    yield from _walk(left, ancestors + [root])
    yield from _walk(right, ancestors + [root])


def _sector_value(prep: _Prepared, sector: _Sector, order: int, chunk: int = 400_000):
    D = len(sector.small)
    rules = [_jacobi_rule(order, float(s)) for s in sector.sigma]
    total = 0.0
    # stream the tensor grid in chunks along the leading axes
    idx_iter = itertools.product(range(order), repeat=max(D - 3, 0))
    tail = rules[max(D - 3, 0):]
    tail_nodes = np.array(list(itertools.product(*[r[0] for r in tail]))) if tail else np.zeros((1, 0))
    tail_w = np.prod(np.array(list(itertools.product(*[r[1] for r in tail]))), axis=1) if tail else np.ones(1)
    head = rules[:max(D - 3, 0)]
    batch_U, batch_w = [], []
    rows = 0
    for idx in idx_iter:
        hn = [head[i][0][j] for i, j in enumerate(idx)]
        hw = math.prod(head[i][1][j] for i, j in enumerate(idx))
        U = np.hstack([np.tile(hn, (tail_nodes.shape[0], 1)), tail_nodes])
        batch_U.append(U)
        batch_w.append(hw * tail_w)
        rows += U.shape[0]
        if rows >= chunk:
            total += float(np.dot(prep.evaluate(sector, np.vstack(batch_U)), np.concatenate(batch_w)))
            batch_U, batch_w, rows = [], [], 0
    if batch_U:
        total += float(np.dot(prep.evaluate(sector, np.vstack(batch_U)), np.concatenate(batch_w)))
    return total, order ** D


def integrate(config: PointConfig, tol: float = 1e-12, rtol: float = 1e-10,
              budget: int = 60_000_000, method: str = "auto", samples: int = 2_000_000,
              seed: int = 0, threads: int = 1) -> QuadResult:
    """Integrate a :class:`PointConfig` over its free points.

    Parameters
    ----------
    tol, rtol : float
        Success when the error estimate is below ``max(tol, rtol*|value|)``.
    budget : int
        Maximum integrand evaluations for the deterministic rule.
    method : {"auto", "gauss", "mc"}
        ``"auto"`` uses the deterministic rule unless even its coarsest
        pass exceeds ``budget``, then falls back to Monte Carlo.
    samples, seed
        Monte Carlo sample count and seed.
    threads : int
        Sectors are evaluated on this many threads; results are merged in
        sector order so the value does not depend on it.
    """
    prep = _Prepared(config)
    if prep.zero:
        return QuadResult(0.0, 0.0, 0)
    if prep.n_free == 0:
        return QuadResult(prep.fixed_value(), 0.0, 1)
    if not prep.pairs and not prep.weights:
        # constant integrand: product of ordered-simplex volumes L^k / k!
        vol = math.prod(L ** k / math.factorial(k) for _, _, L, k in prep.blocks)
        return QuadResult(vol, 0.0, 1, "exact")
    D = prep.n_free
    ns = len(prep.sectors)
    coarse_cost = ns * (ORDERS[0] ** D + ORDERS[1] ** D)
    if method == "mc" or (method == "auto" and coarse_cost > budget):
        return _integrate_mc(prep, samples, seed)
    if method not in ("auto", "gauss"):
        raise ValueError(f"unknown method {method!r}")

    def run(jobs):
        if threads > 1 and len(jobs) > 1:
            with ThreadPoolExecutor(max_workers=threads) as ex:
                return list(ex.map(lambda j: _sector_value(prep, prep.sectors[j[0]], ORDERS[j[1]]), jobs))
        return [_sector_value(prep, prep.sectors[s], ORDERS[lvl]) for s, lvl in jobs]

    level = [1] * ns
    prev = [v for v, _ in run([(s, 0) for s in range(ns)])]
    cur_evals = run([(s, 1) for s in range(ns)])
    cur = [v for v, _ in cur_evals]
    evals = coarse_cost
    diffs = [abs(a - b) for a, b in zip(cur, prev)]
    errs = list(diffs)
    while True:
        value = math.fsum(cur)
        err = math.fsum(errs) + 1e-15 * math.fsum(abs(v) for v in cur)
        target = max(tol, rtol * abs(value))
        if err <= target:
            return QuadResult(value, err, evals)
        share = target / (2 * ns)
        todo = [s for s in range(ns) if errs[s] > share]
        if any(level[s] + 1 >= len(ORDERS) for s in todo):
            raise AccuracyError(f"quadrature error {err:.3g} above target {target:.3g} "
                                "at the finest order", estimate=value, error=err)
        cost = sum(ORDERS[level[s] + 1] ** D for s in todo)
        if evals + cost > budget:
            raise AccuracyError(f"quadrature error {err:.3g} above target {target:.3g} "
                                f"within the {budget} evaluation budget",
                                estimate=value, error=err)
        results = run([(s, level[s] + 1) for s in todo])
        for s, (v, n) in zip(todo, results):
            d = abs(v - cur[s])
            errs[s] = _geometric_error(d, diffs[s])
            diffs[s] = d
            cur[s] = v
            level[s] += 1
            evals += n


def _geometric_error(d: float, d_prev: float) -> float:
    """Error of the finer of two rules from the last two successive differences.

    Under geometric convergence the error after the last step is about
    ``d^2 / d_prev``; a factor 10 covers irregular rates, and the plain
    difference stays an upper bound.
    """
    if d_prev > 0 and d < d_prev:
        return min(d, 10.0 * d * d / d_prev)
    return d


def _integrate_mc(prep: _Prepared, samples: int, seed: int) -> QuadResult:
    """Importance-sampled Monte Carlo over all sectors (one stratum each)."""
    ns = len(prep.sectors)
    per = max(samples // ns, 64)
    total = 0.0
    var = 0.0
    for s, sector in enumerate(prep.sectors):
        rng = np.random.Generator(np.random.Philox(key=[seed, s]))
        a = sector.sigma + 1.0
        # u ~ density a u^{a-1} on [0,1]
        U = rng.random((per, len(sector.small))) ** (1.0 / a)
        U = np.clip(U, 1e-300, 1.0)
        vals = prep.evaluate(sector, U) / np.prod(a)
        total += vals.mean()
        var += vals.var(ddof=1) / per
    return QuadResult(total, 3.0 * math.sqrt(var), per * ns, method="sector-monte-carlo")
