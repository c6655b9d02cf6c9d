import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from logid import levy
from logid import simulator as sim
from logid.errors import DomainError

GAUSS = sim.Model.gaussian()
LP2 = sim.Model.poisson(2.0)


def small(paths=400, eps=0.05, n=100, seed=11, mu=0.2, method="circulant"):
    return sim.SimConfig(eps, n, paths, seed, mu, method)


def fields(cfg, model, count=None):
    draw = sim._sampler(cfg, model)
    return np.stack([draw(p) for p in range(count or cfg.paths)])


# -- kernel ----------------------------------------------------------------------

def test_rho_examples():
    assert sim.rho_eps(0.1, 0.5) == pytest.approx(math.log(2))
    assert sim.rho_eps(0.1, 0.0) == pytest.approx(1 + math.log(10))
    assert sim.rho_eps(0.3, 1.5) == 0.0


@given(st.floats(1e-4, 0.9))
def test_rho_continuous_at_branch_points(eps):
    assert sim.rho_eps(eps, eps * (1 - 1e-12)) == pytest.approx(sim.rho_eps(eps, eps), abs=1e-9)
    assert sim.rho_eps(eps, 1.0) == pytest.approx(0.0, abs=1e-15)
    assert sim.rho_eps(eps, 1.0 + 1e-12) == 0.0


def test_config_validation():
    with pytest.raises(DomainError):
        sim.SimConfig(0.01, 100, 10)          # spacing 0.01 > eps/4
    with pytest.raises(DomainError):
        sim.SimConfig(1.5, 100, 10)
    with pytest.raises(DomainError):
        sim.Model.poisson(1.0)


# -- gaussian field ------------------------------------------------------------------

@pytest.mark.parametrize("method", ["circulant", "dense"])
def test_gaussian_mean_and_covariance(method):
    cfg = small(paths=3000, method=method)
    X = fields(cfg, GAUSS)
    mean = -0.5 * cfg.mu * (1 + math.log(1 / cfg.epsilon))
    se = math.sqrt(cfg.mu * sim.rho_eps(cfg.epsilon, 0) / X.shape[0])
    assert abs(X[:, 10].mean() - mean) < 3 * se
    for lag in (0, 1, 4, 30):
        h = lag / cfg.grid_n
        c = np.mean((X[:, 10] - mean) * (X[:, 10 + lag] - mean))
        var0 = cfg.mu * sim.rho_eps(cfg.epsilon, 0)
        se_c = var0 * math.sqrt(2 / X.shape[0])
        assert abs(c - cfg.mu * sim.rho_eps(cfg.epsilon, h)) < 3 * se_c


def test_gaussian_covariance_at_lag_half():
    cfg = small(paths=4000, n=200)
    X = fields(cfg, GAUSS)
    a, b = X[:, 20], X[:, 120]
    c = np.mean((a - a.mean()) * (b - b.mean()))
    assert abs(c - cfg.mu * math.log(2)) < 3 * cfg.mu * sim.rho_eps(cfg.epsilon, 0) / math.sqrt(4000)


def test_tiny_mu_gives_flat_field():
    X = sim.simulate_gaussian(small(mu=1e-14), 0).values
    assert np.max(np.abs(X)) < 1e-5


def test_exponential_normalization_gaussian():
    cfg = small(paths=4000)
    E = np.exp(fields(cfg, GAUSS))
    m, se = E.mean(axis=0), E.std(axis=0) / math.sqrt(cfg.paths)
    assert np.all(np.abs(m[::10] - 1) < 3.5 * se[::10])


# -- poisson field ------------------------------------------------------------------

def test_poisson_counts_mean_and_covariance():
    cfg = small(paths=4000)
    C = np.stack([sim._poisson_counts(cfg, p) for p in range(cfg.paths)]).astype(float)
    rho0 = sim.rho_eps(cfg.epsilon, 0)
    assert abs(C[:, 50].mean() - cfg.mu * rho0) < 3 * math.sqrt(cfg.mu * rho0 / cfg.paths)
    for j in (51, 55, 80, 99):
        h = (j - 5) / cfg.grid_n
        cov = np.mean((C[:, 5] - C[:, 5].mean()) * (C[:, j] - C[:, j].mean()))
        assert abs(cov - cfg.mu * sim.rho_eps(cfg.epsilon, h)) < 3 * cfg.mu * rho0 / math.sqrt(cfg.paths) * 1.5


def test_exponential_normalization_poisson():
    cfg = small(paths=4000)
    E = np.exp(fields(cfg, LP2))
    m, se = E.mean(axis=0), E.std(axis=0) / math.sqrt(cfg.paths)
    assert np.all(np.abs(m[::10] - 1) < 3.5 * se[::10])


def test_poisson_field_formula():
    cfg = small()
    counts = sim._poisson_counts(cfg, 3)
    path = sim.simulate_poisson(cfg, 2.0, 3)
    comp = cfg.mu * (2 - 1) * sim.rho_eps(cfg.epsilon, 0)
    assert np.allclose(path.values, math.log(2) * counts - comp)


# -- masses ----------------------------------------------------------------------

def test_mass_of_zero_and_constant_fields():
    zero = sim.FieldPath(np.zeros(64))
    assert sim.measure_mass(zero, 0.25, 0.75) == pytest.approx(0.5)
    const = sim.FieldPath(np.full(64, 0.3))
    assert sim.measure_mass(const, 0.1, 0.6) == pytest.approx(0.5 * math.exp(0.3))


@settings(max_examples=30)
@given(st.integers(0, 2**32 - 1), st.floats(0, 0.4), st.integers(1, 60), st.floats(0.6, 1.0))
def test_mass_additivity(seed, a, k, c):
    rng = np.random.default_rng(seed)
    path = sim.FieldPath(rng.normal(size=128))
    b = max(k / 128, a + 1 / 128)
    b = min(b, c - 1 / 256)
    whole = sim.measure_mass(path, a, c)
    parts = sim.measure_mass(path, a, b) + sim.measure_mass(path, b, c)
    assert whole == pytest.approx(parts, rel=1e-13)


def test_reproducible_paths():
    cfg = small(seed=99)
    for model in (GAUSS, LP2):
        a = sim.simulate(cfg, model, 7).values
        b = sim.simulate(cfg, model, 7).values
        assert np.array_equal(a, b)
        assert not np.array_equal(a, sim.simulate(cfg, model, 8).values)


def test_batching_does_not_change_statistics():
    cfg = small(paths=50)
    a = sim.path_statistics(cfg, LP2, [(0, 1), (0.2, 0.3)], chunk=7)
    b = sim.path_statistics(cfg, LP2, [(0, 1), (0.2, 0.3)], chunk=64)
    # same fields; only BLAS summation order may differ between batch shapes
    assert np.allclose(a, b, rtol=1e-13, atol=0)


# -- estimators ------------------------------------------------------------------

def test_jackknife_of_mean_matches_standard_error():
    x = np.random.default_rng(0).normal(size=500)
    mean, se = sim.jackknife(x, groups=500)
    assert mean == pytest.approx(x.mean())
    assert se == pytest.approx(x.std(ddof=1) / math.sqrt(500), rel=1e-10)


@pytest.mark.parametrize("model", [GAUSS, LP2])
def test_mean_mass_is_one(model):
    est = sim.estimate_moment(small(paths=1500), model, [(0, 1)], [1])
    assert abs(est.mean - 1) < 3 * est.std_error
    assert est.paths_used == 1500


def test_stationarity_of_window_moments():
    cfg = small(paths=3000)
    masses = sim.path_statistics(cfg, GAUSS, [(0.0, 0.2), (0.4, 0.6), (0.8, 1.0)])
    sq = masses ** 2
    for j in (1, 2):
        diff = sq[:, 0] - sq[:, j]
        z = diff.mean() / (diff.std(ddof=1) / math.sqrt(cfg.paths))
        assert abs(z) < 2.576


def test_log_covariance_vanishes_near_one():
    cfg = small(paths=1500, eps=0.01, n=400)
    est = sim.estimate_log_covariance(cfg, GAUSS, 0.9, 0.05)
    assert abs(est.mean) < 3 * est.std_error + 0.01


@pytest.mark.slow
def test_second_moment_converges_in_epsilon():
    target = 25 / 18
    errs = []
    for eps, n in ((1e-1, 40), (1e-2, 400), (1e-3, 4000)):
        est = sim.estimate_moment(sim.SimConfig(eps, n, 6000, 5, 0.2), GAUSS, [(0, 1)], [2])
        errs.append((abs(est.mean - target), est.std_error))
    # the coarsest scale is clearly biased; the finer ones agree within noise
    assert errs[0][0] > errs[2][0] - 3 * errs[2][1]
    assert errs[2][0] < 3 * errs[2][1]


def test_poisson_slope_ratio_constant():
    ratio = levy.log_cov_coefficient(LP2.spectrum) / levy.log_cov_coefficient(GAUSS.spectrum)
    assert ratio == pytest.approx(math.log(2) ** 2)
