import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from logid import closedform as cf, levy, quadrature as q
from logid._sectors import PointConfig, integrate
from logid.errors import AccuracyError, DomainError

G = levy.gaussian()
LP2 = levy.log_poisson(2.0)
HALVES = q.IntervalPair(0.0, 0.5, 0.5, 1.0)


# -- examples ---------------------------------------------------------------------

def test_linear_integrand_on_triangle():
    # int_{t1<t2} (t2 - t1) = 1/6
    r = q.selberg_general(q.SelbergParams(2, 0.5), tol=1e-13)
    assert r.value == pytest.approx(1 / 6, abs=1e-13)
    assert r.abs_error_estimate <= 1e-10


@pytest.mark.parametrize("n,tol", [(1, 1e-10), (2, 1e-10), (3, 1e-10), (4, 1e-10), (5, 5e-9)])
def test_zero_exponents_give_simplex_volume(n, tol):
    r = q.selberg_general(q.SelbergParams(n, 0.0), tol=tol)
    assert abs(r.value - 1 / math.factorial(n)) <= r.abs_error_estimate <= tol


def test_gaussian_three_points_against_product():
    r = q.selberg_general(q.SelbergParams(3, -0.1), rtol=1e-12)
    assert 6 * r.value == pytest.approx(cf.selberg_product(3, -0.1).value, rel=1e-10)


def test_endpoint_exponents_against_product():
    r = q.selberg_general(q.SelbergParams(3, 0.4, 0.3, -0.2), rtol=1e-12)
    assert 6 * r.value == pytest.approx(cf.selberg_product(3, 0.4, 0.3, -0.2).value, rel=1e-10)


def test_weight_function():
    # int_{t1<t2} t1 t2 dt = 1/8
    r = q.selberg_general(q.SelbergParams(2, 0.0), f=lambda t: t)
    assert r.value == pytest.approx(1 / 8, rel=1e-12)


def test_non_integrable_cluster_rejected():
    with pytest.raises(DomainError, match="not integrable"):
        q.selberg_general(q.SelbergParams(3, -0.35))


def test_accuracy_error_carries_estimate():
    with pytest.raises(AccuracyError) as info:
        q.selberg_general(q.SelbergParams(4, -0.12), tol=1e-300, rtol=1e-16, budget=10**6)
    assert info.value.estimate == pytest.approx(cf.selberg_product(4, -0.12).value / 24, rel=1e-4)


def test_monte_carlo_fallback_has_error_bar():
    r = q.selberg_general(q.SelbergParams(3, -0.1), method="mc", samples=200_000, seed=5)
    exact = cf.selberg_product(3, -0.1).value / 6
    assert r.method == "sector-monte-carlo"
    assert abs(r.value - exact) <= r.abs_error_estimate


def test_threads_do_not_change_result():
    p = q.SelbergParams.from_spectrum(LP2, 3, -0.05)
    assert q.selberg_general(p, threads=1).value == q.selberg_general(p, threads=3).value


def test_joint_lebesgue_limit():
    iv = q.IntervalPair(0.1, 0.3, 0.6, 0.9)
    r = q.joint_moment_quad(G, 1e-12, iv, 1, 1)
    assert r.value == pytest.approx(0.2 * 0.3, rel=1e-9)


def test_joint_gaussian_adjacent_halves_from_sum_relation():
    # E[M(0,1/2) M(1/2,1)] = 2^{N - lam N(N-1)} S_{1,1} / 2^N... via the cube identity
    lam = -0.1
    s11 = cf.lognormal_joint_from_sum(2, 1, lam, {})
    expected = 2.0 ** (-2 - 2 * lam) * s11
    r = q.joint_moment_quad(G, 0.2, HALVES, 1, 1, rtol=1e-12)
    assert r.value == pytest.approx(expected, rel=1e-10)


@pytest.mark.parametrize("pair", [(1, 1), (1, 2)])
def test_joint_log_poisson_matches_closed_form(pair):
    r = q.joint_moment_quad(LP2, 0.2, HALVES, *pair, rtol=1e-10)
    assert r.value == pytest.approx(cf.poisson_joint(2, 0.2, pair), rel=1e-8)


def test_joint_infinite_moment_rejected():
    with pytest.raises(DomainError):
        q.joint_moment_quad(G, 1.0, HALVES, 2, 1)


def test_interval_pair_ordering():
    with pytest.raises(DomainError):
        q.IntervalPair(0.0, 0.6, 0.5, 1.0)


def test_single_recurrence_base_case():
    p = q.SelbergParams.from_spectrum(G, 2, -0.1)
    assert q.recurrence_residual_single(p, G) <= 1e-9
    assert q.recurrence_residual_single(q.SelbergParams(2, 0.0), G) <= 1e-9


def test_single_recurrence_log_poisson():
    p = q.SelbergParams.from_spectrum(LP2, 3, -0.05)
    assert q.recurrence_residual_single(p, LP2) <= 1e-10


@pytest.mark.parametrize("nm", [(1, 1), (1, 2), (2, 1)])
def test_joint_recurrence_small(nm):
    assert q.recurrence_residual_joint(G, 0.2, HALVES, *nm) <= 1e-10


def test_joint_recurrence_zero_lambda_is_polynomial_identity():
    iv = q.IntervalPair(0.05, 0.4, 0.55, 0.95)
    assert q.recurrence_residual_joint(G, 1e-300, iv, 2, 1) <= 1e-9


def test_joint_recurrence_positive_exponent():
    # lam = 1 corresponds to mu = -2
    assert q.recurrence_residual_joint(G, -2.0, HALVES, 2, 2) <= 1e-7


def test_two_dim_reductions_at_zero():
    for fn in (q.s13_2d, q.s22_2d):
        r = fn(0.0)
        assert abs(r.value - 1.0) <= r.abs_error_estimate <= 1e-10


def test_two_dim_reductions_sum_relation_at_one():
    lhs = 4 * q.s13_2d(1.0).value + 3 * q.s22_2d(1.0).value
    rhs = (2 ** 15 - 1) * cf.selberg_product(4, 1.0).value
    assert lhs == pytest.approx(rhs, rel=1e-11)


def test_two_dim_reductions_sum_relation_negative():
    lam = -0.1
    lhs = 4 * q.s13_2d(lam).value + 3 * q.s22_2d(lam).value
    rhs = (2 ** (12 * lam + 3) - 1) * cf.selberg_product(4, lam).value
    assert lhs == pytest.approx(rhs, rel=1e-9)


def test_two_dim_reduction_domain():
    with pytest.raises(DomainError):
        q.s13_2d(-0.3)


# -- engine details -----------------------------------------------------------------

def test_coincident_fixed_points_with_positive_exponent_vanish():
    E = np.zeros((3, 3))
    E[0, 1] = 1.0
    r = integrate(PointConfig([0.5, 0.5, 1.0], E))
    assert r.value == 0.0


def test_fixed_points_only():
    E = np.zeros((3, 3))
    E[0, 2] = 2.0
    assert integrate(PointConfig([0.0, 0.3, 0.5], E)).value == pytest.approx(0.25)


def test_beta_integral_with_endpoint_singularities():
    # int_0^1 t^{-0.7} (1-t)^{-0.4} dt = B(0.3, 0.6)
    E = np.zeros((3, 3))
    E[0, 1], E[1, 2] = -0.7, -0.4
    r = integrate(PointConfig([0.0, None, 1.0], E), rtol=1e-13)
    assert r.value == pytest.approx(math.gamma(0.3) * math.gamma(0.6) / math.gamma(0.9), rel=1e-12)


# -- properties -------------------------------------------------------------------

@pytest.mark.parametrize("n", [2, 3, 4])
@pytest.mark.parametrize("lam", [-0.15, -0.05, 0.5, 1.0])
def test_simplex_cube_consistency(n, lam):
    r = q.selberg_general(q.SelbergParams(n, lam), tol=1e-300, rtol=1e-9)
    assert math.factorial(n) * r.value == pytest.approx(cf.selberg_product(n, lam).value, rel=5e-6)


@pytest.mark.parametrize("n", [2, 3, 4])
@pytest.mark.parametrize("spec,lam", [(G, -0.1), (LP2, -0.05), (LP2, -0.1)])
def test_single_recurrence_property(n, spec, lam):
    p = q.SelbergParams.from_spectrum(spec, n, lam)
    assert q.recurrence_residual_single(p, spec) <= 1e-5


def test_monotone_in_lambda():
    grid = [-0.02, -0.06, -0.1, -0.14]
    vals = [q.selberg_general(q.SelbergParams(3, lam)).value for lam in grid]
    assert all(a < b for a, b in zip(vals, vals[1:]))


@settings(max_examples=15, deadline=None)
@given(st.floats(-0.2, 1.5), st.floats(0.0, 1.0), st.floats(0.0, 1.0))
def test_endpoint_symmetry(lam, l1, l2):
    a = q.selberg_general(q.SelbergParams(3, lam, l1, l2), rtol=1e-10).value
    b = q.selberg_general(q.SelbergParams(3, lam, l2, l1), rtol=1e-10).value
    assert a == pytest.approx(b, rel=1e-8)


@settings(max_examples=10, deadline=None)
@given(st.floats(0.02, 0.3), st.floats(0.05, 0.3),
       st.one_of(st.just(0.0), st.floats(0.02, 0.2)), st.floats(0.05, 0.3))
def test_joint_recurrence_random_intervals(a1, w1, gap, w2):
    # intervals that nearly touch converge slowly and are left out
    b1 = a1 + w1
    a2 = b1 + gap
    b2 = min(a2 + w2, 1.0)
    iv = q.IntervalPair(a1, b1, a2, b2)
    assert q.recurrence_residual_joint(LP2, 0.2, iv, 1, 2) <= 1e-8


@pytest.mark.parametrize("lam", [-0.05, 1.0])
@pytest.mark.parametrize("n", [3, 4])
def test_log_poisson_closed_forms_against_quadrature(n, lam):
    # pair exponent lam * 2^{j-i} (I_n) and lam * 2^{n-(j-i)} (J_n)
    grow = q.SelbergParams(n, lam / 2, d_seq=[2.0 ** m for m in range(1, n + 1)])
    shrink = q.SelbergParams(n, lam / 2, d_seq=[2.0 ** (n - m) for m in range(1, n + 1)])
    assert q.selberg_general(grow, tol=1e-300, rtol=1e-10).value == pytest.approx(cf.poisson_I(n, lam), rel=1e-8)
    assert q.selberg_general(shrink, tol=1e-300, rtol=1e-10).value == pytest.approx(cf.poisson_J(n, lam), rel=1e-8)
