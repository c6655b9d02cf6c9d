import itertools
import math
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from logid import binomsum as bs, closedform as cf, quadrature as q
from logid.errors import BudgetError, DomainError


def test_examples():
    assert bs.selberg_sum(2, 1) == Fraction(1, 6)
    assert bs.selberg_sum(3, 1) == Fraction(1, 360)
    assert bs.joint_sum(1, 1, 1) == Fraction(7, 6)
    assert bs.morris_sum(2, 0, 0, 1) == 2


@pytest.mark.parametrize("N", range(1, 6))
def test_lambda_zero_is_one(N):
    assert bs.selberg_sum(N, 0) == 1


@pytest.mark.parametrize("a,b,lam", [(2, 1, 0), (0, 3, 2), (3, 3, 1)])
def test_morris_single_point(a, b, lam):
    assert bs.morris_sum(1, a, b, lam) == math.comb(a + b, a)


def test_morris_lambda_zero():
    assert bs.morris_sum(3, 2, 1, 0) == math.comb(3, 2) ** 3


def test_pure_block_delegates():
    assert bs.joint_sum(0, 3, 2) == bs.selberg_sum(3, 2)
    assert bs.joint_sum(3, 0, 1) == bs.selberg_sum(3, 1)


def test_budget_guard():
    with pytest.raises(BudgetError):
        bs.selberg_sum(8, 3)


def test_inputs_checked():
    with pytest.raises(DomainError):
        bs.selberg_sum(2, -1)
    with pytest.raises(DomainError):
        bs.selberg_sum(0, 1)


def test_sign_pattern():
    sp = bs.SignPattern(1, 2)
    assert [sp.s(k, l) for k, l in sp.pairs()] == [0, 0, 1]


def test_s12_from_sum_relation():
    # 2^{2N+N... } identity at N = 3 with S_{1,2} = S_{2,1}
    s3, s12 = bs.selberg_sum(3, 1), bs.joint_sum(1, 2, 1)
    assert 2 ** 9 * s3 == 2 * s3 + 6 * s12


def test_four_point_relation_at_one_and_two():
    for lam in (1, 2):
        lhs = 4 * bs.joint_sum(1, 3, lam) + 3 * bs.joint_sum(2, 2, lam)
        assert lhs == (2 ** (12 * lam + 3) - 1) * bs.selberg_sum(4, lam)


def test_three_point_explicit_triple_sum():
    # written out term by term for N = 3
    lam = 2
    C = lambda i: math.comb(2 * lam, lam + i)
    total = Fraction(0)
    for i12, i13, i23 in itertools.product(range(-lam, lam + 1), repeat=3):
        sign = -1 if (i12 + i13 + i23) % 2 else 1
        den = (1 + 2 * lam + i12 + i13) * (1 + 2 * lam - i12 + i23) * (1 + 2 * lam - i13 - i23)
        total += sign * C(i12) * C(i13) * C(i23) * Fraction(1, den)
    assert bs.selberg_sum(3, lam) == (-1) ** (3 * lam % 2) * total


def test_three_point_joint_explicit():
    lam = 1
    C = lambda i: math.comb(2 * lam, lam + i)
    total = Fraction(0)
    for i12, i13, i23 in itertools.product(range(-lam, lam + 1), repeat=3):
        sign = -1 if i23 % 2 else 1     # only the (2,3) pair is same-block for (1,2)
        den = (1 + 2 * lam + i12 + i13) * (1 + 2 * lam - i12 + i23) * (1 + 2 * lam - i13 - i23)
        total += sign * C(i12) * C(i13) * C(i23) * Fraction(1, den)
    assert bs.joint_sum(1, 2, lam) == (-1) ** (lam % 2) * total


@pytest.mark.parametrize("N", range(1, 5))
@pytest.mark.parametrize("lam", range(0, 4))
def test_matches_gamma_product(N, lam):
    assert bs.selberg_sum(N, lam) == cf.selberg_product_exact(N, lam)


@pytest.mark.parametrize("N", range(1, 4))
@pytest.mark.parametrize("lam", range(0, 3))
def test_morris_matches_product(N, lam):
    for a, b in itertools.product(range(4), repeat=2):
        assert bs.morris_sum(N, a, b, lam) == cf.morris_product_exact(N, a, b, lam)


@pytest.mark.parametrize("N", range(1, 5))
@pytest.mark.parametrize("lam", range(0, 3))
def test_sum_relation_is_exact(N, lam):
    assert bs.sum_relation_residual(N, lam) == 0


@given(st.integers(0, 3), st.integers(0, 3), st.integers(0, 2))
def test_joint_sum_block_symmetry(n, m, lam):
    if n + m == 0 or n + m > 4:
        return
    assert bs.joint_sum(n, m, lam) == bs.joint_sum(m, n, lam)


@pytest.mark.parametrize("nm", [(1, 1), (1, 2), (1, 3), (2, 2)])
def test_joint_sum_matches_quadrature(nm):
    r = q.s_nm_quad(*nm, 1.0)
    exact = float(bs.joint_sum(*nm, 1))
    assert abs(r.value - exact) <= max(r.abs_error_estimate, 1e-13 * exact)
