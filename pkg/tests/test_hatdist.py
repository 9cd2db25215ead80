import math
from fractions import Fraction

import mpmath
import pytest
from hypothesis import given, settings, strategies as st

from binomtv import hatdist as hd
from binomtv.errors import DomainError, InvalidParam, RegionTooSmall
from binomtv.exactoracle import exact_pmf
from binomtv.mpctx import make_context

CTX = make_context(64)


def test_params_n100():
    hp = hd.hat_params(100, Fraction(3, 10))
    assert hp.lam == pytest.approx(0.231749, abs=2e-6)
    assert hp.mu == pytest.approx(12.74393, abs=2e-5)
    assert hp.nu == 30.5
    assert hp.c == 17


def test_params_n40():
    hp = hd.hat_params(40, Fraction(1, 2))
    assert hp.lam == pytest.approx(-0.05878 + 0.062744 * math.sqrt(10) + 0.005, abs=1e-12)
    assert hp.lam == pytest.approx(0.1446339, abs=1e-6)
    assert hp.mu == pytest.approx(1.15 + 2.53 * math.sqrt(10), abs=1e-12)
    assert hp.nu == 20.5


def test_params_region_and_domain():
    with pytest.raises(RegionTooSmall):
        hd.hat_params(10, Fraction(1, 10))
    with pytest.raises(InvalidParam):
        hd.hat_params(100, Fraction(7, 10))
    with pytest.raises(InvalidParam):
        hd.hat_params(0, Fraction(1, 2))


def test_inv_cdf_examples():
    hp = hd.hat_params(100, Fraction(3, 10))
    # u = 0 returns the nu constant untouched; nu carries the rounding of p = 0.3
    nu = hd.hat_consts(hp, 64)[3]
    assert hd.inv_cdf(0, hp, CTX) == nu
    assert abs(nu.to_fraction() - Fraction(61, 2)) <= 64 * CTX.eps
    hp2 = hd.hat_params(40, Fraction(1, 2))
    assert hd.inv_cdf(0, hp2, CTX).to_fraction() == Fraction(41, 2)
    assert float(hd.inv_cdf(Fraction(1, 4), hp, CTX)) == pytest.approx(34.1494, abs=1e-4)
    assert float(hd.inv_cdf(Fraction(-1, 4), hp, CTX)) == pytest.approx(26.8506, abs=1e-4)
    with pytest.raises(DomainError):
        hd.inv_cdf(Fraction(1, 2), hp, CTX)
    with pytest.raises(DomainError):
        hd.inv_cdf(Fraction(1, 3), hp, CTX)  # not dyadic


def test_density_inv_examples():
    hp = hd.hat_params(100, Fraction(3, 10))
    at0 = float(hd.hat_density_inv(0, hp, CTX))
    assert at0 == pytest.approx(4 * hp.lam + hp.mu, rel=1e-12)
    assert float(hd.hat_density_inv(Fraction(1, 4), hp, CTX)) == pytest.approx(16.4519, abs=1e-4)
    for u in (Fraction(1, 8), Fraction(3, 16), Fraction(255, 512)):
        a = hd.hat_density_inv(u, hp, CTX)
        b = hd.hat_density_inv(-u, hp, CTX)
        assert (a.man, a.exp) == (b.man, b.exp)


def test_op_count_is_static():
    counts = set()
    for n, p in [(100, Fraction(3, 10)), (40, Fraction(1, 2)), (10 ** 9, Fraction(1, 1000))]:
        hp = hd.hat_params(n, p)
        for u in (0, Fraction(1, 4), Fraction(-3, 8), Fraction(1023, 2048)):
            counts.add(hd.count_inv_cdf_ops(u, hp, CTX))
    assert counts == {hd.HAT_OP_COUNT}


dyadic_u = st.integers(-(2 ** 40) + 1, 2 ** 40 - 1).map(lambda j: Fraction(j, 2 ** 41))


@settings(max_examples=200)
@given(u1=dyadic_u, u2=dyadic_u)
def test_inv_cdf_strictly_increasing(u1, u2):
    if u1 == u2:
        return
    lo, hi = min(u1, u2), max(u1, u2)
    hp = hd.hat_params(1000, Fraction(1, 2))
    assert hd.inv_cdf(lo, hp, make_context(96)) < hd.inv_cdf(hi, hp, make_context(96))


@pytest.mark.parametrize("n,p", [(100, Fraction(3, 10)), (40, Fraction(1, 2))])
def test_alpha_range(n, p):
    a = hd.hat_params(n, p).alpha
    assert 1 < a <= Fraction(3, 2)


def test_alpha_values_recorded():
    assert hd.hat_params(100, Fraction(3, 10)).alpha == Fraction(6411, 5000)
    assert hd.hat_params(40, Fraction(1, 2)).alpha == Fraction(3307, 2500)
    assert hd.hat_params(10 ** 5, Fraction(1, 2)).alpha == hd.DEFAULT_ALPHA


# independent route to the hat CDF: invert H^{-1} in closed form (a quadratic in u)

def hat_cdf_closed(x, lam, mu, nu):
    y = abs(x - nu)
    b = 2 * lam + mu / 2 + y
    u = (b - mpmath.sqrt(b * b - 2 * mu * y)) / (2 * mu)
    return u if x >= nu else -u


def domination_holds(n, p):
    hp = hd.hat_params(n, p)
    pmf = exact_pmf(n, p)
    with mpmath.workprec(120):
        lam, mu, nu = mpmath.mpf(hp.lam), mpmath.mpf(hp.mu), mpmath.mpf(hp.nu)
        edges = [hat_cdf_closed(mpmath.mpf(k), lam, mu, nu) for k in range(n + 2)]
        alpha = mpmath.mpf(hp.alpha.numerator) / hp.alpha.denominator
        for k in range(n + 1):
            h = edges[k + 1] - edges[k]
            b = mpmath.mpf(pmf.nums[k]) / pmf.den
            if b > alpha * h:
                return False
    return True


def test_bisection_agrees_with_closed_form():
    hp = hd.hat_params(100, Fraction(3, 10))
    ks = list(range(0, 102, 7))
    got = hd.hat_cdf_points(hp, ks)
    with mpmath.workprec(80):
        for k, g in zip(ks, got):
            assert abs(g - float(hat_cdf_closed(mpmath.mpf(k), hp.lam, hp.mu, hp.nu))) < 1e-12


@settings(max_examples=40)
@given(n=st.integers(40, 200), pnum=st.integers(1, 500))
def test_domination_small_n(n, pnum):
    p = Fraction(pnum, 1000)
    if n * p * (1 - p) < 10:
        return
    assert domination_holds(n, p)


def test_alpha_pointwise_dominates_discrete():
    for n, p in [(100, Fraction(3, 10)), (50, Fraction(1, 2)), (1000, Fraction(1, 7))]:
        hp = hd.hat_params(n, p)
        discrete, pointwise = hd.alpha_ratios(n, p, hp)
        assert discrete <= pointwise < float(hp.alpha)
