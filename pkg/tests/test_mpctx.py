import random
from fractions import Fraction

import gmpy2
import pytest
from hypothesis import given, strategies as st

from binomtv import mpctx as mp
from binomtv.errors import DomainError, PrecisionTooLow
from binomtv.mpctx import MPNumber, arith, make_context, round_to


def rel_err(x: MPNumber, exact: Fraction) -> Fraction:
    return abs(x.to_fraction() - exact) / abs(exact)


def test_context_constants():
    ctx = make_context(53)
    assert ctx.eps == Fraction(1, 2 ** 53)
    assert float(ctx.eps) == pytest.approx(1.110e-16, rel=1e-3)
    ctx = make_context(64)
    assert ctx.tau == Fraction(178 * 64, 2 ** 64)
    assert float(ctx.tau) == pytest.approx(6.175e-16, rel=1e-3)
    assert ctx.guard == 96


@pytest.mark.parametrize("beta", [8, 15, 0, -3])
def test_context_floor(beta):
    with pytest.raises(PrecisionTooLow):
        make_context(beta)


def test_round_simple_values():
    for beta in (16, 53, 200):
        assert round_to(1, make_context(beta)) == mp.ONE
        assert round_to(0, make_context(beta)) == mp.ZERO


def test_one_third_at_four_bits():
    # round at 4 bits directly (below the context floor, so through the kernel)
    x = mp.from_fraction(Fraction(1, 3), 4)
    assert x.to_fraction() == Fraction(11, 32)
    best = min((Fraction(m, 32) for m in range(8, 16)), key=lambda c: abs(c - Fraction(1, 3)))
    assert x.to_fraction() == best
    assert rel_err(x, Fraction(1, 3)) <= Fraction(1, 16)


def test_arith_examples():
    ctx = make_context(16)
    assert arith("add", mp.ONE, mp.ONE, ctx).to_fraction() == 2
    third = round_to(Fraction(1, 3), ctx)
    prod = arith("mul", third, round_to(3, ctx), ctx)
    assert rel_err(prod, Fraction(1)) <= ctx.eps
    ctx = make_context(64)
    r = arith("sqrt", round_to(2, ctx), None, ctx).to_fraction()
    assert abs(r * r - 2) / 2 <= 2 * ctx.eps
    with pytest.raises(ValueError):
        arith("pow", mp.ONE, mp.ONE, ctx)


def test_domain_errors():
    ctx = make_context(32)
    with pytest.raises(DomainError):
        arith("sqrt", round_to(-1, ctx), None, ctx)
    with pytest.raises(ZeroDivisionError):
        arith("div", mp.ONE, mp.ZERO, ctx)


def test_huge_exponent_range():
    ctx = make_context(64)
    big = round_to(2 ** 1400, ctx)
    small = arith("div", mp.ONE, big, ctx)
    assert small.to_fraction() == Fraction(1, 2 ** 1400)
    assert big.exponent == 1401  # x in [2**(e-1), 2**e)


# dual route: every basic op agrees bit for bit with MPFR round-to-nearest

def _to_mpfr(x: MPNumber):
    with gmpy2.context(gmpy2.get_context(), precision=max(x.man.bit_length(), 1) + 2):
        return gmpy2.mul_2exp(gmpy2.mpfr(x.man), x.exp)


def _from_mpfr(y) -> Fraction:
    return Fraction(*y.as_integer_ratio())


@pytest.mark.parametrize("beta", [16, 24, 53, 64, 113])
def test_matches_mpfr(beta):
    rnd = random.Random(beta)
    ctx = make_context(beta)
    ops = {"add": lambda a, b: a + b, "sub": lambda a, b: a - b,
           "mul": lambda a, b: a * b, "div": lambda a, b: a / b}
    with gmpy2.context(gmpy2.get_context(), precision=beta,
                             round=gmpy2.RoundToNearest, emin=-(1 << 30), emax=1 << 30):
        for _ in range(1500):
            a = mp.from_fraction(Fraction(rnd.getrandbits(beta + 20) + 1,
                                          1 << rnd.randrange(0, 2 * beta)), beta)
            b = mp.from_fraction(Fraction(rnd.choice([-1, 1]) * (rnd.getrandbits(beta + 9) + 1),
                                          1 << rnd.randrange(0, 2 * beta)), beta)
            for name, fn in ops.items():
                ours = arith(name, a, b, ctx).to_fraction()
                assert ours == _from_mpfr(fn(_to_mpfr(a), _to_mpfr(b))), (name, a, b)
            ours = arith("sqrt", a, None, ctx).to_fraction()
            assert ours == _from_mpfr(gmpy2.sqrt(_to_mpfr(a)))


def test_ties_to_even():
    # 1 + 2**-16 at 16 bits sits exactly between 1 and 1 + 2**-15
    assert mp.from_fraction(1 + Fraction(1, 2 ** 16), 16) == mp.ONE
    up = mp.from_fraction(1 + Fraction(3, 2 ** 16), 16).to_fraction()
    assert up == 1 + Fraction(2, 2 ** 15)


fractions_nz = st.fractions(min_value=Fraction(-10 ** 6), max_value=Fraction(10 ** 6),
                            max_denominator=10 ** 9).filter(lambda x: x != 0)


@given(x=fractions_nz, beta=st.integers(16, 200))
def test_round_within_eps(x, beta):
    assert rel_err(round_to(x, make_context(beta)), x) <= Fraction(1, 2 ** beta)


@given(x=fractions_nz, b1=st.integers(16, 150), extra=st.integers(1, 60))
def test_monotone_refinement(x, b1, extra):
    coarse = round_to(x, make_context(b1)).to_fraction()
    fine = round_to(x, make_context(b1 + extra)).to_fraction()
    assert abs(fine - x) <= abs(coarse - x)


@given(x=fractions_nz, y=fractions_nz, beta=st.integers(16, 128),
       op=st.sampled_from(["add", "sub", "mul", "div"]))
def test_deterministic_and_correctly_rounded(x, y, beta, op):
    ctx = make_context(beta)
    a, b = round_to(x, ctx), round_to(y, ctx)
    r1 = arith(op, a, b, ctx)
    r2 = arith(op, round_to(x, ctx), round_to(y, ctx), ctx)
    assert (r1.man, r1.exp) == (r2.man, r2.exp)
    fa, fb = a.to_fraction(), b.to_fraction()
    exact = {"add": fa + fb, "sub": fa - fb, "mul": fa * fb, "div": fa / fb}[op]
    if exact:
        assert rel_err(r1, exact) <= ctx.eps


@given(xs=st.lists(st.fractions(min_value=-1000, max_value=1000, max_denominator=2 ** 20),
                   min_size=1, max_size=200),
       beta=st.integers(16, 64), seed=st.integers(0, 2 ** 32))
def test_chained_summation_any_order(xs, beta, seed):
    ctx = make_context(beta)
    terms = [round_to(x, ctx) for x in xs]
    exact = [t.to_fraction() for t in terms]
    order = list(range(len(terms)))
    random.Random(seed).shuffle(order)
    acc = mp.ZERO
    for i in order:
        acc = arith("add", acc, terms[i], ctx)
    err = abs(acc.to_fraction() - sum(exact))
    assert err <= len(xs) * ctx.eps * sum(abs(e) for e in exact)


def test_chained_summation_thousand_terms():
    rnd = random.Random(7)
    ctx = make_context(32)
    for _ in range(5):
        xs = [Fraction(rnd.randint(-10 ** 9, 10 ** 9), rnd.randint(1, 10 ** 6))
              for _ in range(1000)]
        terms = [round_to(x, ctx) for x in xs]
        exact = [t.to_fraction() for t in terms]
        rnd.shuffle(terms)
        acc = mp.ZERO
        for t in terms:
            acc = arith("add", acc, t, ctx)
        assert abs(acc.to_fraction() - sum(exact)) <= 1000 * ctx.eps * sum(map(abs, exact))


def test_number_helpers():
    x = round_to(Fraction(-7, 2), make_context(16))
    assert x.floor() == -4
    assert float(x) == -3.5
    assert x.sign() == -1 and abs(x).to_fraction() == Fraction(7, 2) and (-x).sign() == 1
    assert x.scale(3).to_fraction() == -28
    assert float(mp.from_fraction(2 ** 5000, 64)) == float("inf")
    assert mp.compare(mp.ONE, x) == 1 and hash(mp.ONE) == hash(round_to(1, make_context(20)))
