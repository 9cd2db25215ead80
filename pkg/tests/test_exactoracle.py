import random
from fractions import Fraction
from math import comb

import pytest
from hypothesis import given, settings, strategies as st

from binomtv import exactoracle as eo
from binomtv.errors import EmptyHistogram, ResourceLimit, SupportMismatch
from binomtv.mpctx import make_context
from binomtv.rng import Rng


def test_factorials():
    assert eo.exact_factorial(0) == 1
    assert eo.exact_factorial(10) == 3628800
    prod = 1
    for i in range(1, 21):
        prod *= i
    assert eo.exact_factorial(20) == prod == 2432902008176640000
    with pytest.raises(ResourceLimit):
        eo.exact_factorial(10 ** 6 + 1)


def test_pmf_examples():
    assert eo.exact_pmf(4, Fraction(1, 2)).probs == tuple(Fraction(c, 16) for c in (1, 4, 6, 4, 1))
    assert eo.exact_pmf(10, Fraction(3, 10))[3] == Fraction(2668279320, 10 ** 10)
    assert eo.exact_pmf(10, Fraction(3, 10))[3] == Fraction(120 * 27 * 823543, 10 ** 10)
    assert eo.exact_pmf(1, Fraction(3, 10)).probs == (Fraction(7, 10), Fraction(3, 10))
    assert eo.exact_pmf(1, 0.3).p == Fraction(3, 10)  # floats read as their decimal


def test_pmf_guards():
    with pytest.raises(ResourceLimit):
        eo.exact_pmf(10 ** 4 + 1, Fraction(1, 2))
    with pytest.raises(ValueError):
        eo.exact_pmf(5, Fraction(1))


@settings(max_examples=100)
@given(n=st.integers(1, 200), a=st.integers(1, 999))
def test_pmf_mass_is_one(n, a):
    pmf = eo.exact_pmf(n, Fraction(a, 1000))
    assert sum(pmf.nums) == pmf.den
    assert sum(pmf.probs) == 1


@settings(max_examples=50)
@given(n=st.integers(1, 60), a=st.integers(1, 99))
def test_pmf_matches_binomial_formula(n, a):
    p = Fraction(a, 100)
    pmf = eo.exact_pmf(n, p)
    for k in range(n + 1):
        assert pmf[k] == comb(n, k) * p ** k * (1 - p) ** (n - k)


def test_csv_truncates():
    text = eo.exact_pmf(2, Fraction(1, 3)).to_csv(digits=5)
    assert text.splitlines() == ["k,probability", "0,0.44444", "1,0.44444", "2,0.11111"]


def test_dtv_examples():
    b = eo.exact_pmf(1, Fraction(1, 2))
    assert eo.exact_dtv(b, b) == 0
    assert eo.exact_dtv(b, eo.exact_pmf(1, Fraction(3, 10))) == Fraction(1, 5)
    assert eo.exact_dtv(eo.exact_pmf(2, Fraction(1, 2)),
                        eo.exact_pmf(2, Fraction(1, 4))) == Fraction(5, 16)
    with pytest.raises(SupportMismatch):
        eo.exact_dtv(b, eo.exact_pmf(2, Fraction(1, 2)))


def random_pmf(rnd, size):
    w = [rnd.randint(0, 20) for _ in range(size)]
    w[rnd.randrange(size)] += 1
    s = sum(w)
    return [Fraction(x, s) for x in w]


@given(seed=st.integers(0, 10 ** 6), size=st.integers(1, 12))
def test_dtv_metric_properties(seed, size):
    rnd = random.Random(seed)
    a, b, c = (random_pmf(rnd, size) for _ in range(3))
    dab, dba = eo.exact_dtv(a, b), eo.exact_dtv(b, a)
    assert dab == dba and 0 <= dab <= 1
    assert eo.exact_dtv(a, c) <= dab + eo.exact_dtv(b, c)


class FixedBits:
    def __init__(self, value):
        self.value = value

    def bits(self, k):
        return self.value


def test_exact_sample_first_bit_zero():
    pmf = eo.exact_pmf(1, Fraction(1, 2))
    k, d = eo.exact_sample(pmf, make_context(20), FixedBits(0b0110))
    assert k == 0
    k, _ = eo.exact_sample(pmf, make_context(20), FixedBits(1 << 19))
    assert k == 1


def test_delta_out_formula():
    assert eo.fallback_delta(4, 20) == Fraction(5, 2 ** 21)
    pmf = eo.exact_pmf(4, Fraction(1, 2))
    _, d = eo.exact_sample(pmf, make_context(20), Rng(1))
    assert d == Fraction(5, 2 ** 21)


def test_induced_distribution_n4_beta20():
    induced = eo.induced_distribution(4, Fraction(1, 2), 20)
    assert sum(induced) == 1
    assert eo.exact_dtv(induced, eo.exact_pmf(4, Fraction(1, 2))) <= Fraction(5, 2 ** 21)


def test_induced_by_full_enumeration():
    # count grid points per outcome directly, no threshold table
    n, p, beta = 5, Fraction(2, 7), 12
    pmf = eo.exact_pmf(n, p)
    counts = [0] * (n + 1)
    for j in range(1 << beta):
        counts[eo.grid_sample(n, p, j, beta)] += 1
    induced = [Fraction(c, 1 << beta) for c in counts]
    assert induced == eo.induced_distribution(n, p, beta)
    assert eo.exact_dtv(induced, pmf) <= Fraction(n + 1, 2 ** (beta + 1))


@settings(max_examples=60)
@given(n=st.integers(1, 16), a=st.integers(1, 63), beta=st.integers(16, 20))
def test_induced_within_bound(n, a, beta):
    p = Fraction(a, 64)
    induced = eo.induced_distribution(n, p, beta)
    assert eo.exact_dtv(induced, eo.exact_pmf(n, p)) <= eo.fallback_delta(n, beta)


def test_grid_sample_large_matches_table():
    rnd = random.Random(3)
    for _ in range(400):
        n = rnd.randint(1, 2000)
        p = Fraction(rnd.randint(1, 50), rnd.randint(100, 5000))
        beta = rnd.choice([16, 32, 64, 100])
        j = rnd.getrandbits(beta)
        assert eo.grid_sample_large(n, p, j, beta) == eo.grid_sample(n, p, j, beta)


def test_grid_sample_large_huge_n():
    n = 2 ** 697
    p = Fraction(1, 2 ** 694)  # n p = 8
    k = eo.grid_sample_large(n, p, 0, 64)
    assert k == 0
    assert 0 <= eo.grid_sample_large(n, p, (1 << 64) - 1, 64) <= 200


def test_empirical_dtv_examples():
    pmf = eo.exact_pmf(1, Fraction(1, 2))
    assert eo.empirical_dtv([1, 0], pmf) == 0.5
    pmf4 = eo.exact_pmf(4, Fraction(1, 2))
    assert eo.empirical_dtv([1, 4, 6, 4, 1], pmf4) == 0
    assert eo.empirical_dtv([3, 12, 18, 12, 3], pmf4) == 0
    with pytest.raises(SupportMismatch):
        eo.empirical_dtv([1, 1], pmf4)
    with pytest.raises(EmptyHistogram):
        eo.empirical_dtv([0, 0], pmf)


@pytest.mark.slow
def test_baseline_noise_floor():
    for n, p in [(20, Fraction(1, 2)), (100, Fraction(3, 10))]:
        hist = eo.exact_histogram(n, p, 64, 10 ** 6, Rng(11))
        assert eo.empirical_dtv(hist, eo.exact_pmf(n, p)) <= 0.005
