"""Exact-arithmetic ground truth for Binomial sampling.

Big-integer factorials, the rational Binomial PMF, exact statistical distance,
and an inverse-CDF sampler on a dyadic uniform grid.  The sampler doubles as the
small-variance fallback of ``binsampler`` and as the baseline in fidelity runs.
"""
from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

from .errors import EmptyHistogram, ResourceLimit, SupportMismatch

MAX_FACTORIAL = 10 ** 6
MAX_PMF_N = 10 ** 4


def exact_factorial(k: int) -> int:
    if k < 0:
        raise ValueError("factorial of a negative integer")
    if k > MAX_FACTORIAL:
        raise ResourceLimit(f"k={k} exceeds the factorial guard {MAX_FACTORIAL}")
    return math.factorial(k)


def as_fraction(p) -> Fraction:
    """Exact rational value of ``p``.

    Strings and floats are read as the decimal they print as, so ``0.3`` means
    3/10 rather than the nearest double.
    """
    if isinstance(p, Fraction):
        return p
    if isinstance(p, str):
        return Fraction(p.strip())
    if isinstance(p, float):
        if not math.isfinite(p):
            raise ValueError(f"non-finite value {p!r}")
        return Fraction(repr(p))
    return Fraction(p)


@dataclass(frozen=True, eq=False)
class ExactPMF:
    """b_{n,p} as integer numerators over the common denominator ``den``."""

    n: int
    p: Fraction
    nums: tuple
    den: int
    _probs: list = field(default_factory=list, repr=False)

    @property
    def probs(self) -> tuple:
        if not self._probs:
            self._probs.extend(Fraction(a, self.den) for a in self.nums)
        return tuple(self._probs)

    def __len__(self):
        return self.n + 1

    def __getitem__(self, k):
        return Fraction(self.nums[k], self.den)

    def floats(self) -> list:
        return [a / self.den for a in self.nums]

    def to_csv(self, digits: int = 50) -> str:
        """``k,probability`` rows, decimals truncated (not rounded) at ``digits``."""
        scale = 10 ** digits
        rows = ["k,probability"]
        for k, a in enumerate(self.nums):
            q = a * scale // self.den
            ip, fp = divmod(q, scale)
            rows.append(f"{k},{ip}.{fp:0{digits}d}")
        return "\n".join(rows) + "\n"


@lru_cache(maxsize=32)
def _numerators(n: int, p: Fraction):
    a, d = p.numerator, p.denominator
    b = d - a
    num = b ** n
    nums = [num]
    for k in range(n):
        num = num * (n - k) * a // ((k + 1) * b)
        nums.append(num)
    return tuple(nums), d ** n


def exact_pmf(n: int, p) -> ExactPMF:
    p = as_fraction(p)
    if n < 1:
        raise ValueError("n must be positive")
    if not 0 < p < 1:
        raise ValueError("p must lie in (0, 1)")
    if n > MAX_PMF_N:
        raise ResourceLimit(f"n={n} exceeds the exact PMF guard {MAX_PMF_N}")
    nums, den = _numerators(n, p)
    return ExactPMF(n, p, nums, den)


def _as_probs(x) -> tuple:
    return x.probs if isinstance(x, ExactPMF) else tuple(Fraction(v) for v in x)


def exact_dtv(a, b) -> Fraction:
    """Half the L1 distance between two distributions on the same support."""
    if isinstance(a, ExactPMF) and isinstance(b, ExactPMF):
        if a.n != b.n:
            raise SupportMismatch(f"supports differ: {a.n + 1} vs {b.n + 1} points")
        if a.den == b.den:
            return Fraction(sum(abs(x - y) for x, y in zip(a.nums, b.nums)), 2 * a.den)
    pa, pb = _as_probs(a), _as_probs(b)
    if len(pa) != len(pb):
        raise SupportMismatch(f"supports differ: {len(pa)} vs {len(pb)} points")
    return sum((abs(x - y) for x, y in zip(pa, pb)), Fraction(0)) / 2


# -- dyadic-grid inverse CDF

def fallback_delta(n: int, beta: int) -> Fraction:
    """dTV bound (n+1) 2**(-beta-1) of inverse-CDF sampling on a beta-bit grid."""
    return Fraction(n + 1, 1 << (beta + 1))


@lru_cache(maxsize=64)
def _thresholds(n: int, p: Fraction, beta: int) -> tuple:
    # U = j / 2**beta maps to k iff T[k-1] <= j < T[k], T[k] = ceil(CDF(k) 2**beta)
    nums, den = _numerators(n, p)
    out = []
    acc = 0
    for a in nums:
        acc += a
        out.append(-((-acc << beta) // den))
    return tuple(out)


def grid_sample(n: int, p: Fraction, j: int, beta: int) -> int:
    """Smallest k with CDF(k) > j / 2**beta."""
    return bisect.bisect_right(_thresholds(n, p, beta), j)


def exact_sample(pmf: ExactPMF, ctx, rng):
    """(k, delta_out) from one beta-bit uniform via exact CDF comparison."""
    j = rng.bits(ctx.beta)
    return grid_sample(pmf.n, pmf.p, j, ctx.beta), fallback_delta(pmf.n, ctx.beta)


def induced_distribution(n: int, p, beta: int) -> list:
    """Exact law of ``grid_sample`` over all 2**beta grid points."""
    p = as_fraction(p)
    th = _thresholds(n, p, beta)
    out = []
    prev = 0
    for t in th:
        t = min(t, 1 << beta)
        out.append(Fraction(t - prev, 1 << beta))
        prev = t
    return out


def empirical_dtv(hist, pmf: ExactPMF) -> float:
    """Plug-in distance between a histogram over [0, n] and the exact PMF."""
    hist = list(hist)
    if len(hist) != pmf.n + 1:
        raise SupportMismatch(f"histogram has {len(hist)} bins, need {pmf.n + 1}")
    s = sum(hist)
    if s <= 0:
        raise EmptyHistogram("histogram has no mass")
    # exact over the integers, one rounding at the end
    den = pmf.den
    tot = sum(abs(c * den - a * s) for c, a in zip(hist, pmf.nums))
    return tot / (2 * s * den)


# -- certified grid inverse CDF for large n (no PMF table)

def _pow_interval(a: int, d: int, n: int, frac: int):
    """Integers (lo, hi) with lo <= (a/d)**n * 2**frac <= hi, for 0 < a < d."""
    blo = (a << frac) // d
    bhi = -((-a << frac) // d)
    lo = hi = 1 << frac
    for bit in bin(n)[2:]:
        lo = (lo * lo) >> frac
        hi = -((-hi * hi) >> frac)
        if bit == "1":
            lo = (lo * blo) >> frac
            hi = -((-hi * bhi) >> frac)
    return lo, hi


def _interval_search(n: int, p: Fraction, j: int, beta: int, frac: int):
    a, d = p.numerator, p.denominator
    b = d - a
    u = j << (frac - beta)
    lo, hi = _pow_interval(b, d, n, frac)
    clo, chi = lo, hi
    # beyond ~2e*np + beta the upper tail is below 2**-beta
    kcap = math.ceil(6 * n * p) + beta + 16
    k = 0
    while True:
        if k == n or clo > u:
            return k
        if chi > u:
            return None
        if k >= kcap:
            return None
        num = (n - k) * a
        den = (k + 1) * b
        lo = lo * num // den
        hi = -((-hi * num) // den)
        clo += lo
        chi += hi
        k += 1


def grid_sample_large(n: int, p, j: int, beta: int) -> int:
    """Same map as ``grid_sample`` (smallest k with CDF(k) > j/2**beta), without a table.

    CDF values are enclosed in fixed-point intervals; the working precision is
    doubled whenever an interval straddles the grid point, so the result is exact.
    Intended for small n*p (the walk is O(n*p + beta) steps).
    """
    p = as_fraction(p)
    frac = beta + 2 * n.bit_length() + 64
    for _ in range(12):
        k = _interval_search(n, p, j, beta, frac)
        if k is not None:
            return k
        frac *= 2
    raise ResourceLimit("could not resolve the inverse CDF at any tried precision")


def exact_histogram(n: int, p, beta: int, count: int, rng) -> list:
    """Counts over [0, n] of ``count`` grid inverse-CDF draws (the baseline sampler)."""
    p = as_fraction(p)
    th = _thresholds(n, p, beta)
    hist = [0] * (n + 1)
    bits = rng.bits
    for _ in range(count):
        hist[bisect.bisect_right(th, bits(beta))] += 1
    return hist
