"""Configurable-precision binary floating point with correct rounding.

Numbers are dyadic rationals ``man * 2**exp`` kept in canonical form (odd
mantissa, or zero).  Every basic operation (``+ - * / sqrt``) returns the
round-to-nearest, ties-to-even result of the exact operation at the requested
number of significand bits, which is the error model the sampler analysis is
built on: one unit round-off ``2**-beta`` per operation.

The hot-path functions (``add``, ``mul``, ...) take the precision as a plain
``int``; ``round_to`` and ``arith`` are the context-based public surface.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Rational

from .errors import (
    DivisionByZero,
    DomainError,
    MPOverflow,
    MPUnderflow,
    PrecisionTooLow,
)

MIN_BETA = 16
GUARD_BITS = 32
# |x| < 2**EXP_MAX; matches the widest exponent range MPFR allows on 64-bit
EXP_MAX = (1 << 62) - 1
EXP_MIN = -EXP_MAX


@dataclass(frozen=True)
class PrecisionContext:
    """Working precision ``beta`` with its unit round-off and log error bound.

    ``eps`` is exactly ``2**-beta``; ``tau`` is exactly ``178*beta*eps``, the
    additive error bound of the AGM logarithm at this precision.
    """

    beta: int
    eps: Fraction = field(init=False, repr=False)
    tau: Fraction = field(init=False, repr=False)

    def __post_init__(self):
        if not isinstance(self.beta, int) or isinstance(self.beta, bool):
            raise PrecisionTooLow(f"beta must be an integer, got {self.beta!r}")
        if self.beta < MIN_BETA:
            raise PrecisionTooLow(f"beta={self.beta} is below the minimum {MIN_BETA}")
        eps = Fraction(1, 1 << self.beta)
        object.__setattr__(self, "eps", eps)
        object.__setattr__(self, "tau", 178 * self.beta * eps)

    @property
    def guard(self) -> int:
        """Internal precision used by the logarithm and log-factorial kernels."""
        return self.beta + GUARD_BITS


def make_context(beta: int) -> PrecisionContext:
    return PrecisionContext(beta)


class MPNumber:
    """Exact dyadic value ``man * 2**exp`` with ``man`` odd (or zero)."""

    __slots__ = ("man", "exp")

    def __init__(self, man: int = 0, exp: int = 0):
        self.man = man
        self.exp = exp

    # -- normalized view: x = w * 2**e with 1/2 <= |w| < 1

    @property
    def exponent(self) -> int:
        if not self.man:
            raise DomainError("zero has no exponent")
        return self.exp + abs(self.man).bit_length()

    def significand(self, beta: int) -> int:
        """Signed integer ``s`` with ``x == s * 2**(exponent - beta)``."""
        if not self.man:
            return 0
        shift = beta - abs(self.man).bit_length()
        if shift < 0:
            raise ValueError(f"value needs more than {beta} bits")
        return self.man << shift

    # -- conversions

    def to_fraction(self) -> Fraction:
        if self.exp >= 0:
            return Fraction(self.man << self.exp)
        return Fraction(self.man, 1 << -self.exp)

    def __float__(self) -> float:
        if abs(self.man).bit_length() <= 53:
            try:
                return math.ldexp(float(self.man), self.exp)
            except OverflowError:
                return math.copysign(math.inf, self.man)
        try:
            return float(self.to_fraction())
        except OverflowError:
            return math.copysign(math.inf, self.man)

    def floor(self) -> int:
        if self.exp >= 0:
            return self.man << self.exp
        return self.man >> -self.exp

    def scale(self, k: int) -> "MPNumber":
        """Exact multiplication by ``2**k``."""
        if not self.man:
            return self
        e = self.exp + k
        _check_range(self.man, e)
        return MPNumber(self.man, e)

    def __neg__(self):
        return MPNumber(-self.man, self.exp)

    def __abs__(self):
        return MPNumber(abs(self.man), self.exp)

    def sign(self) -> int:
        return (self.man > 0) - (self.man < 0)

    def is_zero(self) -> bool:
        return not self.man

    # -- exact comparisons

    def __eq__(self, other):
        if isinstance(other, MPNumber):
            return self.man == other.man and (not self.man or self.exp == other.exp)
        if isinstance(other, (int, Fraction)):
            return self.to_fraction() == other
        return NotImplemented

    def __hash__(self):
        return hash(self.to_fraction())

    def __lt__(self, other):
        return compare(self, _coerce(other)) < 0

    def __le__(self, other):
        return compare(self, _coerce(other)) <= 0

    def __gt__(self, other):
        return compare(self, _coerce(other)) > 0

    def __ge__(self, other):
        return compare(self, _coerce(other)) >= 0

    def __repr__(self):
        return f"MPNumber({self.man}, {self.exp})"

    def __str__(self):
        return repr(float(self))


ZERO = MPNumber(0, 0)
ONE = MPNumber(1, 0)


def _coerce(x) -> MPNumber:
    if isinstance(x, MPNumber):
        return x
    if isinstance(x, int):
        return _round(x, 0, max(x.bit_length(), 1))
    f = Fraction(x)
    if f.denominator & (f.denominator - 1):
        raise TypeError("only dyadic values compare exactly with MPNumber")
    return _round(f.numerator, -(f.denominator.bit_length() - 1),
                  max(abs(f.numerator).bit_length(), 1))


def compare(a: MPNumber, b: MPNumber) -> int:
    """Sign of ``a - b``, computed exactly."""
    sa, sb = a.sign(), b.sign()
    if sa != sb:
        return (sa > sb) - (sa < sb)
    if not sa:
        return 0
    ta, tb = a.exponent, b.exponent
    if ta != tb:
        return sa if ta > tb else -sa
    e = min(a.exp, b.exp)
    ma = a.man << (a.exp - e)
    mb = b.man << (b.exp - e)
    return (ma > mb) - (ma < mb)


def _check_range(man: int, exp: int) -> None:
    e = exp + abs(man).bit_length()
    if e > EXP_MAX:
        raise MPOverflow(f"exponent {e} exceeds {EXP_MAX}")
    if e < EXP_MIN:
        raise MPUnderflow(f"exponent {e} below {EXP_MIN}")


def _round(man: int, exp: int, prec: int) -> MPNumber:
    """Round the exact value ``man * 2**exp`` to ``prec`` bits, ties to even."""
    if not man:
        return ZERO
    neg = man < 0
    m = -man if neg else man
    s = m.bit_length() - prec
    if s > 0:
        q = m >> s
        r = m & ((1 << s) - 1)
        half = 1 << (s - 1)
        if r > half or (r == half and q & 1):
            q += 1
        m = q
        exp += s
    tz = (m & -m).bit_length() - 1
    if tz:
        m >>= tz
        exp += tz
    _check_range(m, exp)
    return MPNumber(-m if neg else m, exp)


def _round_ratio(num: int, den: int, exp: int, prec: int) -> MPNumber:
    """Round ``num/den * 2**exp`` (den > 0) to ``prec`` bits."""
    if not num:
        return ZERO
    neg = num < 0
    a = -num if neg else num
    s = prec + 2 - a.bit_length() + den.bit_length()
    if s >= 0:
        q, r = divmod(a << s, den)
    else:
        q, r = divmod(a, den << -s)
    m = (q << 1) | (1 if r else 0)
    return _round(-m if neg else m, exp - s - 1, prec)


# -- precision-as-int kernels (shared by every higher module)

def from_int(n: int, prec: int) -> MPNumber:
    return _round(n, 0, prec)


def from_fraction(x, prec: int) -> MPNumber:
    if isinstance(x, MPNumber):
        return _round(x.man, x.exp, prec)
    if isinstance(x, int):
        return _round(x, 0, prec)
    if isinstance(x, float):
        if not math.isfinite(x):
            raise DomainError(f"non-finite value {x!r}")
        m, e = math.frexp(x)
        return _round(int(m * (1 << 53)), e - 53, prec)
    f = x if isinstance(x, Fraction) else Fraction(x)
    return _round_ratio(f.numerator, f.denominator, 0, prec)


def add(a: MPNumber, b: MPNumber, prec: int) -> MPNumber:
    am, ae, bm, be = a.man, a.exp, b.man, b.exp
    if not am:
        return _round(bm, be, prec)
    if not bm:
        return _round(am, ae, prec)
    if ae < be:
        am, ae, bm, be = bm, be, am, ae
    # b entirely below the last kept bit of a: fold it into a sticky bit
    lsb = ae - max(0, prec + 3 - abs(am).bit_length())
    if be + abs(bm).bit_length() <= lsb:
        m = (am << (ae - lsb + 1)) + (1 if bm > 0 else -1)
        return _round(m, lsb - 1, prec)
    return _round((am << (ae - be)) + bm, be, prec)


def sub(a: MPNumber, b: MPNumber, prec: int) -> MPNumber:
    return add(a, MPNumber(-b.man, b.exp), prec)


def mul(a: MPNumber, b: MPNumber, prec: int) -> MPNumber:
    return _round(a.man * b.man, a.exp + b.exp, prec)


def div(a: MPNumber, b: MPNumber, prec: int) -> MPNumber:
    if not b.man:
        raise DivisionByZero("division by zero")
    num, den = a.man, b.man
    if den < 0:
        num, den = -num, -den
    return _round_ratio(num, den, a.exp - b.exp, prec)


def sqrt(a: MPNumber, prec: int) -> MPNumber:
    if a.man < 0:
        raise DomainError("square root of a negative number")
    if not a.man:
        return ZERO
    m, e = a.man, a.exp
    s = max(0, 2 * (prec + 2) - m.bit_length() + 1)
    if (e - s) & 1:
        s += 1
    m <<= s
    r = math.isqrt(m)
    inexact = 1 if r * r != m else 0
    return _round((r << 1) | inexact, (e - s) // 2 - 1, prec)


# -- context-based public surface

_OPS = {"add": add, "sub": sub, "mul": mul, "div": div}


def round_to(x, ctx: PrecisionContext) -> MPNumber:
    """Nearest ``ctx.beta``-bit number to the exact value ``x`` (ties to even).

    ``x`` may be an int, Fraction, float, decimal string or MPNumber; strings
    and floats are taken at their exact rational value.
    """
    if isinstance(x, str):
        x = Fraction(x)
    elif isinstance(x, Rational) and not isinstance(x, (int, Fraction)):
        x = Fraction(x)
    return from_fraction(x, ctx.beta)


def arith(op: str, a: MPNumber, b: MPNumber | None, ctx: PrecisionContext) -> MPNumber:
    """Correctly rounded ``a op b`` at ``ctx.beta`` bits (``b`` ignored for sqrt)."""
    if op == "sqrt":
        return sqrt(a, ctx.beta)
    try:
        fn = _OPS[op]
    except KeyError:
        raise ValueError(f"unknown operation {op!r}") from None
    return fn(a, b, ctx.beta)


class OpCounter:
    """Counts basic operations performed through it.

    Used to pin the operation count of the hat-inverse evaluation path.
    """

    def __init__(self):
        self.count = 0

    def add(self, a, b, prec):
        self.count += 1
        return add(a, b, prec)

    def sub(self, a, b, prec):
        self.count += 1
        return sub(a, b, prec)

    def mul(self, a, b, prec):
        self.count += 1
        return mul(a, b, prec)

    def div(self, a, b, prec):
        self.count += 1
        return div(a, b, prec)

    def sqrt(self, a, prec):
        self.count += 1
        return sqrt(a, prec)
