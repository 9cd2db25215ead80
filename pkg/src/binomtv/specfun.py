"""AGM logarithm, Lanczos factorial and log-factorial at configurable precision.

Everything is evaluated at ``ctx.guard`` bits (``beta + 32``) and rounded to
``beta`` at the end.  The ``*_w`` helpers return unrounded working-precision
values and are what the sampler kernels build on.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from importlib import resources

from . import mpctx as mp
from .errors import CalibrationUnstable, DomainError
from .mpctx import MPNumber, PrecisionContext

HALF = MPNumber(1, -1)
FOUR = MPNumber(1, 2)


# -- AGM

def _agm(w: MPNumber, z: MPNumber, prec: int, tol: int) -> MPNumber:
    """AGM iteration at ``prec`` bits, stopping once w, z agree to ``tol`` bits.

    Returns one more arithmetic mean, which is within ~2**(-2*tol) of the
    common limit.  The stop test uses min(w, z) so the routine is symmetric.
    """
    for _ in range(8 * prec + 64):
        d = mp.sub(w, z, prec)
        if not d.man:
            return w
        lo = w if w < z else z
        if d.exponent <= lo.exponent - tol - 1:
            break
        w, z = mp.add(w, z, prec).scale(-1), mp.sqrt(mp.mul(w, z, prec), prec)
    else:  # pragma: no cover - tol < prec guarantees termination
        raise RuntimeError("AGM iteration did not converge")
    return mp.add(w, z, prec).scale(-1)


def agm(w0: MPNumber, z0: MPNumber, ctx: PrecisionContext) -> MPNumber:
    if w0.man <= 0 or z0.man <= 0:
        raise DomainError("AGM needs positive arguments")
    return mp.from_fraction(_agm(w0, z0, ctx.guard, ctx.beta), ctx.beta)


# -- constants

@lru_cache(maxsize=None)
def pi_w(prec: int) -> MPNumber:
    """pi at ``prec`` bits via the Brent-Salamin (Gauss-Legendre) iteration."""
    wp = prec + 16
    a = mp.ONE
    b = mp.sqrt(HALF, wp)
    t = MPNumber(1, -2)
    k = 0
    while True:
        d = mp.sub(a, b, wp)
        if not d.man or d.exponent < -(wp // 2) - 4:
            break
        y = a
        a = mp.add(a, b, wp).scale(-1)
        b = mp.sqrt(mp.mul(b, y, wp), wp)
        dy = mp.sub(a, y, wp)
        t = mp.sub(t, mp.mul(dy, dy, wp).scale(k), wp)
        k += 1
    s = mp.add(a, b, wp)
    return mp.div(mp.mul(s, s, wp), t.scale(2), prec)


def _agm_scale(prec: int) -> int:
    # s = x * 2**m lands with exponent ceil((prec+3)/2)
    return (prec + 4) // 2


@lru_cache(maxsize=None)
def ln2_w(prec: int) -> MPNumber:
    """ln 2 at ``prec`` bits, as Log(2**M)/M with M chosen so no ln 2 term appears."""
    big = _agm_scale(prec) - 1
    x = MPNumber(1, big)
    return mp.div(_log_core(x, prec), mp.from_int(big, prec), prec)


@lru_cache(maxsize=None)
def half_log_2pi_w(prec: int) -> MPNumber:
    return log_w(pi_w(prec).scale(1), prec).scale(-1)


# -- logarithm

def _log_core(x: MPNumber, prec: int) -> MPNumber:
    m = _agm_scale(prec) - x.exponent
    s = x.scale(m)
    y = mp.div(FOUR, s, prec)
    a = _agm(mp.ONE, y, prec, (prec + 1) // 2 + 4)
    r = mp.div(pi_w(prec), a.scale(1), prec)
    if m:
        r = mp.sub(r, mp.mul(mp.from_int(m, prec), ln2_w(prec), prec), prec)
    return r


def log_w(x: MPNumber, prec: int) -> MPNumber:
    """Natural log of ``x`` at working precision ``prec`` (not rounded further)."""
    if x.man <= 0:
        raise DomainError("logarithm of a non-positive number")
    return _log_core(x, prec)


def log_agm(x: MPNumber, ctx: PrecisionContext) -> MPNumber:
    """ln(x) with absolute error at most ``ctx.tau``."""
    return mp.from_fraction(log_w(x, ctx.guard), ctx.beta)


# -- exponential (only needed for the direct factorial)

def exp_w(x: MPNumber, prec: int) -> MPNumber:
    """e**x at ``prec`` bits via ln 2 reduction, halving and a fixed-point Taylor sum."""
    if not x.man:
        return mp.ONE
    xf = float(x)
    if not math.isfinite(xf) or abs(xf) > 2.0 ** 61:
        raise (mp.MPOverflow if x.man > 0 else mp.MPUnderflow)("exp argument out of range")
    n = round(xf / math.log(2))
    j = 12
    frac = prec + 40 + j
    l2 = ln2_w(frac + n.bit_length() + 8)
    # r = x - n ln2 as a fixed-point integer with `frac` fraction bits
    xr = mp.from_fraction(x, frac + max(x.exponent, 0) + 8)
    r = mp.sub(xr, mp.mul(mp.from_int(n, frac + 8), l2, frac + n.bit_length() + 8),
               frac + 8)
    one = 1 << frac
    rr = r.man << (r.exp + frac) if r.exp + frac >= 0 else r.man >> -(r.exp + frac)
    term = one
    total = one
    i = 1
    while term:
        term = ((term * rr) >> (frac + j)) // i
        total += term
        i += 1
    for _ in range(j):
        total = (total * total) >> frac
    return mp._round(total, n - frac, prec)


# -- Lanczos

@dataclass(frozen=True)
class LanczosParams:
    """Coefficients of A(k) = c0 + sum_{i>=1} c_i/(k+i) and its error bound zeta."""

    g: Fraction
    t: int
    coeffs: tuple
    zeta: Fraction | None = None

    def __post_init__(self):
        if self.g + Fraction(1, 2) <= 0:
            raise ValueError("g + 1/2 must be positive")
        if len(self.coeffs) != self.t or self.t < 1:
            raise ValueError(f"expected {self.t} coefficients, got {len(self.coeffs)}")
        if self.zeta is not None and self.zeta < 0:
            raise ValueError("zeta must be nonnegative")

    def with_zeta(self, zeta) -> "LanczosParams":
        return LanczosParams(self.g, self.t, self.coeffs, Fraction(zeta))

    @property
    def coeff_bits(self) -> int:
        """Precision (bits) carried by the decimal coefficients."""
        return math.ceil(max(_decimal_digits(c) for c in self.coeffs) * math.log2(10))


def _decimal_digits(c: Fraction, limit: int = 400) -> int:
    """Significant decimal digits of a terminating decimal (``limit`` if none)."""
    for e in range(limit):
        v = c * 10 ** e
        if v.denominator == 1:
            return len(str(abs(v.numerator)).strip("0")) or 1
    return limit


def parse_lanczos(text: str, zeta=None) -> LanczosParams:
    """Read ``g t`` then ``t`` decimal coefficients, one per line."""
    lines = [ln.strip() for ln in text.splitlines()
             if ln.strip() and not ln.lstrip().startswith("#")]
    if not lines:
        raise ValueError("empty coefficient file")
    head = lines[0].split()
    if len(head) != 2:
        raise ValueError("first line must be 'g t'")
    g, t = Fraction(head[0]), int(head[1])
    coeffs = tuple(Fraction(s) for s in lines[1:])
    return LanczosParams(g, t, coeffs, None if zeta is None else Fraction(zeta))


def load_lanczos(path, zeta=None) -> LanczosParams:
    with open(path, encoding="utf-8") as fh:
        return parse_lanczos(fh.read(), zeta)


# ζ from calibrate_zeta(default coefficients, n_max=10**4, beta=256);
# test_specfun re-runs the scan and checks this value
DEFAULT_ZETA = Fraction("3.77e-13")


def _default_params() -> LanczosParams:
    text = resources.files("binomtv").joinpath("data/lanczos_g7_t9.txt").read_text()
    return parse_lanczos(text, DEFAULT_ZETA)


DEFAULT_LANCZOS = _default_params()


@lru_cache(maxsize=64)
def lanczos_consts(lp: LanczosParams, prec: int):
    """(g + 1/2, coefficients) rounded to ``prec`` bits."""
    gh = mp.from_fraction(lp.g + Fraction(1, 2), prec)
    return gh, tuple(mp.from_fraction(c, prec) for c in lp.coeffs)


def lanczos_series_w(kk: MPNumber, coeffs, prec: int) -> MPNumber:
    acc = coeffs[0]
    for i in range(1, len(coeffs)):
        den = mp.add(kk, mp.from_int(i, prec), prec)
        acc = mp.add(acc, mp.div(coeffs[i], den, prec), prec)
    return acc


def log_factorial_w(k: int, lp: LanczosParams, prec: int) -> MPNumber:
    """ln FactLancz(k) at ``prec`` bits, in a fixed operation order."""
    gh, coeffs = lanczos_consts(lp, prec)
    kk = mp.from_int(k, prec)
    t = mp.add(kk, gh, prec)
    a = lanczos_series_w(kk, coeffs, prec)
    kh = mp.add(kk, HALF, prec)
    acc = mp.add(half_log_2pi_w(prec), mp.mul(kh, log_w(t, prec), prec), prec)
    acc = mp.sub(acc, t, prec)
    return mp.add(acc, log_w(a, prec), prec)


def log_factorial(k: int, lp: LanczosParams, ctx: PrecisionContext) -> MPNumber:
    if k < 0:
        raise DomainError("factorial of a negative integer")
    return mp.from_fraction(log_factorial_w(k, lp, ctx.guard), ctx.beta)


def lanczos_factorial(k: int, lp: LanczosParams, ctx: PrecisionContext) -> MPNumber:
    """sqrt(2 pi) (k+g+1/2)**(k+1/2) e**-(k+g+1/2) A(k), rounded to beta bits."""
    if k < 0:
        raise DomainError("factorial of a negative integer")
    w = ctx.guard
    gh, coeffs = lanczos_consts(lp, w)
    kk = mp.from_int(k, w)
    t = mp.add(kk, gh, w)
    e = mp.sub(mp.mul(mp.add(kk, HALF, w), log_w(t, w), w), t, w)
    r = mp.mul(exp_w(e, w), mp.sqrt(pi_w(w).scale(1), w), w)
    r = mp.mul(r, lanczos_series_w(kk, coeffs, w), w)
    return mp.from_fraction(r, ctx.beta)


def _round_up_sig(x: float, digits: int = 3) -> Fraction:
    if x <= 0:
        return Fraction(0)
    e = math.floor(math.log10(x)) - digits + 1
    q = Fraction(10) ** e
    return math.ceil(Fraction(x) / q) * q


def calibration_scan(lp: LanczosParams, n_max: int, ctx: PrecisionContext):
    """Relative error |FactLancz(k) - k!| / k! for k = 0..n_max, as floats."""
    w = ctx.guard
    errs = []
    fact = 1
    for k in range(n_max + 1):
        if k:
            fact *= k
        d = mp.sub(log_factorial_w(k, lp, w), log_w(mp.from_int(fact, w), w), w)
        errs.append(abs(math.expm1(float(d))))
    return errs


def calibrate_zeta(lp: LanczosParams, n_max: int, ctx: PrecisionContext) -> Fraction:
    """2x the worst relative factorial error over [0, n_max], rounded up to 3 digits.

    Raises CalibrationUnstable when the error over the top half of the range is
    clearly larger than over the decade below it; that growth is rounding noise
    from too little working precision, not the Lanczos error itself.
    """
    if n_max < 1000:
        raise ValueError("n_max must be at least 1000")
    if ctx.beta < 4 * lp.coeff_bits:
        raise ValueError(f"beta={ctx.beta} is below 4x the coefficient precision "
                         f"({lp.coeff_bits} bits)")
    errs = calibration_scan(lp, n_max, ctx)
    lo = max(errs[n_max // 10: n_max // 2 + 1])
    hi = max(errs[n_max // 2 + 1:])
    if hi > 1.25 * lo:
        raise CalibrationUnstable(
            f"error grows over the top of the range ({hi:.3e} vs {lo:.3e})")
    return _round_up_sig(2 * max(errs))
