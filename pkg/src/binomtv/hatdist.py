"""Hat distribution for transformed rejection (Hoermann's parameterization).

H^{-1}(u) = (2 lam / (1/2 - |u|) + mu) u + nu maps u in (-1/2, 1/2) to a real
candidate whose floor is the proposed sample; h^{-1}(u) = lam / (1/2 - |u|)^2
+ mu is its derivative.  Valid for n p (1-p) >= 10.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from fractions import Fraction
from functools import lru_cache

import numpy as np

from . import mpctx as mp
from .errors import DomainError, DominationFailure, InvalidParam, RegionTooSmall
from .exactoracle import _numerators, as_fraction
from .mpctx import MPNumber, PrecisionContext

MIN_NPQ = 10
ALPHA_SCAN_MAX_N = 10 ** 4
DEFAULT_ALPHA = Fraction(3, 2)
ALPHA_MARGIN = Fraction(105, 100)
DOMINATION_LIMIT = 10

# decimal constants of the parameterization
_L0 = Fraction("-0.05878")
_L1 = Fraction("0.062744")
_L2 = Fraction("0.01")
_M0 = Fraction("1.15")
_M1 = Fraction("2.53")
_HALF = Fraction(1, 2)

# basic operations on the H^{-1} path: 12 for (lam, 2 lam, mu, nu) incl. the
# shared sqrt(np(1-p)), 5 for the map itself; pinned by test_hatdist
HAT_OP_COUNT = 17


@dataclass(frozen=True)
class HatParams:
    n: int
    p: Fraction
    lam: float
    mu: float
    nu: float
    c: int = HAT_OP_COUNT
    alpha: Fraction = DEFAULT_ALPHA


def _float_params(n: int, p: Fraction):
    s = math.sqrt(float(n * p * (1 - p)))
    pf = float(p)
    return (float(_L0) + float(_L1) * s + float(_L2) * pf,
            float(_M0) + float(_M1) * s,
            float(n * p + _HALF))


def hat_params(n: int, p, alpha=None) -> HatParams:
    """Hat parameters for (n, p), p <= 1/2; alpha estimated unless given."""
    p = as_fraction(p)
    if n < 1 or not 0 < p < 1:
        raise InvalidParam(f"invalid (n, p) = ({n}, {p})")
    if p > _HALF:
        raise InvalidParam("p must be canonicalized to (0, 1/2]")
    if n * p * (1 - p) < MIN_NPQ:
        raise RegionTooSmall(f"n p (1-p) = {float(n * p * (1 - p)):.4g} < {MIN_NPQ}")
    return _hat_params_cached(n, p, None if alpha is None else Fraction(alpha))


@lru_cache(maxsize=256)
def _hat_params_cached(n: int, p: Fraction, alpha):
    lam, mu, nu = _float_params(n, p)
    hp = HatParams(n, p, lam, mu, nu)
    if alpha is None:
        alpha = estimate_alpha(n, p, hp)
    return replace(hp, alpha=alpha)


# -- multiple-precision evaluation

def hat_consts(hp: HatParams, prec: int, ops=mp):
    """(lam, 2 lam, mu, nu) rounded through ``prec``-bit basic operations."""
    n = mp.from_int(hp.n, prec)
    p = mp.from_fraction(hp.p, prec)
    r = lambda x: mp.from_fraction(x, prec)  # noqa: E731
    np_ = ops.mul(n, p, prec)
    q = ops.sub(mp.ONE, p, prec)
    s = ops.sqrt(ops.mul(np_, q, prec), prec)
    lam = ops.add(ops.add(r(_L0), ops.mul(r(_L1), s, prec), prec),
                  ops.mul(r(_L2), p, prec), prec)
    mu = ops.add(r(_M0), ops.mul(r(_M1), s, prec), prec)
    nu = ops.add(np_, r(_HALF), prec)
    two_lam = ops.mul(mp.from_int(2, prec), lam, prec)
    return lam, two_lam, mu, nu


@lru_cache(maxsize=256)
def _consts_cached(hp: HatParams, prec: int):
    return hat_consts(hp, prec)


def _as_u(u) -> MPNumber:
    if isinstance(u, MPNumber):
        v = u
    else:
        f = as_fraction(u)
        if f.denominator & (f.denominator - 1):
            raise DomainError("u must be a dyadic rational")
        v = mp.from_fraction(f, max(abs(f.numerator).bit_length(), 1))
    if not abs(v) < MPNumber(1, -1):
        raise DomainError("u must lie strictly inside (-1/2, 1/2)")
    return v


def inv_cdf_w(u: MPNumber, consts, prec: int, ops=mp):
    """(H^{-1}(u), 1/2 - |u|) with five basic operations."""
    lam, two_lam, mu, nu = consts
    d = ops.sub(mp.MPNumber(1, -1), abs(u), prec)
    x = ops.add(ops.div(two_lam, d, prec), mu, prec)
    return ops.add(ops.mul(x, u, prec), nu, prec), d


def hat_density_inv_w(d: MPNumber, consts, prec: int) -> MPNumber:
    lam, _, mu, _ = consts
    return mp.add(mp.div(lam, mp.mul(d, d, prec), prec), mu, prec)


def inv_cdf(u, hp: HatParams, ctx: PrecisionContext) -> MPNumber:
    u = _as_u(u)
    return inv_cdf_w(u, _consts_cached(hp, ctx.beta), ctx.beta)[0]


def hat_density_inv(u, hp: HatParams, ctx: PrecisionContext) -> MPNumber:
    u = _as_u(u)
    d = mp.sub(MPNumber(1, -1), abs(u), ctx.beta)
    return hat_density_inv_w(d, _consts_cached(hp, ctx.beta), ctx.beta)


def count_inv_cdf_ops(u, hp: HatParams, ctx: PrecisionContext) -> int:
    """Basic operations spent computing H^{-1}(u) from scratch (parameters included)."""
    counter = mp.OpCounter()
    consts = hat_consts(hp, ctx.beta, counter)
    inv_cdf_w(_as_u(u), consts, ctx.beta, counter)
    return counter.count


# -- rejection constant

def _hinv_f(u, lam, mu, nu):
    return (2 * lam / (0.5 - np.abs(u)) + mu) * u + nu


def hat_cdf_points(hp: HatParams, ks) -> np.ndarray:
    """H(k) for each k: the u with H^{-1}(u) = k, by bisection (H^{-1} increases)."""
    ks = np.asarray(ks, dtype=float)
    lo = np.full_like(ks, -0.5)
    hi = np.full_like(ks, 0.5)
    for _ in range(64):
        mid = 0.5 * (lo + hi)
        below = _hinv_f(mid, hp.lam, hp.mu, hp.nu) < ks
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    return 0.5 * (lo + hi)


def alpha_ratios(n: int, p: Fraction, hp: HatParams):
    """(max_k b(k)/h(k), max_k sup_{u -> k} b(k) h^{-1}(u)) in float arithmetic.

    h(k) = H(k+1) - H(k) is the hat mass of the k-th cell.  The second ratio is
    what the accept test needs: every u landing on k must satisfy
    b(k) h^{-1}(u) <= alpha.  h^{-1} is monotone in |u|, so its sup over a cell
    sits at one of the cell's ends.
    """
    nums, den = _numerators(n, p)
    b = np.array([a / den for a in nums])
    edges = hat_cdf_points(hp, np.arange(n + 2))
    mass = np.diff(edges)
    with np.errstate(divide="ignore"):
        discrete = np.where(b > 0, b / np.where(mass > 0, mass, 0.0), 0.0)
    dens = hp.lam / (0.5 - np.abs(edges)) ** 2 + hp.mu
    pointwise = b * np.maximum(dens[:-1], dens[1:])
    return float(discrete.max()), float(pointwise.max())


def estimate_alpha(n: int, p, hp: HatParams) -> Fraction:
    """Rejection constant: 1.05 x the pointwise domination ratio, or 3/2 for n > 10**4.

    Rounded up to 4 decimals so the value is readable in bound reports.
    """
    p = as_fraction(p)
    if n > ALPHA_SCAN_MAX_N:
        return DEFAULT_ALPHA
    discrete, pointwise = alpha_ratios(n, p, hp)
    if discrete > DOMINATION_LIMIT or not math.isfinite(pointwise):
        raise DominationFailure(f"b/h reaches {discrete:.3g} for n={n}, p={p}")
    a = ALPHA_MARGIN * Fraction(pointwise)
    a = Fraction(math.ceil(a * 10 ** 4), 10 ** 4)
    return max(a, Fraction(1))
