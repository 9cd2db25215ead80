"""Certified statistical-distance bound of the rejection sampler, precision
selection for a target distance, and additive error-budget tracking.

All bound arithmetic is exact (``Fraction``), so a report carries no rounding
error of its own.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction

from .errors import BudgetExceeded, PrecisionTooLow, ZetaFloor
from .exactoracle import as_fraction
from .mpctx import MIN_BETA, PrecisionContext, make_context

SAFETY_FACTOR = Fraction(2)
SEARCH_START = 64
ZETA_MARGIN = Fraction(1, 10 ** 6)


def _ceil_log2(x: Fraction) -> int:
    """Exact ceil(log2(x)) for a positive rational."""
    a, b = x.numerator, x.denominator

    def at_most(e):  # x <= 2**e
        return a <= (b << e) if e >= 0 else (a << -e) <= b

    e = a.bit_length() - b.bit_length() - 1  # here x > 2**e
    while not at_most(e):
        e += 1
    return e


def beta_floor(n: int, p) -> int:
    """Smallest beta allowed by the bound: max(2 ceil(log2 n), ceil(-log2 p))."""
    p = as_fraction(p)
    return max(2 * _ceil_log2(Fraction(n)), _ceil_log2(1 / p))


def theorem_floor(n: int, p) -> int:
    return max(beta_floor(n, p), MIN_BETA)


@dataclass(frozen=True)
class BoundReport:
    n: int
    p: Fraction
    beta: int
    c: int
    alpha: Fraction
    zeta: Fraction
    term_arith: Fraction
    term_lanczos: Fraction
    safety_factor: Fraction
    value: Fraction

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "p": float(self.p),
            "beta": self.beta,
            "c": self.c,
            "alpha": float(self.alpha),
            "zeta": float(self.zeta),
            "term_arith": float(self.term_arith),
            "term_lanczos": float(self.term_lanczos),
            "safety_factor": float(self.safety_factor),
            "value": float(self.value),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def bound_value(n: int, p, beta: int, c: int, alpha, zeta,
                safety=SAFETY_FACTOR) -> BoundReport:
    """(1110 beta + 3 c p + c + alpha c) n 2**-beta, doubled, plus 15 zeta."""
    p, alpha, zeta = as_fraction(p), as_fraction(alpha), as_fraction(zeta)
    arith = (1110 * beta + 3 * c * p + c + alpha * c) * n / Fraction(1 << beta)
    lanczos = 15 * zeta
    return BoundReport(n, p, beta, c, alpha, zeta, arith, lanczos, Fraction(safety),
                       Fraction(safety) * arith + lanczos)


def theorem_bound(n: int, p, ctx: PrecisionContext, hp, lp) -> BoundReport:
    """Certified dTV bound for the rejection sampler at ``ctx.beta``.

    ``hp`` supplies the operation count and rejection constant, ``lp`` the
    Lanczos error bound.
    """
    lo = beta_floor(n, p)
    if ctx.beta < lo:
        raise PrecisionTooLow(f"beta={ctx.beta} is below the required floor {lo} "
                              f"for n={n}, p={as_fraction(p)}")
    return bound_value(n, p, ctx.beta, hp.c, hp.alpha, lp.zeta or 0)


def _min_beta(fits, floor: int) -> int:
    """Smallest beta >= floor with fits(beta), assuming fits is monotone."""
    if fits(floor):
        return floor
    lo = floor
    hi = max(floor, SEARCH_START)
    while not fits(hi):
        lo = hi
        hi *= 2
    # invariant: not fits(lo), fits(hi)
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if fits(mid):
            hi = mid
        else:
            lo = mid
    return hi


def select_precision(n: int, p, delta_in, hp, lp) -> PrecisionContext:
    """Minimal context whose bound is at most ``delta_in``."""
    delta_in = as_fraction(delta_in)
    zeta = as_fraction(lp.zeta or 0)
    if delta_in <= 15 * zeta * (1 + ZETA_MARGIN):
        raise ZetaFloor(f"15*zeta = {float(15 * zeta):.3e} already exceeds delta_in="
                        f"{float(delta_in):.3e}; use more Lanczos terms")
    floor = theorem_floor(n, p)

    def fits(beta):
        return bound_value(n, p, beta, hp.c, hp.alpha, zeta).value <= delta_in

    return make_context(_min_beta(fits, floor))


def fallback_precision(n: int, delta_in) -> PrecisionContext:
    """Minimal beta (>= 16) with (n+1) 2**(-beta-1) <= delta_in."""
    delta_in = as_fraction(delta_in)
    if delta_in <= 0:
        raise ValueError("delta_in must be positive")
    return make_context(_min_beta(lambda b: Fraction(n + 1, 1 << (b + 1)) <= delta_in,
                                  MIN_BETA))


@dataclass
class BudgetTracker:
    """Running total of per-call distance bounds against a fixed budget."""

    delta_budget: Fraction
    delta_accum: Fraction = Fraction(0)
    charges: list = field(default_factory=list)

    def __post_init__(self):
        self.delta_budget = as_fraction(self.delta_budget)
        if self.delta_budget < 0:
            raise ValueError("budget must be nonnegative")

    @property
    def remaining(self) -> Fraction:
        return self.delta_budget - self.delta_accum

    def charge(self, label: str, bound) -> "BudgetTracker":
        return budget_charge(self, label, bound)


def budget_charge(tracker: BudgetTracker, label: str, bound) -> BudgetTracker:
    bound = as_fraction(bound)
    if bound < 0:
        raise ValueError("charges must be nonnegative")
    if not bound:
        return tracker
    total = tracker.delta_accum + bound
    if total > tracker.delta_budget:
        raise BudgetExceeded(
            f"charge {label!r} of {float(bound):.3e} exceeds the remaining budget "
            f"{float(tracker.remaining):.3e}",
            accumulated=tracker.delta_accum, label=label, bound=bound)
    tracker.delta_accum = total
    tracker.charges.append((label, bound))
    return tracker


def log2_ceil(x) -> int:
    return _ceil_log2(as_fraction(x))

