"""Binomial sampler with a certified distance bound on every draw.

``binsamp(n, p, delta_in, policy, rng)`` returns a sample together with
``delta_out``, an upper bound on the statistical distance between the
sampler's output law and Binomial(n, p).  Large-variance cases
(n p (1-p) >= 10) use transformed rejection with multiple-precision
arithmetic; the rest use exact inverse-CDF sampling on a dyadic grid.
"""
from __future__ import annotations

import threading
from collections import OrderedDict
from dataclasses import dataclass
from fractions import Fraction

from . import _backend
from . import mpctx as mp
from . import specfun as sf
from .dtvbound import (
    BoundReport,
    fallback_precision,
    select_precision,
    theorem_bound,
)
from .errors import BudgetExceeded, InvalidParam, ZetaFloor
from .exactoracle import (
    as_fraction,
    fallback_delta,
    grid_sample,
    grid_sample_large,
)
from .hatdist import MIN_NPQ, hat_consts, hat_params
from .mpctx import PrecisionContext, make_context

REJECTION = "rejection"
FALLBACK = "exact_fallback"
TABLE_MAX_N = 2000
MAX_TRIALS = 10 ** 6
_HALF = Fraction(1, 2)


@dataclass(frozen=True)
class FixedContext:
    """Sample at exactly ``ctx.beta``; fail up front if the bound misses delta_in."""

    ctx: PrecisionContext


@dataclass(frozen=True)
class AutoPrecision:
    """Sample at the smallest beta whose bound fits delta_in."""


AUTO = AutoPrecision()


def fixed(beta: int) -> FixedContext:
    return FixedContext(make_context(beta))


@dataclass(frozen=True)
class SampleResult:
    k: int
    delta_out: Fraction
    iterations: int
    path: str
    beta: int


# -- dyadic uniforms

def draw_unit_bits(rng, beta: int) -> int:
    """j in [1, 2**beta): v = j / 2**beta in (0, 1)."""
    while True:
        j = rng.bits(beta)
        if j:
            return j


def draw_signed_bits(rng, beta: int) -> int:
    """j in [1, 2**beta): u = j / 2**beta - 1/2 in (-1/2, 1/2)."""
    return draw_unit_bits(rng, beta)


def draw_uniform_unit(rng, beta: int) -> Fraction:
    return Fraction(draw_unit_bits(rng, beta), 1 << beta)


def draw_uniform_signed(rng, beta: int) -> Fraction:
    return Fraction(draw_signed_bits(rng, beta), 1 << beta) - _HALF


# -- reports

def fallback_report(n: int, p: Fraction, beta: int) -> BoundReport:
    """Report for the exact grid path: no hat, no Lanczos term, no safety factor."""
    d = fallback_delta(n, beta)
    return BoundReport(n, p, beta, 0, Fraction(1), Fraction(0), d, Fraction(0),
                       Fraction(1), d)


def _pair(x: mp.MPNumber):
    return (x.man, x.exp)


def kernel_spec(n: int, p: Fraction, hp, lp, ctx: PrecisionContext) -> dict:
    """Constants of one rejection kernel as (man, exp) pairs."""
    b, w = ctx.beta, ctx.guard
    p_b = mp.from_fraction(p, b)
    q_b = mp.sub(mp.ONE, p_b, b)
    lam, two_lam, mu, nu = hat_consts(hp, b)
    gh, coeffs = sf.lanczos_consts(lp, w)
    return {
        "n": n,
        "beta": b,
        "w": w,
        "lam": _pair(lam),
        "two_lam": _pair(two_lam),
        "mu": _pair(mu),
        "nu": _pair(nu),
        "log_p": _pair(sf.log_agm(p_b, ctx)),
        "log_q": _pair(sf.log_agm(q_b, ctx)),
        "log_alpha": _pair(sf.log_agm(mp.from_fraction(hp.alpha, b), ctx)),
        "gh": _pair(gh),
        "half_log_2pi": _pair(sf.half_log_2pi_w(w)),
        "pi": _pair(sf.pi_w(w)),
        "ln2": _pair(sf.ln2_w(w)),
        "coeffs": [_pair(c) for c in coeffs],
    }


class BinomialSampler:
    """Sampler for one canonical (n, p <= 1/2) at one precision."""

    def __init__(self, n: int, p, ctx: PrecisionContext, lp=sf.DEFAULT_LANCZOS,
                 kernel_class=None):
        p = as_fraction(p)
        if p > _HALF:
            raise InvalidParam("BinomialSampler expects p <= 1/2; use binsamp")
        self.n, self.p, self.ctx, self.lp = n, p, ctx, lp
        if n * p * (1 - p) >= MIN_NPQ:
            self.path = REJECTION
            self.hp = hat_params(n, p)
            self.report = theorem_bound(n, p, ctx, self.hp, lp)
            cls = kernel_class or _backend.RejectionKernel
            self.kernel = cls(kernel_spec(n, p, self.hp, lp, ctx))
        else:
            self.path = FALLBACK
            self.hp = None
            self.report = fallback_report(n, p, ctx.beta)
            self.kernel = None

    @property
    def delta_out(self) -> Fraction:
        return self.report.value

    def sample(self, rng) -> SampleResult:
        b = self.ctx.beta
        if self.kernel is None:
            j = rng.bits(b)
            if self.n <= TABLE_MAX_N:
                k = grid_sample(self.n, self.p, j, b)
            else:
                k = grid_sample_large(self.n, self.p, j, b)
            return SampleResult(k, self.report.value, 1, FALLBACK, b)
        trial = self.kernel.trial
        for it in range(1, MAX_TRIALS + 1):
            k = trial(draw_signed_bits(rng, b), draw_unit_bits(rng, b))
            if k >= 0:
                return SampleResult(k, self.report.value, it, REJECTION, b)
        raise RuntimeError(f"no acceptance in {MAX_TRIALS} trials")  # pragma: no cover

    def sample_many(self, count: int, rng) -> list:
        return [self.sample(rng).k for _ in range(count)]


# samplers hold kernel scratch space, so each thread keeps its own cache
_local = threading.local()
CACHE_SIZE = 64


def get_sampler(n: int, p: Fraction, beta: int, lp=sf.DEFAULT_LANCZOS) -> BinomialSampler:
    cache = getattr(_local, "samplers", None)
    if cache is None:
        cache = _local.samplers = OrderedDict()
    key = (n, p, beta, lp)
    s = cache.get(key)
    if s is None:
        s = BinomialSampler(n, p, make_context(beta), lp)
        cache[key] = s
        if len(cache) > CACHE_SIZE:
            cache.popitem(last=False)
    else:
        cache.move_to_end(key)
    return s


def _validate(n, p, delta_in):
    if isinstance(n, bool) or not isinstance(n, int) or n < 1:
        raise InvalidParam(f"n must be a positive integer, got {n!r}")
    try:
        p = as_fraction(p)
    except (TypeError, ValueError) as exc:
        raise InvalidParam(f"invalid p: {p!r}") from exc
    if not 0 < p < 1:
        raise InvalidParam(f"p must lie in (0, 1), got {p}")
    delta_in = as_fraction(delta_in)
    if not 0 < delta_in <= 1:
        raise InvalidParam(f"delta_in must lie in (0, 1], got {delta_in}")
    return n, p, delta_in


def plan(n: int, p, delta_in, policy=AUTO, lp=sf.DEFAULT_LANCZOS):
    """Resolve (canonical p, flipped?, beta) for a call, raising budget errors early.

    Consumes no randomness, so callers can test feasibility before sampling.
    """
    n, p, delta_in = _validate(n, p, delta_in)
    flip = p > _HALF
    pc = 1 - p if flip else p
    small = n * pc * (1 - pc) < MIN_NPQ
    if isinstance(policy, FixedContext):
        beta = policy.ctx.beta
        if small:
            bound = fallback_delta(n, beta)
        else:
            zeta = as_fraction(lp.zeta or 0)
            if 15 * zeta >= delta_in:
                raise ZetaFloor(f"15*zeta = {float(15 * zeta):.3e} exceeds delta_in="
                                f"{float(delta_in):.3e}; use more Lanczos terms")
            bound = theorem_bound(n, pc, policy.ctx, hat_params(n, pc), lp).value
        if bound > delta_in:
            raise BudgetExceeded(
                f"bound {float(bound):.3e} at beta={beta} exceeds delta_in="
                f"{float(delta_in):.3e}", accumulated=None, label="binsamp", bound=bound)
    elif isinstance(policy, AutoPrecision):
        if small:
            beta = fallback_precision(n, delta_in).beta
        else:
            beta = select_precision(n, pc, delta_in, hat_params(n, pc), lp).beta
    else:
        raise InvalidParam(f"unknown precision policy {policy!r}")
    return pc, flip, beta


def binsamp(n: int, p, delta_in=1, policy=AUTO, rng=None,
            lp=sf.DEFAULT_LANCZOS) -> SampleResult:
    """One Binomial(n, p) draw with its certified distance bound.

    p > 1/2 is sampled as n - Binomial(n, 1-p).  Under a fixed context the
    bound is checked against ``delta_in`` before any randomness is used.
    """
    if rng is None:
        raise InvalidParam("an rng is required (see binomtv.rng.default_rng)")
    pc, flip, beta = plan(n, p, delta_in, policy, lp)
    res = get_sampler(n, pc, beta, lp).sample(rng)
    if flip:
        return SampleResult(n - res.k, res.delta_out, res.iterations, res.path, beta)
    return res


def sampler_for(n: int, p, beta: int, lp=sf.DEFAULT_LANCZOS):
    """(sampler over canonical p, flipped?) for repeated draws at a fixed beta."""
    n, p, _ = _validate(n, p, 1)
    flip = p > _HALF
    pc = 1 - p if flip else p
    return get_sampler(n, pc, beta, lp), flip



def histogram(n: int, p, beta: int, count: int, rng, lp=sf.DEFAULT_LANCZOS) -> list:
    """Counts over [0, n] of ``count`` draws at a fixed beta."""
    s, flip = sampler_for(n, p, beta, lp)
    hist = [0] * (n + 1)
    sample = s.sample
    for _ in range(count):
        k = sample(rng).k
        hist[n - k if flip else k] += 1
    return hist
