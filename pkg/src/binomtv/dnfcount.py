"""Approximate DNF model counting with a budgeted Binomial sampler.

The estimator keeps a bucket X of satisfying assignments sampled at rate p
(a power of 1/2).  Each clause contributes Binomial(|sol(clause)|, p) fresh
solutions, drawn with ``binsamp``; every draw's certified distance bound is
charged to a ``BudgetTracker`` and the run fails if the budget runs out.
"""
from __future__ import annotations

import json
import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .binsampler import AUTO, FixedContext, binsamp
from .dtvbound import BudgetTracker, budget_charge, theorem_floor
from .errors import BudgetExceeded, CountTooLarge, ParseError, TooManyVariables, ZetaFloor
from .exactoracle import as_fraction
from .hatdist import MIN_NPQ
from .mpctx import make_context
from .rng import Rng

BRUTE_FORCE_MAX_VARS = 26
BASE_BETA = 64


class ContradictoryClauseWarning(UserWarning):
    pass


@dataclass(frozen=True)
class DnfFormula:
    num_vars: int
    clauses: tuple  # tuple of tuples of signed literals
    dropped: int = 0

    def masks(self):
        """(mask, value) per clause: sigma satisfies it iff sigma & mask == value."""
        return [clause_mask(c) for c in self.clauses]


def clause_mask(clause) -> tuple:
    mask = val = 0
    for lit in clause:
        bit = 1 << (abs(lit) - 1)
        mask |= bit
        if lit > 0:
            val |= bit
    return mask, val


def parse_dnf(text: str) -> DnfFormula:
    """Parse ``p dnf <vars> <clauses>`` followed by one 0-terminated clause per line.

    Lines starting with ``c`` are comments.  Clauses containing both v and -v
    are dropped with a ContradictoryClauseWarning.
    """
    header = None
    clauses = []
    seen = 0
    dropped = 0
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("c"):
            continue
        if line.startswith("p"):
            if header is not None:
                raise ParseError("duplicate header", lineno)
            parts = line.split()
            if len(parts) != 4 or parts[1] != "dnf":
                raise ParseError(f"expected 'p dnf <vars> <clauses>', got {line!r}", lineno)
            try:
                header = (int(parts[2]), int(parts[3]))
            except ValueError:
                raise ParseError("header counts must be integers", lineno) from None
            if header[0] < 1 or header[1] < 0:
                raise ParseError("header counts out of range", lineno)
            continue
        if header is None:
            raise ParseError("clause before header", lineno)
        try:
            lits = [int(t) for t in line.split()]
        except ValueError:
            raise ParseError(f"non-integer literal in {line!r}", lineno) from None
        if not lits or lits[-1] != 0:
            raise ParseError("clause must end with 0", lineno)
        lits = lits[:-1]
        if 0 in lits:
            raise ParseError("one clause per line; found 0 before the end", lineno)
        for lit in lits:
            if abs(lit) > header[0]:
                raise ParseError(f"literal {lit} exceeds {header[0]} variables", lineno)
        seen += 1
        uniq = sorted(set(lits), key=lambda x: (abs(x), x))
        if any(-lit in uniq for lit in uniq):
            dropped += 1
            warnings.warn(f"line {lineno}: contradictory clause dropped",
                          ContradictoryClauseWarning, stacklevel=2)
            continue
        clauses.append(tuple(uniq))
    if header is None:
        raise ParseError("missing 'p dnf' header")
    if seen != header[1]:
        raise ParseError(f"header declares {header[1]} clauses, found {seen}")
    return DnfFormula(header[0], tuple(clauses), dropped)


def format_dnf(f: DnfFormula) -> str:
    lines = [f"p dnf {f.num_vars} {len(f.clauses)}"]
    lines += [" ".join(str(x) for x in c) + (" 0" if c else "0") for c in f.clauses]
    return "\n".join(lines) + "\n"


def clause_sol_count(clause, num_vars: int) -> int:
    return 1 << (num_vars - len(clause))


def sample_distinct_solutions(clause, num_vars: int, count: int, rng) -> set:
    """Uniform random ``count``-subset of the clause's solutions."""
    total = clause_sol_count(clause, num_vars)
    if count > total:
        raise CountTooLarge(f"asked for {count} of {total} solutions")
    if count <= 0:
        return set()
    mask, val = clause_mask(clause)
    free = ((1 << num_vars) - 1) & ~mask
    if 2 * count <= total:
        out = set()
        while len(out) < count:
            out.add((rng.bits(num_vars) & free) | val)
        return out
    # dense case: enumerate and partially shuffle (only when total <= 2 count)
    positions = [i for i in range(num_vars) if free >> i & 1]
    sols = []
    for r in range(total):
        s = val
        for j, pos in enumerate(positions):
            if r >> j & 1:
                s |= 1 << pos
        sols.append(s)
    for i in range(count):
        j = i + rng.randbelow(total - i)
        sols[i], sols[j] = sols[j], sols[i]
    return set(sols[:count])


def brute_force_count(f: DnfFormula, chunk: int = 1 << 20) -> int:
    """Exact model count by enumerating all 2**num_vars assignments."""
    if f.num_vars > BRUTE_FORCE_MAX_VARS:
        raise TooManyVariables(f"{f.num_vars} variables exceed {BRUTE_FORCE_MAX_VARS}")
    masks = f.masks()
    total = 1 << f.num_vars
    count = 0
    for start in range(0, total, chunk):
        a = np.arange(start, min(total, start + chunk), dtype=np.uint32)
        hit = np.zeros(a.shape, dtype=bool)
        for mask, val in masks:
            hit |= (a & np.uint32(mask)) == np.uint32(val)
        count += int(hit.sum())
    return count


# -- the estimator

@dataclass
class ApsResult:
    estimate: Fraction | None
    delta_prime: Fraction
    T: int
    final_p_log2: int
    failed: bool
    calls: int = 0
    # (delta_prime, |X|, log2 p) after each processed clause
    history: list = field(default_factory=list, repr=False)

    def to_dict(self) -> dict:
        est = None if self.estimate is None else _decimal(self.estimate)
        return {"estimate": est, "delta_prime": float(self.delta_prime), "T": self.T,
                "final_p_log2": self.final_p_log2, "failed": self.failed}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def _decimal(x: Fraction, digits: int = 12) -> str:
    if x.denominator == 1:
        return str(x.numerator)
    q = round(x * 10 ** digits)
    return f"{q // 10 ** digits}.{q % 10 ** digits:0{digits}d}".rstrip("0")


def threshold(eps_tol, delta2, m: int, log_base: str = "2") -> int:
    """T = ceil((log(4/delta2) + log m) / eps**2), log in base 2 or e.

    Base 2 gives the larger bucket, so it is the safe reading of either base.
    """
    log = {"2": math.log2, "e": math.log}[log_base]
    return math.ceil((log(4 / float(delta2)) + log(m)) / float(eps_tol) ** 2)


def base_beta(n: int, p: Fraction) -> int:
    """Precision of the default policy.

    Rejection path: max(64, bound floor), so the bound grows with n.  Exact grid path: 64 + bits(n), so
    the grid term (n+1) 2**(-beta-1) stays near 2**-64.
    """
    if n * p * (1 - p) < MIN_NPQ:
        return BASE_BETA + n.bit_length()
    return max(BASE_BETA, theorem_floor(n, p))


class _Drawer:
    """Binomial draws charged to the tracker under one precision policy."""

    def __init__(self, tracker: BudgetTracker, policy: str, per_call):
        self.tracker = tracker
        self.policy = policy
        self.per_call = per_call
        self.calls = 0

    def __call__(self, n: int, p: Fraction, rng, label: str) -> int:
        if n == 0:
            return 0
        if p == 1:
            return n
        remaining = self.tracker.remaining
        if remaining <= 0:
            raise BudgetExceeded("budget exhausted", accumulated=self.tracker.delta_accum,
                                 label=label)
        if self.policy == "base":
            pc = min(p, 1 - p)
            res = binsamp(n, p, min(remaining, Fraction(1)),
                          FixedContext(make_context(base_beta(n, pc))), rng)
        else:
            res = binsamp(n, p, min(self.per_call, remaining, Fraction(1)), AUTO, rng)
        self.calls += 1
        budget_charge(self.tracker, label, res.delta_out)
        return res.k


def apsest2(f: DnfFormula, eps_tol=0.8, delta=0.36, kappa=0.5, rng=None,
            precision_policy: str = "base", log_base: str = "2",
            check: bool = False) -> ApsResult:
    """Estimate |sol(f)| within a (1 +- eps_tol) factor with probability >= 1 - delta.

    ``precision_policy`` is ``"base"`` (fixed precision per call, see
    ``base_beta``) or ``"uniform"`` (smallest precision meeting kappa*delta/(4m)
    per call).  ``log_base`` ("2" or "e") is the log in the threshold T.  ``check`` asserts the bucket invariants after every clause.
    """
    if rng is None:
        raise ValueError("an rng is required")
    m = len(f.clauses)
    if m == 0:
        raise ValueError("formula has no clauses")
    eps_tol, delta, kappa = as_fraction(eps_tol), as_fraction(delta), as_fraction(kappa)
    if not (0 < eps_tol < 1 and 0 < delta < 1 and 0 < kappa < 1):
        raise ValueError("eps_tol, delta and kappa must lie in (0, 1)")
    if log_base not in ("2", "e"):
        raise ValueError(f"log_base must be '2' or 'e', got {log_base!r}")
    if precision_policy not in ("base", "uniform"):
        raise ValueError(f"unknown precision policy {precision_policy!r}")
    delta1 = kappa * delta
    delta2 = (1 - kappa) * delta
    T = threshold(eps_tol, delta2, m, log_base)
    tracker = BudgetTracker(delta1)
    draw = _Drawer(tracker, precision_policy, delta1 / (4 * m))
    V = f.num_vars
    masks = f.masks()
    X: set = set()
    j = 0  # p = 2**-j
    history = []
    try:
        for i, clause in enumerate(f.clauses):
            mask, val = masks[i]
            X = {s for s in X if s & mask != val}
            n_i = clause_sol_count(clause, V)
            N = draw(n_i, Fraction(1, 1 << j), rng, f"clause {i}")
            while len(X) + N > T:
                j += 1
                X = {s for s in sorted(X) if rng.coin()}
                N = draw(N, Fraction(1, 2), rng, f"thin {i}/{j}")
            X |= sample_distinct_solutions(clause, V, N, rng)
            while len(X) > T:  # pragma: no cover - the loop above keeps |X| <= T
                j += 1
                X = {s for s in sorted(X) if rng.coin()}
            history.append((tracker.delta_accum, len(X), -j))
            if check:
                _check_bucket(X, masks[: i + 1], T)
    except (BudgetExceeded, ZetaFloor):
        # ZetaFloor: the Lanczos term alone exceeds what is left, no precision fits
        return ApsResult(None, tracker.delta_accum, T, -j, True, draw.calls, history)
    return ApsResult(Fraction(len(X) << j), tracker.delta_accum, T, -j, False, draw.calls,
                     history)


def _check_bucket(X, masks, T):
    assert len(X) <= T, "bucket exceeds threshold"
    for s in X:
        assert any(s & m == v for m, v in masks), "bucket element satisfies no clause"


# -- benchmark family

def random_dnf(num_vars: int, num_clauses: int, rng, min_width: int = 3,
               max_width: int = 8) -> DnfFormula:
    clauses = []
    for _ in range(num_clauses):
        w = min_width + rng.randbelow(max_width - min_width + 1)
        w = min(w, num_vars)
        chosen = []
        pool = list(range(1, num_vars + 1))
        for t in range(w):
            k = t + rng.randbelow(num_vars - t)
            pool[t], pool[k] = pool[k], pool[t]
            chosen.append(pool[t])
        lits = [v if rng.coin() else -v for v in chosen]
        clauses.append(tuple(sorted(lits, key=abs)))
    return DnfFormula(num_vars, tuple(clauses))


@dataclass(frozen=True)
class BenchConfig:
    instances: int = 100
    seed: int = 0
    eps_tol: Fraction = Fraction(4, 5)
    delta: Fraction = Fraction(9, 25)
    kappa: Fraction = Fraction(1, 2)
    min_vars: int = 15
    max_vars: int = 20
    min_clauses: int = 10
    max_clauses: int = 40
    min_width: int = 3
    max_width: int = 8
    policy: str = "base"
    log_base: str = "2"


def bench_instance(cfg: BenchConfig, i: int) -> dict:
    root = Rng(cfg.seed).split(i)
    gen = root.split(0)
    V = cfg.min_vars + gen.randbelow(cfg.max_vars - cfg.min_vars + 1)
    m = cfg.min_clauses + gen.randbelow(cfg.max_clauses - cfg.min_clauses + 1)
    f = random_dnf(V, m, gen, cfg.min_width, cfg.max_width)
    exact = brute_force_count(f)
    res = apsest2(f, cfg.eps_tol, cfg.delta, cfg.kappa, root.split(1), cfg.policy,
                  cfg.log_base)
    if res.failed:
        rel = None
    else:
        rel = abs(res.estimate - exact) / exact
    return {"instance": i, "exact": exact,
            "estimate": None if res.estimate is None else _decimal(res.estimate),
            "rel_error": None if rel is None else float(rel),
            "delta_prime": float(res.delta_prime), "failed": res.failed}


def _bench_one(args):
    return bench_instance(*args)


def run_bench(cfg: BenchConfig, workers: int = 1) -> list:
    """Rows ordered by instance index; each instance has its own split rng stream."""
    jobs = [(cfg, i) for i in range(cfg.instances)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_bench_one, jobs))
    return [_bench_one(a) for a in jobs]


def bench_csv(rows) -> str:
    out = ["instance,exact,estimate,rel_error,delta_prime,failed"]
    for r in rows:
        rel = "" if r["rel_error"] is None else repr(r["rel_error"])
        est = "" if r["estimate"] is None else r["estimate"]
        out.append(f"{r['instance']},{r['exact']},{est},{rel},{r['delta_prime']!r},"
                   f"{str(r['failed']).lower()}")
    return "\n".join(out) + "\n"
