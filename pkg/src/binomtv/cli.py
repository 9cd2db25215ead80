"""Command-line entry point: ``binomtv <command> ...``.

Exit codes: 0 success, 1 budget failure, 2 usage or invalid input, 3 internal error.
Every command is deterministic given its flags and seed.
"""
from __future__ import annotations

import argparse
import json
import sys
import warnings
from fractions import Fraction
from types import SimpleNamespace

from . import dnfcount as dc
from .binsampler import AUTO, fallback_report, fixed, histogram, plan, sampler_for
from .dtvbound import theorem_bound
from .errors import BinomTVError, BudgetExceeded, ResourceLimit, ZetaFloor
from .exactoracle import as_fraction, empirical_dtv, exact_histogram, exact_pmf
from .hatdist import MIN_NPQ, hat_params
from .mpctx import MIN_BETA, make_context
from .rng import Rng, resolve_seed
from .specfun import DEFAULT_LANCZOS

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_INTERNAL = 0, 1, 2, 3
EMPIRICAL_MAX_N = 1000
EMPIRICAL_MAX_S = 10 ** 8


# -- argument types

def _fraction(text: str) -> Fraction:
    try:
        return as_fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None


def _prob(text: str) -> Fraction:
    p = _fraction(text)
    if not 0 < p < 1:
        raise argparse.ArgumentTypeError(f"p must lie in (0, 1), got {text}")
    return p


def _open_unit(text: str) -> Fraction:
    x = _fraction(text)
    if not 0 < x < 1:
        raise argparse.ArgumentTypeError(f"expected a value in (0, 1), got {text}")
    return x


def _delta(text: str) -> Fraction:
    x = _fraction(text)
    if not 0 < x <= 1:
        raise argparse.ArgumentTypeError(f"delta must lie in (0, 1], got {text}")
    return x


def _pos_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {v}")
    return v


def _beta(text: str) -> int:
    v = _pos_int(text)
    if v < MIN_BETA:
        raise argparse.ArgumentTypeError(f"beta must be >= {MIN_BETA}")
    return v


def _seed(text: str) -> int:
    try:
        v = int(text, 10)
    except ValueError:
        raise argparse.ArgumentTypeError(f"seed must be a decimal integer: {text!r}") from None
    if not 0 <= v < 1 << 64:
        raise argparse.ArgumentTypeError("seed must fit in 64 bits")
    return v


def _emit(obj) -> None:
    print(json.dumps(obj))


def _error(exc: Exception, code: int) -> int:
    rep = {"error": type(exc).__name__, "message": str(exc)}
    bound = getattr(exc, "bound", None)
    if bound is not None:
        rep["bound"] = float(bound)
    print(json.dumps(rep), file=sys.stderr)
    return code


# -- commands

def cmd_sample(a) -> int:
    policy = fixed(a.beta) if a.beta is not None else AUTO
    delta_in = a.delta_in if a.delta_in is not None else Fraction(1)
    _, _, beta = plan(a.n, a.p, delta_in, policy)
    s, flip = sampler_for(a.n, a.p, beta)
    rng = Rng(resolve_seed(a.seed))
    out = sys.stdout
    for _ in range(a.count):
        k = s.sample(rng).k
        out.write(f"{a.n - k if flip else k}\n")
    rep = s.report.to_dict()
    rep["path"] = s.path
    _emit(rep)
    return EXIT_OK


def cmd_bound(a) -> int:
    ctx = make_context(a.beta)
    lp = DEFAULT_LANCZOS if a.zeta is None else DEFAULT_LANCZOS.with_zeta(a.zeta)
    if a.c is not None or a.alpha is not None:
        if a.c is None or a.alpha is None:
            raise argparse.ArgumentTypeError("--c and --alpha go together")
        rep = theorem_bound(a.n, a.p, ctx, SimpleNamespace(c=a.c, alpha=a.alpha), lp)
    else:
        pc = min(a.p, 1 - a.p)
        if a.n * pc * (1 - pc) < MIN_NPQ:
            rep = fallback_report(a.n, pc, a.beta)
        else:
            rep = theorem_bound(a.n, pc, ctx, hat_params(a.n, pc), lp)
    _emit(rep.to_dict())
    return EXIT_OK


def cmd_select_precision(a) -> int:
    _, _, beta = plan(a.n, a.p, a.delta_in, AUTO)
    s, _ = sampler_for(a.n, a.p, beta)
    out = {"beta": beta, "path": s.path}
    out["report"] = s.report.to_dict()
    _emit(out)
    return EXIT_OK


def cmd_empirical_dtv(a) -> int:
    if a.n > EMPIRICAL_MAX_N:
        raise ResourceLimit(f"n={a.n} exceeds {EMPIRICAL_MAX_N}")
    if a.samples > EMPIRICAL_MAX_S:
        raise ResourceLimit(f"S={a.samples} exceeds {EMPIRICAL_MAX_S}")
    plan(a.n, a.p, 1, fixed(a.beta))
    root = Rng(resolve_seed(a.seed))
    pmf = exact_pmf(a.n, a.p)
    d_s = empirical_dtv(histogram(a.n, a.p, a.beta, a.samples, root.split(0)), pmf)
    d_b = empirical_dtv(exact_histogram(a.n, a.p, a.beta, a.samples, root.split(1)), pmf)
    print("n,p,beta,S,dtv_sampler,dtv_baseline")
    print(f"{a.n},{a.p_text},{a.beta},{a.samples},{d_s!r},{d_b!r}")
    return EXIT_OK


def _read_formula(path: str) -> dc.DnfFormula:
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", dc.ContradictoryClauseWarning)
        f = dc.parse_dnf(text)
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    return f


def cmd_dnf(a) -> int:
    if a.dnf_cmd == "exact":
        f = _read_formula(a.file)
        _emit({"exact": str(dc.brute_force_count(f)), "num_vars": f.num_vars,
               "num_clauses": len(f.clauses), "dropped": f.dropped})
        return EXIT_OK
    if a.dnf_cmd == "count":
        f = _read_formula(a.file)
        res = dc.apsest2(f, a.eps, a.delta, a.kappa, Rng(resolve_seed(a.seed)),
                         a.policy, a.log_base)
        _emit(res.to_dict())
        return EXIT_FAIL if res.failed else EXIT_OK
    cfg = dc.BenchConfig(instances=a.instances, seed=resolve_seed(a.seed), eps_tol=a.eps,
                         delta=a.delta, kappa=a.kappa, min_vars=a.min_vars,
                         max_vars=a.max_vars, min_clauses=a.min_clauses,
                         max_clauses=a.max_clauses, min_width=a.min_width,
                         max_width=a.max_width, policy=a.policy, log_base=a.log_base)
    if cfg.min_vars > cfg.max_vars or cfg.min_clauses > cfg.max_clauses \
            or cfg.min_width > cfg.max_width:
        raise argparse.ArgumentTypeError("min bounds must not exceed max bounds")
    sys.stdout.write(dc.bench_csv(dc.run_bench(cfg, a.workers)))
    return EXIT_OK


# -- parser

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="binomtv",
                                 description="Binomial sampling with certified distance bounds.")
    sub = ap.add_subparsers(dest="cmd", required=True)

    def common(sp):
        sp.add_argument("--n", type=_pos_int, required=True)
        sp.add_argument("--p", type=_prob, required=True)
        sp.add_argument("--seed", type=_seed, default=None,
                        help="overrides $BINSAMP_SEED (default 0)")

    sp = sub.add_parser("sample", help="draw samples and print the bound report")
    common(sp)
    g = sp.add_mutually_exclusive_group(required=True)
    g.add_argument("--delta-in", type=_delta, help="smallest precision meeting this distance")
    g.add_argument("--beta", type=_beta, help="fixed precision")
    sp.add_argument("--count", type=_pos_int, default=1)
    sp.set_defaults(func=cmd_sample)

    sp = sub.add_parser("bound", help="distance bound at a given precision")
    common(sp)
    sp.add_argument("--beta", type=_beta, required=True)
    sp.add_argument("--c", type=_pos_int, default=None, help="override the operation count")
    sp.add_argument("--alpha", type=_fraction, default=None, help="override the hat constant")
    sp.add_argument("--zeta", type=_fraction, default=None, help="override the Lanczos bound")
    sp.set_defaults(func=cmd_bound)

    sp = sub.add_parser("select-precision", help="minimal precision for a target distance")
    common(sp)
    sp.add_argument("--delta-in", type=_delta, required=True)
    sp.set_defaults(func=cmd_select_precision)

    sp = sub.add_parser("empirical-dtv", help="plug-in distance of sampler and baseline")
    common(sp)
    sp.add_argument("--beta", type=_beta, default=64)
    sp.add_argument("--samples", "-S", type=_pos_int, default=10 ** 5)
    sp.set_defaults(func=cmd_empirical_dtv)

    sp = sub.add_parser("dnf", help="DNF model counting")
    dsub = sp.add_subparsers(dest="dnf_cmd", required=True)

    def est_flags(s):
        s.add_argument("--eps", type=_open_unit, default=Fraction(4, 5))
        s.add_argument("--delta", type=_open_unit, default=Fraction(9, 25))
        s.add_argument("--kappa", type=_open_unit, default=Fraction(1, 2))
        s.add_argument("--policy", choices=("base", "uniform"), default="base")
        s.add_argument("--log-base", choices=("2", "e"), default="2")
        s.add_argument("--seed", type=_seed, default=None)

    s = dsub.add_parser("count", help="approximate count")
    s.add_argument("file")
    est_flags(s)
    s = dsub.add_parser("exact", help="brute-force count")
    s.add_argument("file")
    s = dsub.add_parser("bench", help="seeded random family, CSV per instance")
    est_flags(s)
    s.add_argument("--instances", type=_pos_int, default=100)
    s.add_argument("--min-vars", type=_pos_int, default=15)
    s.add_argument("--max-vars", type=_pos_int, default=20)
    s.add_argument("--min-clauses", type=_pos_int, default=10)
    s.add_argument("--max-clauses", type=_pos_int, default=40)
    s.add_argument("--min-width", type=_pos_int, default=3)
    s.add_argument("--max-width", type=_pos_int, default=8)
    s.add_argument("--workers", type=_pos_int, default=1)
    sp.set_defaults(func=cmd_dnf)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    raw = list(sys.argv[1:] if argv is None else argv)
    a = ap.parse_args(raw)
    a.p_text = _raw_flag(raw, "--p")
    try:
        return a.func(a)
    except (BudgetExceeded, ZetaFloor) as exc:
        return _error(exc, EXIT_FAIL)
    except argparse.ArgumentTypeError as exc:
        ap.print_usage(sys.stderr)
        return _error(exc, EXIT_USAGE)
    except (BinomTVError, OSError, ValueError) as exc:
        return _error(exc, EXIT_USAGE)
    except Exception as exc:  # pragma: no cover - last resort
        return _error(exc, EXIT_INTERNAL)


def _raw_flag(argv, flag):
    for i, tok in enumerate(argv):
        if tok == flag and i + 1 < len(argv):
            return argv[i + 1]
        if tok.startswith(flag + "="):
            return tok.split("=", 1)[1]
    return None


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
