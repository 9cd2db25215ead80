"""Compiled vs pure-Python rejection kernel: time per trial and agreement.

    python benchmarks/bench_kernel.py [--trials 2000]
"""
import argparse
import time
from fractions import Fraction

from binomtv import _backend
from binomtv._kernel_py import RejectionKernel as PureKernel
from binomtv.binsampler import draw_unit_bits, kernel_spec
from binomtv.hatdist import hat_params
from binomtv.mpctx import make_context
from binomtv.rng import Rng
from binomtv.specfun import DEFAULT_LANCZOS

CASES = [
    (100, Fraction(3, 10), 64),
    (1000, Fraction(1, 2), 64),
    (10 ** 6, Fraction(3, 10), 128),
    (2 ** 40 + 3, Fraction(1, 2 ** 20), 96),
]


def time_kernel(kernel, draws):
    t = time.perf_counter()
    out = [kernel.trial(u, v) for u, v in draws]
    return out, (time.perf_counter() - t) / len(draws)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--trials", type=int, default=2000)
    ap.add_argument("--seed", type=int, default=0)
    a = ap.parse_args()
    compiled = _backend.compiled_kernel_class()
    print(f"backend in use: {_backend.BACKEND}")
    print(f"{'n':>14} {'p':>10} {'beta':>5} {'pure us':>9} {'compiled us':>12} "
          f"{'speedup':>8} {'agree':>6}")
    for n, p, beta in CASES:
        ctx = make_context(beta)
        spec = kernel_spec(n, p, hat_params(n, p), DEFAULT_LANCZOS, ctx)
        rng = Rng(a.seed)
        draws = [(draw_unit_bits(rng, beta), draw_unit_bits(rng, beta))
                 for _ in range(a.trials)]
        ref, t_py = time_kernel(PureKernel(spec), draws)
        if compiled is None:
            print(f"{n:>14} {str(p):>10} {beta:>5} {t_py * 1e6:9.1f} {'n/a':>12}")
            continue
        got, t_c = time_kernel(compiled(spec), draws)
        print(f"{n:>14} {str(p):>10} {beta:>5} {t_py * 1e6:9.1f} {t_c * 1e6:12.2f} "
              f"{t_py / t_c:8.1f} {str(ref == got):>6}")


if __name__ == "__main__":
    main()
