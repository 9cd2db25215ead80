"""Pure-Python rejection kernel (reference and fallback for the compiled core).

A kernel is built from a ``spec`` dict of precomputed constants given as
``(man, exp)`` pairs; both backends consume the same spec and must return
bit-identical results.
"""
from __future__ import annotations

from . import mpctx as mp
from .mpctx import MPNumber

HALF = MPNumber(1, -1)
FOUR = MPNumber(1, 2)
CACHE_LIMIT = 1 << 20


def _num(pair) -> MPNumber:
    return mp._round(pair[0], pair[1], max(abs(pair[0]).bit_length(), 1))


def _pair(x: MPNumber):
    return (x.man, x.exp)


class RejectionKernel:
    """One transformed-rejection trial per call at fixed (n, beta)."""

    def __init__(self, spec: dict):
        self.n = spec["n"]
        self.beta = spec["beta"]
        self.w = spec["w"]
        self.agm_tol = (self.w + 1) // 2 + 4
        self.agm_scale = (self.w + 4) // 2
        c = {k: _num(spec[k]) for k in ("lam", "two_lam", "mu", "nu", "log_p", "log_q",
                                        "log_alpha", "gh", "half_log_2pi", "pi", "ln2")}
        self.c = c
        self.coeffs = [_num(x) for x in spec["coeffs"]]
        self._cache = [None] * (self.n + 1) if self.n < CACHE_LIMIT else None
        self.l_n = self.log_factorial(self.n)

    # -- building blocks at working precision w

    def _agm(self, w, z):
        prec, tol = self.w, self.agm_tol
        while True:
            d = mp.sub(w, z, prec)
            if not d.man:
                return w
            lo = w if w < z else z
            if d.exponent <= lo.exponent - tol - 1:
                break
            w, z = mp.add(w, z, prec).scale(-1), mp.sqrt(mp.mul(w, z, prec), prec)
        return mp.add(w, z, prec).scale(-1)

    def log_w(self, x: MPNumber) -> MPNumber:
        prec = self.w
        m = self.agm_scale - x.exponent
        y = mp.div(FOUR, x.scale(m), prec)
        a = self._agm(mp.ONE, y)
        r = mp.div(self.c["pi"], a.scale(1), prec)
        if m:
            r = mp.sub(r, mp.mul(mp.from_int(m, prec), self.c["ln2"], prec), prec)
        return r

    def log_beta(self, x: MPNumber) -> MPNumber:
        return mp.from_fraction(self.log_w(x), self.beta)

    def log_factorial(self, k: int) -> MPNumber:
        cache = self._cache
        if cache is not None:
            hit = cache[k]
            if hit is not None:
                return hit
        prec = self.w
        kk = mp.from_int(k, prec)
        t = mp.add(kk, self.c["gh"], prec)
        coeffs = self.coeffs
        acc = coeffs[0]
        for i in range(1, len(coeffs)):
            den = mp.add(kk, mp.from_int(i, prec), prec)
            acc = mp.add(acc, mp.div(coeffs[i], den, prec), prec)
        kh = mp.add(kk, HALF, prec)
        r = mp.add(self.c["half_log_2pi"], mp.mul(kh, self.log_w(t), prec), prec)
        r = mp.sub(r, t, prec)
        r = mp.add(r, self.log_w(acc), prec)
        r = mp.from_fraction(r, self.beta)
        if cache is not None:
            cache[k] = r
        return r

    # -- the trial

    def trial(self, ubits: int, vbits: int) -> int:
        """Accepted k, or -1 on rejection (including candidates outside [0, n]).

        u = ubits/2**beta - 1/2 and v = vbits/2**beta; callers guarantee
        0 < ubits < 2**beta and 0 < vbits < 2**beta.
        """
        b = self.beta
        c = self.c
        u = mp._round(ubits - (1 << (b - 1)), -b, b)
        d = mp.sub(HALF, abs(u), b)
        x = mp.add(mp.div(c["two_lam"], d, b), c["mu"], b)
        x = mp.add(mp.mul(x, u, b), c["nu"], b)
        k = x.floor()
        n = self.n
        if k < 0 or k > n:
            return -1
        hv = mp.add(mp.div(c["lam"], mp.mul(d, d, b), b), c["mu"], b)
        lv = mp.sub(self.l_n, self.log_factorial(k), b)
        lv = mp.sub(lv, self.log_factorial(n - k), b)
        lv = mp.add(lv, mp.mul(mp.from_int(k, b), c["log_p"], b), b)
        lv = mp.add(lv, mp.mul(mp.from_int(n - k, b), c["log_q"], b), b)
        lv = mp.add(lv, self.log_beta(hv), b)
        lv = mp.sub(lv, c["log_alpha"], b)
        v = mp._round(vbits, -b, b)
        if mp.compare(self.log_beta(v), lv) <= 0:
            return k
        return -1

    # -- test hooks shared with the compiled kernel

    def log_w_pair(self, man: int, exp: int):
        return _pair(self.log_w(_num((man, exp))))

    def log_factorial_pair(self, k: int):
        return _pair(self.log_factorial(k))
