# cython: language_level=3, boundscheck=False, wraparound=False
"""MPFR-backed rejection kernel.

Same operation sequence as ``_kernel_py.RejectionKernel``; MPFR's
round-to-nearest-even results are bit-identical to ``mpctx``'s, so both
backends accept and reject exactly the same (u, v) pairs.
"""
from libc.stdlib cimport malloc, free, calloc

cdef extern from "gmp.h":
    ctypedef struct __mpz_struct:
        pass
    ctypedef __mpz_struct mpz_t[1]
    void mpz_init(mpz_t)
    void mpz_clear(mpz_t)
    int mpz_set_str(mpz_t, const char *, int)
    char *mpz_get_str(char *, int, const mpz_t)
    void mpz_set_si(mpz_t, long)
    void mpz_set_ui(mpz_t, unsigned long)
    long mpz_get_si(const mpz_t)
    int mpz_fits_slong_p(const mpz_t)
    int mpz_sgn(const mpz_t)
    int mpz_cmp(const mpz_t, const mpz_t)
    void mpz_sub(mpz_t, const mpz_t, const mpz_t)
    size_t mpz_sizeinbase(const mpz_t, int)

cdef extern from "mpfr.h":
    ctypedef struct __mpfr_struct:
        pass
    ctypedef __mpfr_struct mpfr_t[1]
    ctypedef __mpfr_struct *mpfr_ptr
    ctypedef long mpfr_prec_t
    ctypedef long mpfr_exp_t
    ctypedef enum mpfr_rnd_t:
        MPFR_RNDN
        MPFR_RNDZ
        MPFR_RNDU
        MPFR_RNDD
    void mpfr_init2(mpfr_ptr, mpfr_prec_t)
    void mpfr_clear(mpfr_ptr)
    mpfr_prec_t mpfr_get_prec(mpfr_ptr)
    int mpfr_set(mpfr_ptr, mpfr_ptr, mpfr_rnd_t)
    int mpfr_set_si(mpfr_ptr, long, mpfr_rnd_t)
    int mpfr_set_ui(mpfr_ptr, unsigned long, mpfr_rnd_t)
    int mpfr_set_z(mpfr_ptr, mpz_t, mpfr_rnd_t)
    int mpfr_set_z_2exp(mpfr_ptr, mpz_t, mpfr_exp_t, mpfr_rnd_t)
    mpfr_exp_t mpfr_get_z_2exp(mpz_t, mpfr_ptr)
    int mpfr_get_z(mpz_t, mpfr_ptr, mpfr_rnd_t)
    int mpfr_add(mpfr_ptr, mpfr_ptr, mpfr_ptr, mpfr_rnd_t)
    int mpfr_add_ui(mpfr_ptr, mpfr_ptr, unsigned long, mpfr_rnd_t)
    int mpfr_sub(mpfr_ptr, mpfr_ptr, mpfr_ptr, mpfr_rnd_t)
    int mpfr_sub_ui(mpfr_ptr, mpfr_ptr, unsigned long, mpfr_rnd_t)
    int mpfr_mul(mpfr_ptr, mpfr_ptr, mpfr_ptr, mpfr_rnd_t)
    int mpfr_div(mpfr_ptr, mpfr_ptr, mpfr_ptr, mpfr_rnd_t)
    int mpfr_sqrt(mpfr_ptr, mpfr_ptr, mpfr_rnd_t)
    int mpfr_abs(mpfr_ptr, mpfr_ptr, mpfr_rnd_t)
    int mpfr_mul_2si(mpfr_ptr, mpfr_ptr, long, mpfr_rnd_t)
    int mpfr_div_2ui(mpfr_ptr, mpfr_ptr, unsigned long, mpfr_rnd_t)
    int mpfr_cmp(mpfr_ptr, mpfr_ptr)
    int mpfr_zero_p(mpfr_ptr)
    mpfr_exp_t mpfr_get_exp(mpfr_ptr)
    int mpfr_set_emin(mpfr_exp_t)
    int mpfr_set_emax(mpfr_exp_t)
    mpfr_exp_t mpfr_get_emin_min()
    mpfr_exp_t mpfr_get_emax_max()

mpfr_set_emin(mpfr_get_emin_min())
mpfr_set_emax(mpfr_get_emax_max())

DEF CACHE_LIMIT = 1 << 20

_SPEC_KEYS = ("n", "beta", "w", "lam", "two_lam", "mu", "nu", "log_p", "log_q",
              "log_alpha", "gh", "half_log_2pi", "pi", "ln2", "coeffs")


cdef void _z_from_py(mpz_t z, object x):
    if -(1 << 62) < x < (1 << 62):
        mpz_set_si(z, <long>x)
    else:
        s = format(x, "x").encode("ascii")
        mpz_set_str(z, s, 16)


cdef object _z_to_py(mpz_t z):
    cdef size_t size
    cdef char *buf
    if mpz_fits_slong_p(z):
        return mpz_get_si(z)
    size = mpz_sizeinbase(z, 16) + 2
    buf = <char *>malloc(size)
    try:
        mpz_get_str(buf, 16, z)
        return int(buf.decode("ascii"), 16)
    finally:
        free(buf)


cdef class RejectionKernel:
    cdef public object n
    cdef public long beta
    cdef public long w
    cdef long agm_tol
    cdef long agm_scale
    cdef int ncoef
    cdef mpz_t nz, kz, nkz, tz
    # constants
    cdef mpfr_t lam, two_lam, mu, nu, log_p, log_q, log_alpha, half_b
    cdef mpfr_t gh, hl2pi, pi, ln2, one_w, four_w, half_w, l_n
    cdef mpfr_ptr coeffs
    # scratch at w
    cdef mpfr_t y, aw, az, ad, ta, tb, res, lt, kk, tt, acc, den, q, kh, xw
    # scratch at beta
    cdef mpfr_t u, au, d, x, hv, d2, lv, tmp, kf, lk, lnk, v, lb
    cdef mpfr_ptr cache
    cdef char *cached
    cdef long cache_n
    cdef bint ready

    def __cinit__(self, dict spec):
        cdef long b = spec["beta"]
        cdef long w = spec["w"]
        cdef int i
        for key in _SPEC_KEYS:
            if key not in spec:
                raise KeyError(key)
        self.beta = b
        self.w = w
        self.n = spec["n"]
        self.agm_tol = (w + 1) // 2 + 4
        self.agm_scale = (w + 4) // 2
        mpz_init(self.nz); mpz_init(self.kz); mpz_init(self.nkz); mpz_init(self.tz)
        _z_from_py(self.nz, self.n)
        self._init_beta(b)
        self._init_w(w)
        self.ready = True
        self._set(self.lam, spec["lam"])
        self._set(self.two_lam, spec["two_lam"])
        self._set(self.mu, spec["mu"])
        self._set(self.nu, spec["nu"])
        self._set(self.log_p, spec["log_p"])
        self._set(self.log_q, spec["log_q"])
        self._set(self.log_alpha, spec["log_alpha"])
        self._set(self.gh, spec["gh"])
        self._set(self.hl2pi, spec["half_log_2pi"])
        self._set(self.pi, spec["pi"])
        self._set(self.ln2, spec["ln2"])
        mpfr_set_ui(self.half_b, 1, MPFR_RNDN)
        mpfr_div_2ui(self.half_b, self.half_b, 1, MPFR_RNDN)
        mpfr_set_ui(self.half_w, 1, MPFR_RNDN)
        mpfr_div_2ui(self.half_w, self.half_w, 1, MPFR_RNDN)
        mpfr_set_ui(self.one_w, 1, MPFR_RNDN)
        mpfr_set_ui(self.four_w, 4, MPFR_RNDN)
        coeffs = spec["coeffs"]
        self.ncoef = len(coeffs)
        self.coeffs = <mpfr_ptr>malloc(self.ncoef * sizeof(__mpfr_struct))
        for i in range(self.ncoef):
            mpfr_init2(&self.coeffs[i], w)
            self._set(&self.coeffs[i], coeffs[i])
        self.cache = NULL
        self.cached = NULL
        self.cache_n = -1
        if self.n < CACHE_LIMIT:
            self.cache_n = self.n
            self.cache = <mpfr_ptr>malloc((self.cache_n + 1) * sizeof(__mpfr_struct))
            self.cached = <char *>calloc(self.cache_n + 1, 1)
        self._log_factorial(self.l_n, self.nz)

    cdef void _init_beta(self, long b):
        mpfr_init2(self.lam, b); mpfr_init2(self.two_lam, b); mpfr_init2(self.mu, b)
        mpfr_init2(self.nu, b); mpfr_init2(self.log_p, b); mpfr_init2(self.log_q, b)
        mpfr_init2(self.log_alpha, b); mpfr_init2(self.half_b, b); mpfr_init2(self.u, b)
        mpfr_init2(self.au, b); mpfr_init2(self.d, b); mpfr_init2(self.x, b)
        mpfr_init2(self.hv, b); mpfr_init2(self.d2, b); mpfr_init2(self.lv, b)
        mpfr_init2(self.tmp, b); mpfr_init2(self.kf, b); mpfr_init2(self.lk, b)
        mpfr_init2(self.lnk, b); mpfr_init2(self.v, b); mpfr_init2(self.lb, b)
        mpfr_init2(self.l_n, b)

    cdef void _init_w(self, long w):
        mpfr_init2(self.gh, w); mpfr_init2(self.hl2pi, w); mpfr_init2(self.pi, w)
        mpfr_init2(self.ln2, w); mpfr_init2(self.one_w, w); mpfr_init2(self.four_w, w)
        mpfr_init2(self.half_w, w); mpfr_init2(self.y, w)
        mpfr_init2(self.aw, w); mpfr_init2(self.az, w); mpfr_init2(self.ad, w)
        mpfr_init2(self.ta, w); mpfr_init2(self.tb, w); mpfr_init2(self.res, w)
        mpfr_init2(self.lt, w); mpfr_init2(self.kk, w); mpfr_init2(self.tt, w)
        mpfr_init2(self.acc, w); mpfr_init2(self.den, w); mpfr_init2(self.q, w)
        mpfr_init2(self.kh, w); mpfr_init2(self.xw, w)

    def __dealloc__(self):
        cdef long i
        if not self.ready:
            return
        if self.cache != NULL:
            for i in range(self.cache_n + 1):
                if self.cached[i]:
                    mpfr_clear(&self.cache[i])
            free(self.cache)
            free(self.cached)
        if self.coeffs != NULL:
            for i in range(self.ncoef):
                mpfr_clear(&self.coeffs[i])
            free(self.coeffs)
        mpfr_clear(self.lam); mpfr_clear(self.two_lam); mpfr_clear(self.mu)
        mpfr_clear(self.nu); mpfr_clear(self.log_p); mpfr_clear(self.log_q)
        mpfr_clear(self.log_alpha); mpfr_clear(self.half_b); mpfr_clear(self.u)
        mpfr_clear(self.au); mpfr_clear(self.d); mpfr_clear(self.x)
        mpfr_clear(self.hv); mpfr_clear(self.d2); mpfr_clear(self.lv)
        mpfr_clear(self.tmp); mpfr_clear(self.kf); mpfr_clear(self.lk)
        mpfr_clear(self.lnk); mpfr_clear(self.v); mpfr_clear(self.lb)
        mpfr_clear(self.l_n)
        mpfr_clear(self.gh); mpfr_clear(self.hl2pi); mpfr_clear(self.pi)
        mpfr_clear(self.ln2); mpfr_clear(self.one_w); mpfr_clear(self.four_w)
        mpfr_clear(self.half_w); mpfr_clear(self.y)
        mpfr_clear(self.aw); mpfr_clear(self.az); mpfr_clear(self.ad)
        mpfr_clear(self.ta); mpfr_clear(self.tb); mpfr_clear(self.res)
        mpfr_clear(self.lt); mpfr_clear(self.kk); mpfr_clear(self.tt)
        mpfr_clear(self.acc); mpfr_clear(self.den); mpfr_clear(self.q)
        mpfr_clear(self.kh); mpfr_clear(self.xw)
        mpz_clear(self.nz); mpz_clear(self.kz); mpz_clear(self.nkz); mpz_clear(self.tz)

    cdef void _set(self, mpfr_ptr r, object pair):
        _z_from_py(self.tz, pair[0])
        mpfr_set_z_2exp(r, self.tz, <mpfr_exp_t>pair[1], MPFR_RNDN)

    cdef object _get(self, mpfr_ptr r):
        cdef mpfr_exp_t e
        if mpfr_zero_p(r):
            return (0, 0)
        e = mpfr_get_z_2exp(self.tz, r)
        m = _z_to_py(self.tz)
        tz = (m & -m).bit_length() - 1
        return (m >> tz, e + tz)

    # -- logarithm at w: r <- Log(x); x may have any precision <= w

    cdef void _agm(self):
        # in: aw = 1, az = y ; out: res
        cdef long c
        while True:
            mpfr_sub(self.ad, self.aw, self.az, MPFR_RNDN)
            if mpfr_zero_p(self.ad):
                mpfr_set(self.res, self.aw, MPFR_RNDN)
                return
            if mpfr_cmp(self.aw, self.az) < 0:
                c = mpfr_get_exp(self.aw)
            else:
                c = mpfr_get_exp(self.az)
            if mpfr_get_exp(self.ad) <= c - self.agm_tol - 1:
                break
            mpfr_add(self.ta, self.aw, self.az, MPFR_RNDN)
            mpfr_mul(self.tb, self.aw, self.az, MPFR_RNDN)
            mpfr_div_2ui(self.aw, self.ta, 1, MPFR_RNDN)
            mpfr_sqrt(self.az, self.tb, MPFR_RNDN)
        mpfr_add(self.res, self.aw, self.az, MPFR_RNDN)
        mpfr_div_2ui(self.res, self.res, 1, MPFR_RNDN)

    cdef void _log(self, mpfr_ptr r, mpfr_ptr x):
        cdef long m = self.agm_scale - mpfr_get_exp(x)
        # 4 / (x 2**m): rounding commutes with the exact power-of-two scale
        mpfr_div(self.y, self.four_w, x, MPFR_RNDN)
        mpfr_mul_2si(self.y, self.y, -m, MPFR_RNDN)
        mpfr_set(self.aw, self.one_w, MPFR_RNDN)
        mpfr_set(self.az, self.y, MPFR_RNDN)
        self._agm()
        mpfr_mul_2si(self.res, self.res, 1, MPFR_RNDN)
        mpfr_div(r, self.pi, self.res, MPFR_RNDN)
        if m != 0:
            mpfr_set_si(self.tb, m, MPFR_RNDN)
            mpfr_mul(self.tb, self.tb, self.ln2, MPFR_RNDN)
            mpfr_sub(r, r, self.tb, MPFR_RNDN)

    # -- log factorial, rounded to beta into r

    cdef void _log_factorial(self, mpfr_ptr r, mpz_t k):
        cdef long ki = -1
        cdef int i
        if self.cache != NULL:
            ki = mpz_get_si(k)
            if self.cached[ki]:
                mpfr_set(r, &self.cache[ki], MPFR_RNDN)
                return
        mpfr_set_z(self.kk, k, MPFR_RNDN)
        mpfr_add(self.tt, self.kk, self.gh, MPFR_RNDN)
        mpfr_set(self.acc, &self.coeffs[0], MPFR_RNDN)
        for i in range(1, self.ncoef):
            mpfr_add_ui(self.den, self.kk, i, MPFR_RNDN)
            mpfr_div(self.q, &self.coeffs[i], self.den, MPFR_RNDN)
            mpfr_add(self.acc, self.acc, self.q, MPFR_RNDN)
        mpfr_add(self.kh, self.kk, self.half_w, MPFR_RNDN)
        self._log(self.lt, self.tt)
        mpfr_mul(self.xw, self.kh, self.lt, MPFR_RNDN)
        mpfr_add(self.xw, self.hl2pi, self.xw, MPFR_RNDN)
        mpfr_sub(self.xw, self.xw, self.tt, MPFR_RNDN)
        self._log(self.lt, self.acc)
        mpfr_add(self.xw, self.xw, self.lt, MPFR_RNDN)
        mpfr_set(r, self.xw, MPFR_RNDN)
        if ki >= 0:
            mpfr_init2(&self.cache[ki], self.beta)
            mpfr_set(&self.cache[ki], r, MPFR_RNDN)
            self.cached[ki] = 1

    cdef void _log_beta(self, mpfr_ptr r, mpfr_ptr x):
        self._log(self.xw, x)
        mpfr_set(r, self.xw, MPFR_RNDN)

    cdef void _load_bits(self, mpfr_ptr r, object bits):
        if self.beta <= 64:
            mpfr_set_ui(r, <unsigned long>bits, MPFR_RNDN)
        else:
            _z_from_py(self.tz, bits)
            mpfr_set_z(r, self.tz, MPFR_RNDN)

    cpdef object trial(self, object ubits, object vbits):
        cdef long b = self.beta
        # u = ubits/2**b - 1/2 (exact), then H^{-1}(u) at beta bits
        self._load_bits(self.u, ubits)
        mpfr_div_2ui(self.u, self.u, b, MPFR_RNDN)
        mpfr_sub(self.u, self.u, self.half_b, MPFR_RNDN)
        mpfr_abs(self.au, self.u, MPFR_RNDN)
        mpfr_sub(self.d, self.half_b, self.au, MPFR_RNDN)
        mpfr_div(self.x, self.two_lam, self.d, MPFR_RNDN)
        mpfr_add(self.x, self.x, self.mu, MPFR_RNDN)
        mpfr_mul(self.x, self.x, self.u, MPFR_RNDN)
        mpfr_add(self.x, self.x, self.nu, MPFR_RNDN)
        mpfr_get_z(self.kz, self.x, MPFR_RNDD)
        if mpz_sgn(self.kz) < 0 or mpz_cmp(self.kz, self.nz) > 0:
            return -1
        mpfr_mul(self.d2, self.d, self.d, MPFR_RNDN)
        mpfr_div(self.hv, self.lam, self.d2, MPFR_RNDN)
        mpfr_add(self.hv, self.hv, self.mu, MPFR_RNDN)
        mpz_sub(self.nkz, self.nz, self.kz)
        self._log_factorial(self.lk, self.kz)
        self._log_factorial(self.lnk, self.nkz)
        mpfr_sub(self.lv, self.l_n, self.lk, MPFR_RNDN)
        mpfr_sub(self.lv, self.lv, self.lnk, MPFR_RNDN)
        mpfr_set_z(self.kf, self.kz, MPFR_RNDN)
        mpfr_mul(self.tmp, self.kf, self.log_p, MPFR_RNDN)
        mpfr_add(self.lv, self.lv, self.tmp, MPFR_RNDN)
        mpfr_set_z(self.kf, self.nkz, MPFR_RNDN)
        mpfr_mul(self.tmp, self.kf, self.log_q, MPFR_RNDN)
        mpfr_add(self.lv, self.lv, self.tmp, MPFR_RNDN)
        self._log_beta(self.lb, self.hv)
        mpfr_add(self.lv, self.lv, self.lb, MPFR_RNDN)
        mpfr_sub(self.lv, self.lv, self.log_alpha, MPFR_RNDN)
        self._load_bits(self.v, vbits)
        mpfr_div_2ui(self.v, self.v, b, MPFR_RNDN)
        self._log_beta(self.lb, self.v)
        if mpfr_cmp(self.lb, self.lv) <= 0:
            return _z_to_py(self.kz)
        return -1

    # -- test hooks

    def log_w_pair(self, man, exp):
        cdef mpfr_t x, r
        bits = max(abs(man).bit_length(), 2)
        mpfr_init2(x, bits)
        mpfr_init2(r, self.w)
        try:
            self._set(x, (man, exp))
            self._log(r, x)
            return self._get(r)
        finally:
            mpfr_clear(x)
            mpfr_clear(r)

    def log_factorial_pair(self, k):
        cdef mpfr_t r
        mpfr_init2(r, self.beta)
        try:
            _z_from_py(self.kz, k)
            self._log_factorial(r, self.kz)
            return self._get(r)
        finally:
            mpfr_clear(r)

    @property
    def l_n_pair(self):
        return self._get(self.l_n)
