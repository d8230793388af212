# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled numerical kernels.

Mirrors :mod:`prpqkd._purecore` operation for operation; see that module for the
random stream layout. Both kernels release the GIL.
"""

from libc.math cimport cos, erfc, exp, fabs, log, sqrt
from libc.stdint cimport int64_t, uint32_t, uint64_t
from libc.stdlib cimport free, malloc

NAME = "compiled"

cdef double HALF_PI = 1.5707963267948966
cdef double TWO_PI = 6.283185307179586
cdef double SQRT2 = 1.4142135623730951
cdef double SQRT_2_OVER_PI = 0.7978845608028654

cdef double XGK[8]
XGK[:] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
]
cdef double WGK[8]
WGK[:] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
]
cdef double WG[4]
WG[:] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
]


cdef inline double _point(int kind, double x, double mean, double kappa) noexcept nogil:
    cdef double d
    if kind == 0:
        d = x - mean
        return SQRT_2_OVER_PI / kappa * exp(-2.0 * d * d / (kappa * kappa))
    if kind == 1:
        return 0.5 * erfc(SQRT2 * (x - mean) / kappa)
    return 0.5 * erfc(SQRT2 * (mean - x) / kappa)


cdef void _gk15(int kind, double x, double phase, double amp, double kappa, double delta,
                double a, double b, double* val, double* err) noexcept nogil:
    cdef double half = 0.5 * (b - a)
    cdef double centre = 0.5 * (a + b)
    cdef double fc = _point(kind, x, amp * cos(phase + delta * centre), kappa)
    cdef double resk = fc * WGK[7]
    cdef double resg = fc * WG[3]
    cdef double dx, f1, f2
    cdef int j
    for j in range(7):
        dx = half * XGK[j]
        f1 = _point(kind, x, amp * cos(phase + delta * (centre - dx)), kappa)
        f2 = _point(kind, x, amp * cos(phase + delta * (centre + dx)), kappa)
        resk += WGK[j] * (f1 + f2)
        if j % 2 == 1:
            resg += WG[j // 2] * (f1 + f2)
    val[0] = resk * half
    err[0] = fabs((resk - resg) * half)


def theta_average(int kind, double x, double phase, double amp, double kappa,
                  double delta, double abs_tol, int max_sub):
    """See :func:`prpqkd._purecore.theta_average`."""
    cdef double v, e, v1, e1, v2, e2, total_val, total_err, m
    cdef int n, j, worst
    cdef bint ok = True
    if delta == 0.0:
        return _point(kind, x, amp * cos(phase), kappa), 0.0, True
    cdef double* lo = <double*> malloc(max_sub * sizeof(double))
    cdef double* hi = <double*> malloc(max_sub * sizeof(double))
    cdef double* vals = <double*> malloc(max_sub * sizeof(double))
    cdef double* errs = <double*> malloc(max_sub * sizeof(double))
    if lo == NULL or hi == NULL or vals == NULL or errs == NULL:
        free(lo); free(hi); free(vals); free(errs)
        raise MemoryError()
    with nogil:
        _gk15(kind, x, phase, amp, kappa, delta, 0.0, 1.0, &v, &e)
        lo[0] = 0.0; hi[0] = 1.0; vals[0] = v; errs[0] = e
        n = 1
        total_val = v
        total_err = e
        while total_err > abs_tol:
            if n >= max_sub:
                ok = False
                break
            worst = 0
            for j in range(1, n):
                if errs[j] > errs[worst]:
                    worst = j
            m = 0.5 * (lo[worst] + hi[worst])
            _gk15(kind, x, phase, amp, kappa, delta, lo[worst], m, &v1, &e1)
            _gk15(kind, x, phase, amp, kappa, delta, m, hi[worst], &v2, &e2)
            lo[n] = m; hi[n] = hi[worst]; vals[n] = v2; errs[n] = e2
            hi[worst] = m; vals[worst] = v1; errs[worst] = e1
            n += 1
            total_val = 0.0
            total_err = 0.0
            for j in range(n):
                total_val += vals[j]
                total_err += errs[j]
    free(lo); free(hi); free(vals); free(errs)
    return total_val, total_err, ok


cdef uint64_t MASK32 = 0xFFFFFFFF
cdef uint64_t M0 = 0xD2511F53
cdef uint64_t M1 = 0xCD9E8D57
cdef uint32_t W0 = 0x9E3779B9
cdef uint32_t W1 = 0xBB67AE85


cdef inline void _philox(uint64_t* c, uint32_t k0, uint32_t k1) noexcept nogil:
    cdef uint64_t p0, p1, n0, n2
    cdef int r
    for r in range(10):
        p0 = M0 * c[0]
        p1 = M1 * c[2]
        n0 = (p1 >> 32) ^ c[1] ^ k0
        n2 = (p0 >> 32) ^ c[3] ^ k1
        c[0] = n0
        c[1] = p1 & MASK32
        c[2] = n2
        c[3] = p0 & MASK32
        k0 = k0 + W0
        k1 = k1 + W1


def philox4x32(uint64_t c0, uint64_t c1, uint64_t c2, uint64_t c3, uint64_t k0, uint64_t k1):
    """Single Philox4x32-10 block; for known-answer tests."""
    cdef uint64_t c[4]
    c[0] = c0 & MASK32; c[1] = c1 & MASK32
    c[2] = c2 & MASK32; c[3] = c3 & MASK32
    _philox(c, <uint32_t>(k0 & MASK32), <uint32_t>(k1 & MASK32))
    return c[0], c[1], c[2], c[3]


cdef inline double _unit(uint64_t a, uint64_t b) noexcept nogil:
    return (<double>(a >> 5) * 67108864.0 + <double>(b >> 6)) * (1.0 / 9007199254740992.0)


def mc_tally(uint64_t seed, uint64_t start, uint64_t n, double amp, double kappa,
             double delta, double x_th, int phase_index):
    """See :func:`prpqkd._purecore.mc_tally`."""
    cdef uint32_t k0 = <uint32_t>(seed & MASK32)
    cdef uint32_t k1 = <uint32_t>(seed >> 32)
    cdef uint64_t a[4]
    cdef uint64_t b[4]
    cdef uint64_t i, idx
    cdef int64_t n_plus = 0, n_minus = 0, n_err = 0
    cdef int m, alice, eve, coin
    cdef double u1, u2, u3, theta, mean, z, x
    cdef bint plus, minus
    with nogil:
        for i in range(n):
            idx = start + i
            a[0] = idx & MASK32; a[1] = idx >> 32; a[2] = 0; a[3] = 0
            b[0] = a[0]; b[1] = a[1]; b[2] = 1; b[3] = 0
            _philox(a, k0, k1)
            _philox(b, k0, k1)
            u1 = _unit(a[0], a[1])
            u2 = _unit(a[2], a[3])
            u3 = _unit(b[0], b[1])
            alice = <int>(b[2] & 3)
            eve = <int>((b[2] >> 2) & 1)
            coin = <int>((b[2] >> 3) & 1)
            if phase_index < 0:
                m = (alice - eve) & 3
            else:
                m = phase_index
            theta = delta * u3
            mean = amp * cos(<double>m * HALF_PI + theta)
            z = sqrt(-2.0 * log(1.0 - u1)) * cos(TWO_PI * u2)
            x = mean + 0.5 * kappa * z
            plus = x >= x_th
            minus = (not plus) and x <= -x_th
            if plus:
                n_plus += 1
                if m == 2 or ((m & 1) == 1 and coin):
                    n_err += 1
            elif minus:
                n_minus += 1
                if m == 0 or ((m & 1) == 1 and coin):
                    n_err += 1
    return n_plus, n_minus, n_err
