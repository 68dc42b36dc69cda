# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled Airy evaluation kernel (long double complex scalar arithmetic).

Mirrors ``_airy_pure`` exactly: same series/asymptotic/connection split, same
dispatch radii, same error-estimate formulas, same method codes.  See that
module's docstring for the numerical design.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()

cdef extern from "math.h" nogil:
    long double expl(long double)
    long double sqrtl(long double)
    long double hypotl(long double, long double)
    long double cosl(long double)
    long double sinl(long double)
    long double fabsl(long double)
    long double atan2l(long double, long double)
    double sqrt(double)

cdef extern from "stdlib.h" nogil:
    long double strtold(const char *, char **)

ctypedef long double complex ldc

cdef ldc J = 1j

cdef long double AI0 = strtold(b"0.3550280538878172392600632", NULL)
cdef long double AIP0 = strtold(b"-0.2588194037928067984051836", NULL)
cdef long double PI_L = strtold(b"3.14159265358979323846264338", NULL)
cdef long double EPS_LD = <long double> 1.0842021724855044e-19
cdef double EPS_D = 2.220446049250313e-16
cdef long double HALF_INV_SQRT_PI = <long double> 0.5 / sqrtl(PI_L)

cdef double R_LO = 6.0
cdef double R_HI = 9.0
cdef double TWO_THIRDS_PI = 2.0943951023931953

DEF METHOD_SERIES = 1
DEF METHOD_ASYMPTOTIC = 2


cdef inline long double cabs_l(ldc z) nogil:
    return hypotl(z.real, z.imag)


cdef inline ldc cexp_l(ldc z) nogil:
    cdef long double m = expl(z.real)
    return m * cosl(z.imag) + J * (m * sinl(z.imag))


cdef inline ldc csqrt_l(ldc z) nogil:
    cdef long double r = cabs_l(z)
    cdef long double t
    if r == 0.0:
        return 0.0 + J * 0.0
    if z.real >= 0.0:
        t = sqrtl((r + z.real) * 0.5)
        return t + J * (z.imag / (2.0 * t))
    t = sqrtl((r - z.real) * 0.5)
    if z.imag >= 0.0:
        return fabsl(z.imag) / (2.0 * t) + J * t
    return fabsl(z.imag) / (2.0 * t) - J * t


cdef int _series_eval(ldc z, ldc *val, ldc *dval, double *err) nogil:
    cdef ldc z3 = z * z * z
    cdef ldc F = 1.0 + J * 0.0
    cdef ldc G = z
    cdef ldc P = z * z / 2.0
    cdef ldc Q = 1.0 + J * 0.0
    cdef ldc Sf = F, Sg = G, Sfp = P, Sgp = Q
    cdef long double abs_f = cabs_l(F)
    cdef long double abs_g = cabs_l(G)
    cdef long double abs_fp = cabs_l(P)
    cdef long double abs_gp = cabs_l(Q)
    cdef long double mx = 1.0
    cdef long double tk, tj
    cdef int k
    for k in range(220):
        tk = <long double> (3 * k)
        F = F * z3 / ((tk + 2.0) * (tk + 3.0))
        G = G * z3 / ((tk + 3.0) * (tk + 4.0))
        Q = Q * z3 / ((tk + 1.0) * (tk + 3.0))
        tj = <long double> (3 * (k + 1))
        P = P * z3 / (tj * (tj + 2.0))
        Sf = Sf + F
        Sg = Sg + G
        Sfp = Sfp + P
        Sgp = Sgp + Q
        abs_f += cabs_l(F)
        abs_g += cabs_l(G)
        abs_fp += cabs_l(P)
        abs_gp += cabs_l(Q)
        mx = cabs_l(F)
        if cabs_l(G) > mx:
            mx = cabs_l(G)
        if cabs_l(P) > mx:
            mx = cabs_l(P)
        if cabs_l(Q) > mx:
            mx = cabs_l(Q)
        if mx < 1e-3 * EPS_LD * (abs_f + abs_g + abs_fp + abs_gp) + 1e-300:
            break
    cdef long double a1 = fabsl(AI0)
    cdef long double a2 = fabsl(AIP0)
    val[0] = AI0 * Sf + AIP0 * Sg
    dval[0] = AI0 * Sfp + AIP0 * Sgp
    cdef double tail = 2.0 * <double> mx
    cdef double round_v = 16.0 * <double> (EPS_LD * (a1 * abs_f + a2 * abs_g))
    cdef double round_d = 16.0 * <double> (EPS_LD * (a1 * abs_fp + a2 * abs_gp))
    cdef double down = <double> cabs_l(val[0])
    if <double> cabs_l(dval[0]) > down:
        down = <double> cabs_l(dval[0])
    err[0] = (round_v if round_v > round_d else round_d) + tail + 4.0 * EPS_D * down
    return 0


cdef int _asym_eval(ldc z, ldc *val, ldc *dval, double *err) nogil:
    cdef ldc sq = csqrt_l(z)
    cdef ldc zeta = (2.0 / <long double> 3.0) * z * sq
    cdef ldc q = (-1.0 + J * 0.0) / zeta
    cdef ldc s_v = 1.0 + J * 0.0
    cdef ldc s_d = 1.0 + J * 0.0
    cdef ldc tu = 1.0 + J * 0.0
    cdef ldc tv
    cdef double min_term = 1.0
    cdef double abs_sum = 1.0
    cdef double mag
    cdef long double kk
    cdef int k
    for k in range(1, 80):
        kk = <long double> k
        tu = tu * ((6.0 * kk - 5.0) * (6.0 * kk - 3.0) * (6.0 * kk - 1.0)) / (
            (2.0 * kk - 1.0) * 216.0 * kk
        ) * q
        tv = tu * (6.0 * kk + 1.0) / (1.0 - 6.0 * kk)
        mag = <double> cabs_l(tu)
        if mag >= min_term:
            break
        min_term = mag
        s_v = s_v + tu
        s_d = s_d + tv
        abs_sum += mag
        if mag < 1e-25:
            break
    cdef ldc quarter = csqrt_l(sq)
    cdef ldc decay = cexp_l(-zeta)
    cdef ldc pref_v = (HALF_INV_SQRT_PI + J * 0.0) / quarter * decay
    cdef ldc pref_d = -(HALF_INV_SQRT_PI + J * 0.0) * quarter * decay
    val[0] = pref_v * s_v
    dval[0] = pref_d * s_d
    cdef double scale = <double> cabs_l(pref_v)
    if <double> cabs_l(pref_d) > scale:
        scale = <double> cabs_l(pref_d)
    cdef double infl = 2.0 + 2.0 * sqrt(<double> k)
    cdef double phase = <double> fabsl(zeta.imag)
    cdef double down = <double> cabs_l(val[0])
    if <double> cabs_l(dval[0]) > down:
        down = <double> cabs_l(dval[0])
    err[0] = scale * (
        infl * min_term + (8.0 + 6.0 * phase) * <double> EPS_LD * abs_sum
    ) + 4.0 * EPS_D * down
    return 0


cdef ldc OMEGA = -0.5 + J * 0.86602540378443864676
cdef ldc OMEGA_BAR = -0.5 - J * 0.86602540378443864676


cdef int _connect_eval(ldc z, ldc *val, ldc *dval, double *err) nogil:
    cdef ldc a1, d1, a2, d2
    cdef double e1, e2
    _asym_eval(z * OMEGA, &a1, &d1, &e1)
    _asym_eval(z * OMEGA_BAR, &a2, &d2, &e2)
    val[0] = -OMEGA * a1 - OMEGA_BAR * a2
    dval[0] = -(OMEGA * OMEGA) * d1 - OMEGA * d2
    err[0] = e1 + e2 + 64.0 * EPS_D * <double> (
        cabs_l(a1) + cabs_l(a2) + cabs_l(d1) + cabs_l(d2)
    )
    return 0


cdef int _eval_scalar(ldc z, ldc *val, ldc *dval, double *err) nogil:
    cdef double r = <double> cabs_l(z)
    cdef double ph = <double> atan2l(z.imag, z.real)
    cdef ldc v1, d1, v2, d2
    cdef double e1, e2
    cdef int meth
    if r <= R_LO:
        _series_eval(z, val, dval, err)
        meth = METHOD_SERIES
    elif r >= R_HI:
        if ph <= TWO_THIRDS_PI and ph >= -TWO_THIRDS_PI:
            _asym_eval(z, val, dval, err)
        else:
            _connect_eval(z, val, dval, err)
        meth = METHOD_ASYMPTOTIC
    else:
        _series_eval(z, &v1, &d1, &e1)
        if ph <= TWO_THIRDS_PI and ph >= -TWO_THIRDS_PI:
            _asym_eval(z, &v2, &d2, &e2)
        else:
            _connect_eval(z, &v2, &d2, &e2)
        if e1 <= e2:
            val[0] = v1
            dval[0] = d1
            err[0] = e1
            meth = METHOD_SERIES
        else:
            val[0] = v2
            dval[0] = d2
            err[0] = e2
            meth = METHOD_ASYMPTOTIC
    if z.imag == 0.0:
        val[0] = val[0].real + J * 0.0
        dval[0] = dval[0].real + J * 0.0
    return meth


def eval_one(z):
    """Evaluate (Ai(z), Ai'(z), est_abs_err, method) at one complex point."""
    cdef double complex zd = z
    cdef ldc zl = <long double> zd.real + J * <long double> zd.imag
    cdef ldc v, d
    cdef double e
    cdef int m = _eval_scalar(zl, &v, &d, &e)
    return complex(<double> v.real, <double> v.imag), complex(<double> d.real, <double> d.imag), e, m


def eval_grid(zs):
    """Vectorized evaluation; returns (values, derivatives, errors, methods)."""
    zarr = np.ascontiguousarray(np.asarray(zs, dtype=np.complex128))
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] flat = zarr.ravel()
    cdef Py_ssize_t n = flat.shape[0]
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] vals = np.empty(n, dtype=np.complex128)
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] dvals = np.empty(n, dtype=np.complex128)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] errs = np.empty(n, dtype=np.float64)
    cdef cnp.ndarray[cnp.uint8_t, ndim=1] meths = np.empty(n, dtype=np.uint8)
    cdef Py_ssize_t i
    cdef ldc zl, v, d
    cdef double e
    cdef double complex zd
    for i in range(n):
        zd = flat[i]
        zl = <long double> zd.real + J * <long double> zd.imag
        meths[i] = <unsigned char> _eval_scalar(zl, &v, &d, &e)
        vals[i] = <double complex> (<double> v.real + 1j * <double> v.imag)
        dvals[i] = <double complex> (<double> d.real + 1j * <double> d.imag)
        errs[i] = e
    shape = np.asarray(zs, dtype=np.complex128).shape
    return (
        vals.reshape(shape),
        dvals.reshape(shape),
        errs.reshape(shape),
        meths.reshape(shape),
    )
