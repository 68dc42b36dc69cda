"""Pure NumPy implementation of the Airy evaluation kernel.

Scalar evaluations accumulate in ``np.clongdouble`` (80-bit extended on
x86-64) so that the power series survives the cancellation it suffers for
moderately large ``|z|``, and the asymptotic expansion can be pushed to
optimal truncation.  A Cython twin (``_airy_core``) implements the same entry
points; ``airylayer.airy`` picks whichever imports.

Every evaluation returns ``(value, derivative, est_abs_err, method)`` where
``est_abs_err`` is an honest absolute-error bound covering both the value and
the derivative, and ``method`` is 1 for the power series and 2 for the
asymptotic expansion (including its connection-formula continuation).
"""

import numpy as np

# Ai(0) = 3**(-2/3)/Gamma(2/3), Ai'(0) = -3**(-1/3)/Gamma(1/3), 25 digits.
_AI0 = np.longdouble("0.3550280538878172392600632")
_AIP0 = np.longdouble("-0.2588194037928067984051836")

_EPS_LD = float(np.finfo(np.longdouble).eps)
_EPS_D = float(np.finfo(np.float64).eps)

# Dispatch radii: series everywhere below R_LO, asymptotic machinery above
# R_HI, both in between with the smaller estimated error winning.
R_LO = 6.0
R_HI = 9.0

_TWO_THIRDS_PI = 2.0 * np.pi / 3.0

METHOD_SERIES = 1
METHOD_ASYMPTOTIC = 2

_OMEGA = np.clongdouble(np.cos(np.longdouble(2) * np.pi / 3)) + 1j * np.clongdouble(
    np.sin(np.longdouble(2) * np.pi / 3)
)
_OMEGA_BAR = np.conj(_OMEGA)

_HALF_INV_SQRT_PI = np.longdouble(0.5) / np.sqrt(np.longdouble(np.pi))


def _series_eval(z):
    """Maclaurin series of Ai and Ai' about 0, 80-bit accumulation.

    Works with the two classic solution chains f, g of w'' = z w.  Each chain
    has terms of a single sign pattern in |z|, so the only cancellation is in
    the final linear combination; the error estimate tracks the per-chain
    absolute sums to account for it.
    """
    zl = np.clongdouble(z)
    z3 = zl * zl * zl

    # Term k of each chain; recurrences verified against 3^k (a)_k z^.../(...)!
    F = np.clongdouble(1.0)          # f:  F_{k+1} = F_k z^3/((3k+2)(3k+3))
    G = zl                           # g:  G_{k+1} = G_k z^3/((3k+3)(3k+4))
    P = zl * zl / np.clongdouble(2)  # f': P_{k+1} = P_k z^3/((3k)(3k+2)), k>=1
    Q = np.clongdouble(1.0)          # g': Q_{k+1} = Q_k z^3/((3k+1)(3k+3))

    Sf, Sg, Sfp, Sgp = F, G, P, Q
    abs_f = abs(F)
    abs_g = abs(G)
    abs_fp = abs(P)
    abs_gp = abs(Q)

    mx = np.longdouble(1.0)
    for k in range(220):
        tk = np.longdouble(3 * k)
        F = F * z3 / ((tk + 2.0) * (tk + 3.0))
        G = G * z3 / ((tk + 3.0) * (tk + 4.0))
        Q = Q * z3 / ((tk + 1.0) * (tk + 3.0))
        tj = np.longdouble(3 * (k + 1))
        P = P * z3 / (tj * (tj + 2.0))
        Sf = Sf + F
        Sg = Sg + G
        Sfp = Sfp + P
        Sgp = Sgp + Q
        abs_f += abs(F)
        abs_g += abs(G)
        abs_fp += abs(P)
        abs_gp += abs(Q)
        mx = max(abs(F), abs(G), abs(P), abs(Q))
        if float(mx) < 1e-3 * _EPS_LD * float(abs_f + abs_g + abs_fp + abs_gp) + 1e-300:
            break

    c1 = np.clongdouble(_AI0)
    c2 = np.clongdouble(_AIP0)
    val = c1 * Sf + c2 * Sg
    dval = c1 * Sfp + c2 * Sgp
    a1 = float(abs(c1))
    a2 = float(abs(c2))
    tail = 2.0 * float(mx)
    # Term-recurrence rounding grows ~ linearly in the term index; a uniform
    # factor 16 covers the k-weighted average for every |z| the series serves.
    round_v = 16.0 * _EPS_LD * (a1 * float(abs_f) + a2 * float(abs_g))
    round_d = 16.0 * _EPS_LD * (a1 * float(abs_fp) + a2 * float(abs_gp))
    down = 4.0 * _EPS_D * max(float(abs(val)), float(abs(dval)))
    return complex(val), complex(dval), max(round_v, round_d) + tail + down


def _asym_eval(z):
    """Large-|z| expansion in the principal sector, optimally truncated.

    Ai(z)  ~  e^{-zeta} / (2 sqrt(pi) z^{1/4}) * sum u_k (-1/zeta)^k,
    Ai'(z) ~ -z^{1/4} e^{-zeta} / (2 sqrt(pi)) * sum v_k (-1/zeta)^k,
    zeta = (2/3) z^{3/2}.  Summation stops at the smallest term, whose size
    dominates the error estimate.
    """
    zl = np.clongdouble(z)
    sq = np.sqrt(zl)
    zeta = np.clongdouble(2.0) / 3.0 * zl * sq
    q = np.clongdouble(-1.0) / zeta

    s_v = np.clongdouble(1.0)
    s_d = np.clongdouble(1.0)
    tu = np.clongdouble(1.0)
    min_term = 1.0
    abs_sum = 1.0
    for k in range(1, 80):
        kk = np.longdouble(k)
        tu = tu * ((6.0 * kk - 5.0) * (6.0 * kk - 3.0) * (6.0 * kk - 1.0)) / (
            (2.0 * kk - 1.0) * 216.0 * kk
        ) * q
        tv = tu * (6.0 * kk + 1.0) / (1.0 - 6.0 * kk)
        mag = float(abs(tu))
        if mag >= min_term:
            break
        min_term = mag
        s_v = s_v + tu
        s_d = s_d + tv
        abs_sum += mag
        if mag < 1e-25:
            break

    quarter = np.sqrt(sq)
    decay = np.exp(-zeta)
    pref_v = _HALF_INV_SQRT_PI / quarter * decay
    pref_d = -_HALF_INV_SQRT_PI * quarter * decay
    val = pref_v * s_v
    dval = pref_d * s_d
    scale = max(float(abs(pref_v)), float(abs(pref_d)))
    # Remainder ~ smallest term, inflated by the standard sqrt(N) factor that
    # the oblique-sector bounds carry, plus phase rounding of exp(-zeta)
    # (~|Im zeta| ulps) and the float64 downcast.
    infl = 2.0 + 2.0 * np.sqrt(float(k))
    phase = abs(float(zeta.imag))
    err = scale * (
        infl * min_term + (8.0 + 6.0 * phase) * _EPS_LD * abs_sum
    ) + 4.0 * _EPS_D * max(float(abs(val)), float(abs(dval)))
    return complex(val), complex(dval), err


def _connect_eval(z):
    """Continue the asymptotic evaluation across |arg z| > 2*pi/3.

    Uses Ai(z) + omega Ai(omega z) + omega^2 Ai(omega^2 z) = 0 with
    omega = e^{2i pi/3}; both rotated arguments land in the principal sector
    where the direct expansion holds.
    """
    zl = np.clongdouble(z)
    a1, d1, e1 = _asym_eval(zl * _OMEGA)
    a2, d2, e2 = _asym_eval(zl * _OMEGA_BAR)
    om = complex(_OMEGA)
    omb = complex(_OMEGA_BAR)
    val = -om * a1 - omb * a2
    dval = -(om * om) * d1 - om * d2
    err = e1 + e2 + 64.0 * _EPS_D * (abs(a1) + abs(a2) + abs(d1) + abs(d2))
    return val, dval, err


def eval_one(z):
    """Evaluate (Ai(z), Ai'(z), est_abs_err, method) at one complex point."""
    z = complex(z)
    r = abs(z)
    if r <= R_LO:
        v, d, e = _series_eval(z)
        meth = METHOD_SERIES
    else:
        principal = abs(np.angle(z)) <= _TWO_THIRDS_PI
        if r >= R_HI:
            v, d, e = _asym_eval(z) if principal else _connect_eval(z)
            meth = METHOD_ASYMPTOTIC
        else:
            v1, d1, e1 = _series_eval(z)
            v2, d2, e2 = _asym_eval(z) if principal else _connect_eval(z)
            if e1 <= e2:
                v, d, e, meth = v1, d1, e1, METHOD_SERIES
            else:
                v, d, e, meth = v2, d2, e2, METHOD_ASYMPTOTIC
    if z.imag == 0.0:
        v = complex(v.real, 0.0)
        d = complex(d.real, 0.0)
    return v, d, e, meth


def eval_grid(zs):
    """Vectorized wrapper over eval_one.

    Returns (values, derivatives, est_abs_errs, method_codes) as arrays.
    """
    zs = np.asarray(zs, dtype=complex)
    flat = zs.ravel()
    vals = np.empty(flat.shape, dtype=complex)
    dvals = np.empty(flat.shape, dtype=complex)
    errs = np.empty(flat.shape, dtype=float)
    meths = np.empty(flat.shape, dtype=np.uint8)
    for i, z in enumerate(flat):
        v, d, e, m = eval_one(z)
        vals[i] = v
        dvals[i] = d
        errs[i] = e
        meths[i] = m
    return (
        vals.reshape(zs.shape),
        dvals.reshape(zs.shape),
        errs.reshape(zs.shape),
        meths.reshape(zs.shape),
    )
