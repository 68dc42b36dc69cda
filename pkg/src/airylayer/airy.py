"""Airy function kernel: certified evaluation, zeros, and moments.

The evaluator returns per-point error estimates and method tags; zeros are
certified by sign changes; moments carry a quadrature error bound.  The
heavy scalar kernels live in ``_airy_core`` (Cython, long double) with a pure
NumPy twin ``_airy_pure``; whichever imports is used, and the choice is
exposed as ``BACKEND``.

Conventions: Ai is the standard recessive Airy function, entire on C.  The
n-th real zero mu_n < 0 of Ai is indexed from n = 1 (mu_1 ~ -2.3381).
Moments are M_p(n) = integral_0^infty x^p Ai(x + mu_n)^2 dx.
"""

from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from .errors import AccuracyError, CapabilityError

try:  # compiled long-double kernel, optional
    from . import _airy_core as _impl

    BACKEND = "cython"
except ImportError:  # pragma: no cover - environment dependent
    from . import _airy_pure as _impl

    BACKEND = "pure"

# Contract: est_abs_err <= CONTRACT_ERR inside |z| <= CONTRACT_RADIUS.
CONTRACT_RADIUS = 30.0
CONTRACT_ERR = 1e-12

ZERO_MAX = 64

_METHOD_NAMES = {1: "power-series", 2: "asymptotic"}


@dataclass(frozen=True)
class AiryEval:
    """One certified evaluation of Ai and Ai'.

    est_abs_err bounds the absolute error of both value and derivative.
    method is "power-series" or "asymptotic" (the latter includes the
    connection-formula continuation outside the principal sector).
    """

    value: complex
    derivative: complex
    method: str
    est_abs_err: float


def ai(z) -> AiryEval:
    """Evaluate Ai(z) and Ai'(z) with an honest absolute error estimate."""
    z = complex(z)
    if not np.isfinite(z):
        raise ValueError(f"ai expects a finite argument, got {z!r}")
    v, d, e, m = _impl.eval_one(z)
    if not (np.isfinite(v) and np.isfinite(d) and np.isfinite(e)):
        raise CapabilityError(
            f"Ai({z}) exceeds representable range (growing sector overflow)"
        )
    return AiryEval(value=v, derivative=d, method=_METHOD_NAMES[int(m)], est_abs_err=e)


def ai_many(zs):
    """Vectorized evaluation: returns (values, derivatives, errors, methods)."""
    return _impl.eval_grid(zs)


def _zero_seed(n: int) -> float:
    # Large-n expansion of the n-th zero; already 1e-3 accurate at n=1.
    t = 3.0 * np.pi * (4 * n - 1) / 8.0
    t2 = t * t
    return -(t ** (2.0 / 3.0)) * (
        1.0 + 5.0 / 48.0 / t2 - 5.0 / 36.0 / t2**2 + 77125.0 / 82944.0 / t2**3
    )


def _ai_real(x: float) -> float:
    return _impl.eval_one(complex(x))[0].real


_zero_cache: dict[int, float] = {}


def ai_zero(n: int) -> float:
    """n-th real zero of Ai (negative), certified by a sign change.

    Bisection inside a bracketed sign change, then Newton polish; the result
    is certified by checking Ai flips sign across [mu - 1e-9, mu + 1e-9] with
    margin over the evaluation error bound.
    """
    if not isinstance(n, (int, np.integer)) or n < 1:
        raise ValueError(f"zero index must be a positive integer, got {n!r}")
    if n > ZERO_MAX:
        raise CapabilityError(f"zero index {n} exceeds supported maximum {ZERO_MAX}")
    if n in _zero_cache:
        return _zero_cache[n]

    seed = _zero_seed(n)
    half = 0.02
    lo, hi = seed - half, seed + half
    flo, fhi = _ai_real(lo), _ai_real(hi)
    while flo * fhi > 0.0:
        half *= 2.0
        if half > 0.16:
            raise AccuracyError(f"no sign change bracketing zero {n} near {seed}")
        lo, hi = seed - half, seed + half
        flo, fhi = _ai_real(lo), _ai_real(hi)

    for _ in range(50):
        mid = 0.5 * (lo + hi)
        fm = _ai_real(mid)
        if flo * fm <= 0.0:
            hi, fhi = mid, fm
        else:
            lo, flo = mid, fm
        if hi - lo < 1e-12:
            break
    mu = 0.5 * (lo + hi)
    for _ in range(3):
        ev = ai(mu)
        mu -= (ev.value.real) / ev.derivative.real

    left, right = ai(mu - 1e-9), ai(mu + 1e-9)
    ok = (
        left.value.real * right.value.real < 0.0
        and abs(left.value.real) > 3.0 * left.est_abs_err
        and abs(right.value.real) > 3.0 * right.est_abs_err
    )
    if not ok:
        raise AccuracyError(f"sign-change certification failed for zero {n} at {mu}")
    _zero_cache[n] = float(mu)
    return float(mu)


@dataclass(frozen=True)
class AiryZeroTable:
    """First n_max certified zeros of Ai, most negative last."""

    zeros: tuple
    count: int


def zero_table(n_max: int) -> AiryZeroTable:
    return AiryZeroTable(zeros=tuple(ai_zero(k) for k in range(1, n_max + 1)), count=n_max)


MOMENT_P_MAX = 12

_moment_cache: dict[tuple, float] = {}


def airy_moment(p: int, n: int) -> float:
    """M_p(n) = integral_0^infty x^p Ai(x + mu_n)^2 dx, rel. error <= 1e-10.

    Adaptive Gauss-Kronrod quadrature on the shifted axis; the integrand
    decays like exp(-(4/3) y^{3/2}) so a fixed cut at y = 18 leaves a tail
    far below the tolerance for all p <= 12.
    """
    if p < 0:
        raise ValueError(f"moment order must be nonnegative, got {p}")
    if p > MOMENT_P_MAX:
        raise CapabilityError(f"moment order p={p} exceeds supported maximum {MOMENT_P_MAX}")
    key = (int(p), int(n))
    if key in _moment_cache:
        return _moment_cache[key]
    mu = ai_zero(n)

    def integrand(y):
        return (y - mu) ** p * _ai_real(y) ** 2

    val, err = quad(integrand, mu, 18.0, epsabs=1e-300, epsrel=1e-12, limit=400)
    if val <= 0.0 and p % 1 == 0:
        raise AccuracyError(f"moment M_{p}({n}) came out non-positive: {val}")
    if err / abs(val) > 1e-10:
        raise AccuracyError(
            f"moment M_{p}({n}) quadrature error {err:.2e} exceeds 1e-10 relative"
        )
    _moment_cache[key] = float(val)
    return float(val)
