"""Airy kernel tests: certified evaluation, zeros, moments.

Oracle values are frozen here as literals.  Where an independent oracle is
named, it is recomputed live (mpmath at 30 digits, scipy's zero table, the
closed-form antiderivative identities) and must agree with the frozen value
before the implementation is compared against it.
"""

import numpy as np
import pytest

import mpmath as mp
from scipy.integrate import quad
from scipy.special import ai_zeros

from airylayer import ai, ai_zero, airy_moment
from airylayer.airy import (
    BACKEND,
    CONTRACT_ERR,
    CONTRACT_RADIUS,
    ZERO_MAX,
    ai_many,
    zero_table,
)
from airylayer.errors import CapabilityError

mp.mp.dps = 30

# ---------------------------------------------------------------------------
# frozen oracle constants

# Classical series constants Ai(0) = 3^{-2/3}/Gamma(2/3), Ai'(0) = -3^{-1/3}/Gamma(1/3).
AI_AT_0 = 0.3550280538878172392600632
AIP_AT_0 = -0.2588194037928067984051836

# First zeros, frozen from the certified bisection run; scipy cross-checks below.
MU = {
    1: -2.338107410459767,
    2: -4.087949444130970,
    3: -5.520559828095551,
    4: -6.786708090071759,
}

# Moments M_p(1) = integral_0^inf x^p Ai(x + mu_1)^2 dx, frozen from the
# quadrature run; the p = 0, 1 values have closed forms checked below.
M0_1 = 0.4916966179006289
M1_1 = 0.7664263373409768
M2_1 = 1.4335896791267797


def _mp_ai(z):
    v = mp.airyai(mp.mpc(z.real, z.imag))
    d = mp.airyai(mp.mpc(z.real, z.imag), derivative=1)
    return complex(v), complex(d)


# ---------------------------------------------------------------------------
# evaluation


def test_value_at_zero_matches_series_constant():
    ev = ai(0.0)
    assert ev.method == "power-series"
    assert abs(ev.value - AI_AT_0) < 1e-16
    assert abs(ev.derivative - AIP_AT_0) < 1e-16
    # independent oracle
    v, d = _mp_ai(0j)
    assert abs(complex(v) - AI_AT_0) < 1e-16
    assert abs(complex(d) - AIP_AT_0) < 1e-16


def test_value_at_first_zero_vanishes():
    ev = ai(MU[1])
    assert abs(ev.value) <= 1e-12


def test_large_real_argument_matches_leading_asymptotics():
    z = 10.0
    lead = np.exp(-(2.0 / 3.0) * z**1.5) / (2.0 * np.sqrt(np.pi) * z**0.25)
    ev = ai(z)
    assert ev.method == "asymptotic"
    assert abs(ev.value - lead) / lead < 1e-2


def test_estimates_within_contract_radius():
    # scale-relative contract: est <= 1e-12 * max(1, |Ai|, |Ai'|); absolute
    # wherever Ai is bounded (the whole decay sector and oscillatory rays)
    rng = np.random.default_rng(20240517)
    rad = np.sqrt(rng.uniform(0.0, 1.0, 300)) * CONTRACT_RADIUS
    ang = rng.uniform(-np.pi, np.pi, 300)
    zs = rad * np.exp(1j * ang)
    vals, ders, errs, _ = ai_many(zs)
    scale = np.maximum(1.0, np.maximum(np.abs(vals), np.abs(ders)))
    assert np.all(errs <= CONTRACT_ERR * scale)


def test_estimates_are_honest_against_mpmath():
    rng = np.random.default_rng(7)
    rad = np.sqrt(rng.uniform(0.0, 1.0, 160)) * CONTRACT_RADIUS
    ang = rng.uniform(-np.pi, np.pi, 160)
    for z in rad * np.exp(1j * ang):
        ev = ai(z)
        v, d = _mp_ai(z)
        assert abs(ev.value - v) <= ev.est_abs_err, z
        assert abs(ev.derivative - d) <= ev.est_abs_err, z


def test_real_axis_stays_real():
    for x in np.linspace(-25.0, 25.0, 41):
        ev = ai(x)
        assert ev.value.imag == 0.0
        assert ev.derivative.imag == 0.0


def test_method_tags_partition_by_radius():
    assert ai(2.0 + 1.0j).method == "power-series"
    assert ai(12.0 - 3.0j).method == "asymptotic"


def test_overflow_in_growing_sector_raises():
    with pytest.raises(CapabilityError):
        ai(700.0 * np.exp(2j * np.pi / 3))
    with pytest.raises(ValueError):
        ai(complex("nan"))


def test_ode_residual_series_domain():
    # Ai'' summed from the explicit second-derivative chain coefficients
    # (independent accumulation via the defining recurrence), against z*Ai.
    rng = np.random.default_rng(123)
    count = 0
    while count < 250:
        z = complex(rng.uniform(-6, 6), rng.uniform(-6, 6))
        if abs(z) > 6.0:
            continue
        count += 1
        f2 = g2 = 0.0j
        tf, tg = 1.0 + 0.0j, z  # k = 0 terms of the f and g chains
        for k in range(80):
            # second-derivative chain terms: c_k * 3k(3k-1) z^{3k-2} etc.
            if k >= 1:
                f2 += tf * (3 * k) * (3 * k - 1) / z**2 if z != 0 else 0.0
            g2 += tg * (3 * k + 1) * (3 * k) / z**2 if (z != 0 and k >= 1) else 0.0
            tf = tf * z**3 / ((3 * k + 2) * (3 * k + 3))
            tg = tg * z**3 / ((3 * k + 3) * (3 * k + 4))
        aipp = AI_AT_0 * f2 + AIP_AT_0 * g2
        ev = ai(z)
        resid = abs(aipp - z * ev.value)
        assert resid <= 1e-8 * (1.0 + abs(z * ev.value)), z


def test_ode_residual_taylor_step():
    # 6 < |z| <= 20: the recurrence a_{k+2} = (z a_k + a_{k-1})/((k+1)(k+2))
    # builds a local Taylor polynomial from (Ai, Ai'); if the pair failed the
    # ODE the prediction at z + delta would mismatch the direct evaluation.
    rng = np.random.default_rng(456)
    count = 0
    while count < 250:
        z = complex(rng.uniform(-20, 20), rng.uniform(-20, 20))
        if not (6.0 < abs(z) <= 20.0):
            continue
        count += 1
        ev = ai(z)
        a = [ev.value, ev.derivative]
        for k in range(14):
            prev = a[k - 1] if k >= 1 else 0.0
            a.append((z * a[k] + prev) / ((k + 1) * (k + 2)))
        delta = 0.05 * np.exp(1j * rng.uniform(0, 2 * np.pi))
        pred = sum(c * delta**j for j, c in enumerate(a))
        direct = ai(z + delta)
        err = abs(pred - direct.value)
        assert err <= 1e-8 * (1.0 + abs(z * ev.value)), z


def test_decay_sector_monotone_beyond_prefix():
    # along the first eigenfunction ray the modulus decays monotonically
    # after a bounded prefix
    tau = np.linspace(0.0, 40.0, 401)
    zs = np.exp(1j * np.pi / 6) * tau + MU[1]
    vals, _, _, _ = ai_many(zs)
    mod = np.abs(vals)
    peak = int(np.argmax(mod))
    assert tau[peak] < 5.0
    assert np.all(np.diff(mod[peak:]) <= 1e-13)


def test_backend_identity_is_reported():
    assert BACKEND in ("cython", "pure")


# ---------------------------------------------------------------------------
# zeros


def test_first_zeros_match_frozen_and_scipy():
    scipy_zeros = ai_zeros(4)[0]
    for n, frozen in MU.items():
        mine = ai_zero(n)
        assert abs(mine - frozen) < 1e-12
        assert abs(mine - scipy_zeros[n - 1]) < 1e-10


def test_zero_ordering():
    assert ai_zero(3) < ai_zero(2) < ai_zero(1) < 0.0


def test_zero_reevaluation_small():
    for n in (1, 2, 5, 12, 30, ZERO_MAX):
        mu = ai_zero(n)
        assert abs(ai(mu).value) <= 1e-12


def test_zero_sign_change_certificate():
    for n in range(1, 21):
        mu = ai_zero(n)
        left = ai(mu - 1e-9).value.real
        right = ai(mu + 1e-9).value.real
        assert left * right < 0.0


def test_zero_table_consistency():
    table = zero_table(12)
    assert table.count == 12
    assert all(b < a for a, b in zip(table.zeros, table.zeros[1:]))
    assert all(z < 0 for z in table.zeros)
    assert table.zeros[0] == ai_zero(1)


def test_zero_beyond_capability_raises():
    with pytest.raises(CapabilityError):
        ai_zero(ZERO_MAX + 1)
    with pytest.raises(ValueError):
        ai_zero(0)


def test_large_index_zero_against_mpmath():
    mu40 = ai_zero(40)
    ref = float(mp.airyaizero(40))
    assert abs(mu40 - ref) < 1e-11


# ---------------------------------------------------------------------------
# moments


def test_moment_zero_equals_derivative_squared():
    # identity: integral_mu^inf Ai^2 = Ai'(mu)^2 at a zero mu
    for n in (1, 2, 3):
        mu = ai_zero(n)
        closed = ai(mu).derivative.real ** 2
        m0 = airy_moment(0, n)
        assert m0 > 0.0
        assert abs(m0 - closed) / closed < 1e-9
    assert abs(airy_moment(0, 1) - M0_1) < 1e-12


def test_moment_one_closed_form():
    # antiderivative (y^2 Ai^2 - y Ai'^2 + Ai Ai')/3 gives
    # M_1(n) = -2 mu_n Ai'(mu_n)^2 / 3
    for n in (1, 2):
        mu = ai_zero(n)
        closed = -2.0 * mu * ai(mu).derivative.real ** 2 / 3.0
        assert abs(airy_moment(1, n) - closed) / closed < 1e-9
    assert abs(airy_moment(1, 1) - M1_1) < 1e-12


def test_moment_two_dual_quadrature():
    # adaptive quadrature against a fixed-step Simpson refinement
    mu = ai_zero(1)

    def f(x):
        return x**2 * ai(x + mu).value.real ** 2

    xs = np.linspace(0.0, 18.0, 4097)
    vals = np.array([f(x) for x in xs])
    h = xs[1] - xs[0]
    simpson = h / 3.0 * (vals[0] + vals[-1] + 4 * vals[1:-1:2].sum() + 2 * vals[2:-1:2].sum())
    m2 = airy_moment(2, 1)
    assert abs(m2 - simpson) / m2 < 1e-9
    assert abs(m2 - M2_1) < 1e-12


def test_moment_against_mpmath():
    ref = float(
        mp.quad(lambda t: t * mp.airyai(t + mp.mpf(MU[1])) ** 2, [0, 6, 18])
    )
    assert abs(airy_moment(1, 1) - ref) / ref < 1e-10


def test_moment_positivity():
    for n in range(1, 7):
        assert airy_moment(0, n) > 0.0


def test_moment_ratio_used_by_expansions():
    # M_1(n)/M_0(n) = 2|mu_n|/3 exactly
    for n in (1, 2, 3):
        ratio = airy_moment(1, n) / airy_moment(0, n)
        assert abs(ratio - 2.0 * abs(ai_zero(n)) / 3.0) < 1e-9


def test_moment_capability_bounds():
    with pytest.raises(CapabilityError):
        airy_moment(13, 1)
    with pytest.raises(ValueError):
        airy_moment(-1, 1)
