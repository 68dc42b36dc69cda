"""Boundary geometry tests: curves, perpendicular points, candidate selection."""

import numpy as np
import pytest

from airylayer.errors import ConfigError, HypothesisViolation
from airylayer.geometry import (
    circle,
    curve_by_name,
    curvilinear_frame,
    ellipse,
    field_from_expression,
    find_perp_points,
    rounded_square,
    select_candidates,
)

ALL_CURVES = [circle(), ellipse(2.0, 1.0), rounded_square()]


# ---------------------------------------------------------------------------
# curves


@pytest.mark.parametrize("curve", ALL_CURVES, ids=lambda c: c.name)
def test_curve_frame_orthonormal(curve):
    s = np.linspace(0.0, curve.length, 400, endpoint=False) + 0.0123
    t = np.asarray(curve.tangent(s))
    nu = np.asarray(curve.normal(s))
    assert np.max(np.abs(np.linalg.norm(t, axis=-1) - 1.0)) < 1e-10
    assert np.max(np.abs(np.sum(t * nu, axis=-1))) < 1e-10


@pytest.mark.parametrize("curve", ALL_CURVES, ids=lambda c: c.name)
def test_curve_closure_and_derivatives(curve):
    assert np.linalg.norm(
        np.asarray(curve.point(0.0)) - np.asarray(curve.point(curve.length))
    ) < 1e-12
    s = np.linspace(0.0, curve.length, 300, endpoint=False) + 0.017
    d = 1e-6
    fd = (np.asarray(curve.point(s + d)) - np.asarray(curve.point(s - d))) / (2 * d)
    assert np.max(np.linalg.norm(fd - np.asarray(curve.tangent(s)), axis=-1)) < 1e-6
    # Frenet: dt/ds = -kappa * nu (counterclockwise, outward normal)
    fdt = (np.asarray(curve.tangent(s + d)) - np.asarray(curve.tangent(s - d))) / (2 * d)
    kap = np.asarray(curve.curvature(s))
    assert np.max(np.linalg.norm(fdt + kap[..., None] * np.asarray(curve.normal(s)), axis=-1)) < 1e-6
    fdk = (np.asarray(curve.curvature(s + d)) - np.asarray(curve.curvature(s - d))) / (2 * d)
    assert np.max(np.abs(fdk - np.asarray(curve.curvature_prime(s)))) < 1e-5


def test_circle_geometry():
    c = circle()
    assert c.length == pytest.approx(2 * np.pi)
    assert float(c.curvature(1.234)) == pytest.approx(1.0)
    assert float(c.curvature_prime(0.5)) == 0.0


def test_ellipse_tip_curvature():
    # kappa at the major-axis tip of an (a, b) ellipse is a/b^2
    e = ellipse(2.0, 1.0)
    assert float(e.curvature(0.0)) == pytest.approx(2.0, abs=1e-10)


def test_curve_by_name():
    assert curve_by_name("circle", radius=2.0).length == pytest.approx(4 * np.pi)
    with pytest.raises(ConfigError):
        curve_by_name("triangle")


# ---------------------------------------------------------------------------
# potential fields


def test_field_expression_consistency():
    V = field_from_expression("x**2 + y")
    pts = np.array([[0.3, 0.4], [0.0, 1.0], [-0.5, 0.2]])
    assert V.consistency_defect(pts) < 1e-6
    assert float(V.value(np.array([0.0, 1.0]))) == pytest.approx(1.0)
    assert np.allclose(V.gradient(np.array([0.0, 1.0])), [0.0, 1.0])
    assert np.allclose(V.hessian(np.array([0.0, 1.0])), [[2.0, 0.0], [0.0, 0.0]])


def test_field_expression_rejects_garbage():
    with pytest.raises(ConfigError):
        field_from_expression("x + unknown_symbol")
    with pytest.raises(ConfigError):
        field_from_expression("x +* y")


# ---------------------------------------------------------------------------
# perpendicular points


def test_disk_quadratic_potential_roots():
    # V = x^2 + y on the unit circle: grad V tangential component vanishes
    # where x = 0 (poles) and where y = 1/2
    V = field_from_expression("x**2 + y")
    perps = find_perp_points(circle(), V)
    got = sorted((round(p.position[0], 8), round(p.position[1], 8)) for p in perps)
    r3 = np.sqrt(3.0) / 2.0
    want = sorted(
        [(0.0, 1.0), (-0.0, -1.0), (round(r3, 8), 0.5), (round(-r3, 8), 0.5)]
    )
    assert len(got) == 4
    for g, w in zip(got, want):
        assert abs(g[0] - w[0]) < 1e-8 and abs(g[1] - w[1]) < 1e-8


def test_disk_quadratic_jets():
    V = field_from_expression("x**2 + y")
    perps = find_perp_points(circle(), V)
    top = min(perps, key=lambda p: np.linalg.norm(p.position - [0.0, 1.0]))
    assert top.c == pytest.approx(1.0, abs=1e-9)
    assert top.alpha == pytest.approx(1.0, abs=1e-8)  # 2 - kappa*c = 2 - 1
    assert top.grad_norm == pytest.approx(1.0, abs=1e-9)
    bottom = min(perps, key=lambda p: np.linalg.norm(p.position - [0.0, -1.0]))
    assert bottom.c == pytest.approx(-1.0, abs=1e-9)
    assert bottom.alpha == pytest.approx(3.0, abs=1e-8)


def test_disk_linear_potential_roots_at_poles():
    V = field_from_expression("y")
    perps = find_perp_points(circle(), V)
    got = sorted((round(p.position[0], 8), round(p.position[1], 8)) for p in perps)
    assert len(got) == 2
    assert abs(got[0][1] + 1.0) < 1e-8 and abs(got[1][1] - 1.0) < 1e-8


def test_rounded_square_aligned_potential_degenerate():
    with pytest.raises(HypothesisViolation):
        find_perp_points(rounded_square(), field_from_expression("y"))


def test_perpendicularity_certificates():
    V = field_from_expression("x**2 + y + 0.3*x*y")
    curve = ellipse(2.0, 1.0)
    for p in find_perp_points(curve, V):
        g = np.asarray(V.gradient(p.position))
        t = np.asarray(curve.tangent(p.s))
        assert abs(g @ t) <= 1e-10 * max(1.0, np.linalg.norm(g))


def test_reversal_invariance():
    V = field_from_expression("x**2 + y")
    for curve in (circle(), ellipse(2.0, 1.0)):
        p1 = find_perp_points(curve, V)
        p2 = find_perp_points(curve.reversed(), V)
        k1 = sorted((round(p.alpha, 8), round(p.c, 8)) for p in p1)
        k2 = sorted((round(p.alpha, 8), round(p.c, 8)) for p in p2)
        assert k1 == k2
        s1 = sorted(round(p.sigma_mixed, 8) for p in p1)
        s2 = sorted(round(-p.sigma_mixed, 8) for p in p2)
        assert s1 == s2


def test_alpha_is_boundary_second_derivative():
    V = field_from_expression("x**2 + y")
    curve = circle()
    for p in find_perp_points(curve, V):
        d = 1e-4
        vb = lambda sv: float(V.value(np.asarray(curve.point(sv))))
        fd2 = (vb(p.s + d) - 2 * vb(p.s) + vb(p.s - d)) / d**2
        assert abs(p.alpha - fd2) < 1e-5 * max(1.0, abs(p.alpha))


# ---------------------------------------------------------------------------
# candidate selection


def test_disk_quadratic_selection():
    V = field_from_expression("x**2 + y")
    cs = select_candidates(find_perp_points(circle(), V))
    assert np.linalg.norm(cs.x0.position - [0.0, 1.0]) < 1e-8
    assert len(cs.S) == 1
    assert cs.assumption_ok and not cs.conjugated


def test_disk_linear_selection_violates():
    # V = y: alpha*c = -1 at both poles and conjugation cannot repair it
    V = field_from_expression("y")
    with pytest.raises(HypothesisViolation):
        select_candidates(find_perp_points(circle(), V))


def test_conjugated_branch():
    # V = -(x^2 + y): the top point has c = -1, alpha = -1, alpha*c = 1 > 0
    V = field_from_expression("-(x**2 + y)")
    cs = select_candidates(find_perp_points(circle(), V))
    assert np.linalg.norm(cs.x0.position - [0.0, 1.0]) < 1e-8
    assert cs.assumption_ok and cs.conjugated


def test_scaling_preserves_selection():
    V = field_from_expression("x**2 + y")
    cs1 = select_candidates(find_perp_points(circle(), V))
    cs2 = select_candidates(find_perp_points(circle(), V.scaled(2.0)))
    assert np.linalg.norm(cs1.x0.position - cs2.x0.position) < 1e-9
    assert cs2.x0.c == pytest.approx(2 * cs1.x0.c, abs=1e-12)
    assert cs2.x0.alpha == pytest.approx(2 * cs1.x0.alpha, abs=1e-12)
    assert cs1.assumption_ok == cs2.assumption_ok


def test_rotation_equivariance():
    ang = 0.7
    V = field_from_expression("x**2 + y")
    cs0 = select_candidates(find_perp_points(circle(), V))
    csr = select_candidates(find_perp_points(circle(), V.rotated(ang)))
    R = np.array([[np.cos(ang), -np.sin(ang)], [np.sin(ang), np.cos(ang)]])
    assert np.linalg.norm(R @ cs0.x0.position - csr.x0.position) < 1e-8
    assert csr.x0.grad_norm == pytest.approx(cs0.x0.grad_norm, abs=1e-8)
    assert csr.x0.alpha == pytest.approx(cs0.x0.alpha, abs=1e-8)


def test_empty_selection_rejected():
    with pytest.raises(ValueError):
        select_candidates([])


# ---------------------------------------------------------------------------
# curvilinear frame


def test_circle_frame():
    fr = curvilinear_frame(circle(), np.pi / 2.0)
    assert fr.kappa == pytest.approx(1.0)
    assert fr.kappa_prime == pytest.approx(0.0)
    assert fr.metric(0.1, np.pi / 2.0) == pytest.approx(0.9)
    assert np.linalg.norm(fr.origin - [0.0, 1.0]) < 1e-12
    # inward map: t steps toward the center
    inner = fr.to_xy(np.array([0.25]), np.array([np.pi / 2.0]))
    assert np.linalg.norm(inner[0] - [0.0, 0.75]) < 1e-12


def test_frame_width_validation():
    fr = curvilinear_frame(circle(), 0.0)
    fr.validate_width(0.5)
    with pytest.raises(ConfigError):
        fr.validate_width(1.5)


def test_ellipse_frame_jets():
    fr = curvilinear_frame(ellipse(2.0, 1.0), 0.0)
    assert fr.kappa == pytest.approx(2.0, abs=1e-9)
    # kappa' = 0 at the symmetric tip
    assert abs(fr.kappa_prime) < 1e-9
