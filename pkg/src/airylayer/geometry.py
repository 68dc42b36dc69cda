"""Boundary geometry and potential jets for the 2D boundary-layer problem.

The leading eigenvalue of -h^2 Delta + iV localizes at boundary points where
the gradient of V is perpendicular to the boundary.  This module finds those
points, extracts the frame quantities

    c     = grad V . nu          (outward normal derivative),
    alpha = t . D^2V t - kappa c (second arclength derivative of V|_boundary),
    sigma = V_st                 (mixed jet in the curvilinear frame),

selects the minimizing point x0 together with its equivalence class S, and
checks the standing sign condition alpha*c > 0 on S.  Curves are analytic
closed parametrizations (circle, ellipse, smoothed square) carrying exact
curvature jets; arclength is the canonical parameter everywhere.

Orientation is fixed counterclockwise.  alpha and c are orientation
independent; the mixed jet sigma flips sign under reversal, so only
|sigma|-dependent quantities should feed verified outputs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import ConfigError, HypothesisViolation

__all__ = [
    "BoundaryCurve",
    "CandidateSet",
    "FrameDescriptor",
    "PerpPoint",
    "PotentialField",
    "circle",
    "curve_by_name",
    "curvilinear_frame",
    "ellipse",
    "field_from_expression",
    "find_perp_points",
    "rounded_square",
    "select_candidates",
]


# ---------------------------------------------------------------------------
# boundary curves


@dataclass(frozen=True)
class BoundaryCurve:
    """Closed C^3 curve parametrized by arclength, counterclockwise.

    The callables accept scalars or arrays of arclength values s in
    [0, length) and are periodic in s.  tangent has unit norm; normal is the
    outward unit normal; curvature is positive for convex arcs.
    """

    name: str
    length: float
    point: Callable = field(repr=False)
    tangent: Callable = field(repr=False)
    normal: Callable = field(repr=False)
    curvature: Callable = field(repr=False)
    curvature_prime: Callable = field(repr=False)
    closed: bool = True
    orientation: str = "ccw"

    def reversed(self) -> "BoundaryCurve":
        """Same point set traversed the other way (for invariance checks)."""
        L = self.length
        return BoundaryCurve(
            name=self.name + "-reversed",
            length=L,
            point=lambda s: self.point(L - np.asarray(s)),
            tangent=lambda s: -np.asarray(self.tangent(L - np.asarray(s))),
            normal=lambda s: self.normal(L - np.asarray(s)),
            curvature=lambda s: self.curvature(L - np.asarray(s)),
            curvature_prime=lambda s: -np.asarray(self.curvature_prime(L - np.asarray(s))),
            closed=self.closed,
            orientation="cw" if self.orientation == "ccw" else "ccw",
        )

    def max_curvature(self, samples: int = 4096) -> float:
        s = np.linspace(0.0, self.length, samples, endpoint=False)
        return float(np.max(np.abs(self.curvature(s))))


def _as_points(arr) -> np.ndarray:
    """Shape (..., 2) stacking for vectorized coordinate maps."""
    return np.stack(arr, axis=-1)


def circle(radius: float = 1.0, center=(0.0, 0.0)) -> BoundaryCurve:
    """Counterclockwise circle; kappa = 1/radius exactly."""
    if radius <= 0:
        raise ConfigError("circle radius must be positive")
    cx, cy = float(center[0]), float(center[1])
    R = float(radius)

    def point(s):
        q = np.asarray(s) / R
        return _as_points((cx + R * np.cos(q), cy + R * np.sin(q)))

    def tangent(s):
        q = np.asarray(s) / R
        return _as_points((-np.sin(q), np.cos(q)))

    def normal(s):
        q = np.asarray(s) / R
        return _as_points((np.cos(q), np.sin(q)))

    return BoundaryCurve(
        name="circle",
        length=2.0 * np.pi * R,
        point=point,
        tangent=tangent,
        normal=normal,
        curvature=lambda s: np.full_like(np.asarray(s, dtype=float), 1.0 / R),
        curvature_prime=lambda s: np.zeros_like(np.asarray(s, dtype=float)),
    )


_GAUSS10_X, _GAUSS10_W = np.polynomial.legendre.leggauss(20)


def _gauss_panel(f, a, b):
    """20-point Gauss-Legendre of f over [a, b]; a, b may be arrays."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    half = (b - a) / 2.0
    mid = (a + b) / 2.0
    vals = sum(
        w * np.asarray(f(mid + half * x)) for x, w in zip(_GAUSS10_X, _GAUSS10_W)
    )
    return half * vals


class _ArclengthTable:
    """Monotone arclength <-> parameter conversion, Gauss-exact between knots."""

    def __init__(self, speed: Callable, period: float, samples: int = 1024):
        q = np.linspace(0.0, period, samples + 1)
        panels = _gauss_panel(speed, q[:-1], q[1:])
        self.q_grid = q
        self.s_grid = np.concatenate(([0.0], np.cumsum(panels)))
        self.total = float(self.s_grid[-1])
        self._speed = speed

    def _s_of_q(self, q):
        """Arclength at parameter q via knot table + one local Gauss panel."""
        idx = np.clip(np.searchsorted(self.q_grid, q, side="right") - 1, 0, len(self.q_grid) - 2)
        return self.s_grid[idx] + _gauss_panel(self._speed, self.q_grid[idx], q)

    def q_of_s(self, s):
        s = np.mod(np.asarray(s, dtype=float), self.total)
        q = np.interp(s, self.s_grid, self.q_grid)
        # Newton against the true integral (exact derivative ds/dq = speed)
        for _ in range(4):
            q = q - (self._s_of_q(q) - s) / self._speed(q)
        return q


def ellipse(a: float = 2.0, b: float = 1.0, center=(0.0, 0.0)) -> BoundaryCurve:
    """Counterclockwise ellipse x = a cos q, y = b sin q with exact jets.

    kappa(q) = a b / (a^2 sin^2 q + b^2 cos^2 q)^{3/2}; at the major-axis tip
    this is a/b^2.
    """
    if a <= 0 or b <= 0:
        raise ConfigError("ellipse semi-axes must be positive")
    cx, cy = float(center[0]), float(center[1])

    def speed(q):
        q = np.asarray(q, dtype=float)
        return np.sqrt(a**2 * np.sin(q) ** 2 + b**2 * np.cos(q) ** 2)

    table = _ArclengthTable(speed, 2.0 * np.pi)

    def point(s):
        q = table.q_of_s(s)
        return _as_points((cx + a * np.cos(q), cy + b * np.sin(q)))

    def tangent(s):
        q = table.q_of_s(s)
        sp = speed(q)
        return _as_points((-a * np.sin(q) / sp, b * np.cos(q) / sp))

    def normal(s):
        q = table.q_of_s(s)
        sp = speed(q)
        return _as_points((b * np.cos(q) / sp, a * np.sin(q) / sp))

    def curvature(s):
        q = table.q_of_s(s)
        return a * b / speed(q) ** 3

    def curvature_prime(s):
        # d kappa / ds = (d kappa / dq) / speed
        q = table.q_of_s(s)
        sp = speed(q)
        dsp_dq = (a**2 - b**2) * np.sin(q) * np.cos(q) / sp
        return -3.0 * a * b * dsp_dq / sp**5

    return BoundaryCurve(
        name="ellipse",
        length=table.total,
        point=point,
        tangent=tangent,
        normal=normal,
        curvature=curvature,
        curvature_prime=curvature_prime,
    )


def _smoothstep5(u):
    """Quintic smoothstep: 0 -> 1 on [0,1] with vanishing 1st/2nd derivatives."""
    u = np.clip(u, 0.0, 1.0)
    return u**3 * (10.0 - 15.0 * u + 6.0 * u**2)


def rounded_square(edge: float = 1.0, corner: float = 0.4) -> BoundaryCurve:
    """Square with smoothly rounded corners (the curve is C^3).

    Built directly in arclength from a curvature profile: kappa = 0 on the
    four straight edges of length `edge`, and the quintic-smoothstep turning
    profile phi = (pi/2) * smoothstep((s - edge)/corner) over each corner
    stretch of length `corner`.  The tangent angle is therefore analytic in
    closed form; positions integrate the corner arc with Gauss panels.
    Four-fold symmetry closes the curve exactly; centered at the origin.
    """
    if edge <= 0 or corner <= 0:
        raise ConfigError("edge and corner lengths must be positive")
    period = edge + corner  # one quarter of the perimeter
    L = 4.0 * period

    def kappa_local(s):
        s = np.mod(np.asarray(s, dtype=float), period)
        u = (s - edge) / corner
        bump = 30.0 * np.clip(u, 0.0, 1.0) ** 2 * (1.0 - np.clip(u, 0.0, 1.0)) ** 2
        return np.where(s >= edge, bump * (np.pi / 2.0) / corner, 0.0)

    def kappa_prime_local(s):
        s = np.mod(np.asarray(s, dtype=float), period)
        uc = np.clip((s - edge) / corner, 0.0, 1.0)
        du = 60.0 * uc * (1.0 - uc) * (1.0 - 2.0 * uc)
        return np.where(s >= edge, du * (np.pi / 2.0) / corner**2, 0.0)

    def phi_of(s):
        s = np.mod(np.asarray(s, dtype=float), L)
        quarter = np.floor(s / period)
        r = s - quarter * period
        turn = np.where(r >= edge, _smoothstep5((r - edge) / corner), 0.0)
        return (np.pi / 2.0) * (quarter + turn)

    def _corner_arc(r_from, r_to):
        # integral of e^{i phi} across part of the first corner (quarter 0)
        return _gauss_panel(
            lambda r: np.exp(1j * (np.pi / 2.0) * _smoothstep5((r - edge) / corner)),
            r_from,
            r_to,
        )

    corner_full = complex(_corner_arc(edge, period))
    # period-start positions z_k: each quarter adds rot^k * (edge + corner arc)
    rots = np.exp(1j * (np.pi / 2.0) * np.arange(4))
    z_starts = np.zeros(5, dtype=complex)
    for k in range(4):
        z_starts[k + 1] = z_starts[k] + rots[k] * (edge + corner_full)
    z_center = np.mean(z_starts[:4])

    def point(s):
        s = np.mod(np.asarray(s, dtype=float), L)
        quarter = np.clip(np.floor(s / period).astype(int), 0, 3)
        r = s - quarter * period
        z = z_starts[quarter] + rots[quarter] * (
            np.minimum(r, edge) + np.where(r > edge, _corner_arc(edge, np.maximum(r, edge)), 0.0)
        )
        z = z - z_center
        return _as_points((z.real, z.imag))

    def tangent(s):
        p = phi_of(s)
        return _as_points((np.cos(p), np.sin(p)))

    def normal(s):
        p = phi_of(s)
        return _as_points((np.sin(p), -np.cos(p)))

    return BoundaryCurve(
        name="rounded-square",
        length=L,
        point=point,
        tangent=tangent,
        normal=normal,
        curvature=kappa_local,
        curvature_prime=kappa_prime_local,
    )


_CURVES = {"circle": circle, "ellipse": ellipse, "rounded-square": rounded_square}


def curve_by_name(name: str, **params) -> BoundaryCurve:
    """Config-addressable curve constructor ("circle", "ellipse", ...)."""
    try:
        maker = _CURVES[name]
    except KeyError:
        raise ConfigError(f"unknown curve {name!r}; known: {sorted(_CURVES)}") from None
    return maker(**params)


# ---------------------------------------------------------------------------
# potential fields


@dataclass(frozen=True)
class PotentialField:
    """Real potential with gradient and Hessian evaluators on the plane.

    value(p), gradient(p), hessian(p) accept points of shape (2,) or (N, 2)
    and return scalars/(N,), (2,)/(N,2), (2,2)/(N,2,2) respectively.
    """

    value: Callable = field(repr=False)
    gradient: Callable = field(repr=False)
    hessian: Callable = field(repr=False)
    description: str = ""

    def consistency_defect(self, points, step: float = 1e-6) -> float:
        """Worst relative mismatch between FD of value and gradient."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        worst = 0.0
        for p in pts:
            g = np.asarray(self.gradient(p), dtype=float)
            fd = np.zeros(2)
            for k in range(2):
                e = np.zeros(2)
                e[k] = step
                fd[k] = (self.value(p + e) - self.value(p - e)) / (2 * step)
            scale = max(1.0, float(np.linalg.norm(g)))
            worst = max(worst, float(np.linalg.norm(fd - g)) / scale)
        return worst

    def scaled(self, factor: float) -> "PotentialField":
        return PotentialField(
            value=lambda p: factor * np.asarray(self.value(p)),
            gradient=lambda p: factor * np.asarray(self.gradient(p)),
            hessian=lambda p: factor * np.asarray(self.hessian(p)),
            description=f"{factor}*({self.description})",
        )

    def rotated(self, angle: float) -> "PotentialField":
        """Field of the rotated configuration: W(p) = V(R^{-1} p)."""
        ca, sa = np.cos(angle), np.sin(angle)
        R = np.array([[ca, -sa], [sa, ca]])

        def back(p):
            return np.asarray(p, dtype=float) @ R  # p @ R == R^{-1} acting on rows

        return PotentialField(
            value=lambda p: self.value(back(p)),
            gradient=lambda p: np.asarray(self.gradient(back(p))) @ R.T,
            hessian=lambda p: R @ np.asarray(self.hessian(back(p))) @ R.T,
            description=f"rot({angle})[{self.description}]",
        )


def field_from_expression(expr: str) -> PotentialField:
    """Build a PotentialField from a sympy expression in x and y.

    Derivatives are symbolic, so gradient/Hessian are exact; this is the
    config-file entry point for potentials.
    """
    import sympy

    x, y = sympy.symbols("x y", real=True)
    try:
        V = sympy.sympify(expr, locals={"x": x, "y": y})
    except (sympy.SympifyError, SyntaxError) as exc:
        raise ConfigError(f"cannot parse potential expression {expr!r}: {exc}") from exc
    free = V.free_symbols - {x, y}
    if free:
        raise ConfigError(f"potential {expr!r} uses unknown symbols {free}")
    grads = [sympy.diff(V, u) for u in (x, y)]
    hess = [[sympy.diff(g, u) for u in (x, y)] for g in grads]
    fV = sympy.lambdify((x, y), V, "numpy")
    fg = [sympy.lambdify((x, y), g, "numpy") for g in grads]
    fh = [[sympy.lambdify((x, y), hij, "numpy") for hij in row] for row in hess]

    def value(p):
        p = np.asarray(p, dtype=float)
        out = fV(p[..., 0], p[..., 1])
        return np.broadcast_to(np.asarray(out, dtype=float), p[..., 0].shape).copy() \
            if p.ndim > 1 else float(out)

    def gradient(p):
        p = np.asarray(p, dtype=float)
        parts = [np.broadcast_to(f(p[..., 0], p[..., 1]), p[..., 0].shape) for f in fg]
        return np.stack(parts, axis=-1)

    def hessian(p):
        p = np.asarray(p, dtype=float)
        rows = [
            np.stack(
                [np.broadcast_to(f(p[..., 0], p[..., 1]), p[..., 0].shape) for f in row],
                axis=-1,
            )
            for row in fh
        ]
        return np.stack(rows, axis=-2)

    return PotentialField(value=value, gradient=gradient, hessian=hessian, description=expr)


# ---------------------------------------------------------------------------
# perpendicular points


@dataclass(frozen=True)
class PerpPoint:
    """Boundary point where grad V is parallel to the normal, with its jets."""

    s: float
    position: np.ndarray
    c: float
    alpha: float
    grad_norm: float
    V_value: float
    sigma_mixed: float


def _tangential_component(curve: BoundaryCurve, fieldV: PotentialField, s):
    pts = curve.point(s)
    grads = np.asarray(fieldV.gradient(pts), dtype=float)
    tans = np.asarray(curve.tangent(s), dtype=float)
    return np.sum(grads * tans, axis=-1)


def _perp_point_at(curve: BoundaryCurve, fieldV: PotentialField, s: float) -> PerpPoint:
    p = np.asarray(curve.point(s), dtype=float)
    t = np.asarray(curve.tangent(s), dtype=float)
    nu = np.asarray(curve.normal(s), dtype=float)
    g = np.asarray(fieldV.gradient(p), dtype=float)
    H = np.asarray(fieldV.hessian(p), dtype=float)
    kap = float(curve.curvature(s))
    c = float(g @ nu)
    alpha = float(t @ H @ t) - kap * c
    # mixed jet in the (s, t)-frame with t the inward distance: V_st = -t.H.nu
    # at a perpendicular point (the grad.t term vanishes there)
    sigma = -float(t @ H @ nu)
    return PerpPoint(
        s=float(s),
        position=p,
        c=c,
        alpha=alpha,
        grad_norm=float(np.linalg.norm(g)),
        V_value=float(fieldV.value(p)),
        sigma_mixed=sigma,
    )


def find_perp_points(
    curve: BoundaryCurve, fieldV: PotentialField, samples: int = 2048
) -> list:
    """All isolated boundary points with grad V perpendicular to the curve.

    Scans s |-> grad V . tangent on a uniform arclength grid, brackets sign
    changes, and polishes each root by bisection followed by Newton (FD
    slope) to |grad V . t| <= 1e-10 * max(1, |grad V|).  A stretch of
    consecutive near-zero samples means the perpendicularity is not isolated
    (straight edge aligned with the gradient) and is rejected.
    """
    L = curve.length
    s_grid = np.linspace(0.0, L, samples, endpoint=False)
    f = _tangential_component(curve, fieldV, s_grid)
    pts_scale = np.maximum(
        1.0, np.linalg.norm(np.asarray(fieldV.gradient(curve.point(s_grid))), axis=-1)
    )
    tiny = 1e-12 * pts_scale
    near_zero = np.abs(f) <= tiny
    # degenerate arc: >= 3 consecutive near-zero samples (wrap-aware)
    run = np.concatenate((near_zero, near_zero[:2]))
    for i in range(samples):
        if run[i] and run[i + 1] and run[i + 2]:
            raise HypothesisViolation(
                "perpendicularity is degenerate: grad V is normal to the boundary "
                f"along an arc near s = {s_grid[i]:.6g} (isolated points required)"
            )

    roots = []
    for i in range(samples):
        j = (i + 1) % samples
        a, b = s_grid[i], s_grid[i] + L / samples
        fa, fb = f[i], f[j]
        if near_zero[i]:
            roots.append(float(a))
            continue
        if fa * fb < 0.0:
            # bisection to a tight bracket, then Newton polish
            for _ in range(60):
                m = 0.5 * (a + b)
                fm = float(_tangential_component(curve, fieldV, m))
                if fa * fm <= 0.0:
                    b, fb = m, fm
                else:
                    a, fa = m, fm
            roots.append(0.5 * (a + b))

    out = []
    for s0 in roots:
        s_ref = s0
        for _ in range(4):
            f0 = float(_tangential_component(curve, fieldV, s_ref))
            d = 1e-7 * max(1.0, L)
            f1 = float(_tangential_component(curve, fieldV, s_ref + d))
            fm1 = float(_tangential_component(curve, fieldV, s_ref - d))
            slope = (f1 - fm1) / (2 * d)
            if slope != 0.0 and np.isfinite(slope):
                s_ref -= f0 / slope
        pt = _perp_point_at(curve, fieldV, s_ref)
        certificate = abs(float(_tangential_component(curve, fieldV, s_ref)))
        if certificate > 1e-10 * max(1.0, pt.grad_norm):
            raise HypothesisViolation(
                f"root polish stalled at s = {s_ref:.6g}: |grad V . t| = {certificate:.2e}"
            )
        out.append(pt)
    if not out:
        raise HypothesisViolation(
            "no perpendicular boundary points found; a smooth potential on a "
            "closed boundary must have at least two"
        )
    # deduplicate wrap-around twins
    out.sort(key=lambda p: p.s)
    dedup = [out[0]]
    for p in out[1:]:
        if min(abs(p.s - dedup[-1].s), L - abs(p.s - dedup[-1].s)) > 1e-6 * L:
            dedup.append(p)
    if len(dedup) > 1:
        first, last = dedup[0], dedup[-1]
        if min(abs(first.s - last.s), L - abs(first.s - last.s)) <= 1e-6 * L:
            dedup.pop()
    return dedup


# ---------------------------------------------------------------------------
# candidate selection


@dataclass(frozen=True)
class CandidateSet:
    """The minimizing perpendicular point and its equivalence class."""

    x0: PerpPoint
    S: tuple
    assumption_ok: bool
    conjugated: bool


def select_candidates(perps: Sequence[PerpPoint]) -> CandidateSet:
    """Pick x0 = argmin |grad V| and assemble S, enforcing alpha*c > 0 on S.

    S collects every perpendicular point sharing both |grad V(x0)| and
    V(x0) (to 1e-8 relative).  The sign condition must hold at each member;
    when it holds with alpha < 0 (hence c < 0) the conjugate operator is the
    normalized representative and `conjugated` is set.  Ties between
    minimizers prefer a point whose class satisfies the sign condition,
    then the smallest arclength.
    """
    if not perps:
        raise ValueError("select_candidates needs a nonempty perpendicular list")
    cm = min(p.grad_norm for p in perps)
    scale = max(1.0, cm)
    minimizers = [p for p in perps if p.grad_norm - cm <= 1e-8 * scale]

    def class_of(x0: PerpPoint):
        vs = max(1.0, abs(x0.V_value))
        return tuple(
            p
            for p in perps
            if abs(p.grad_norm - x0.grad_norm) <= 1e-8 * scale
            and abs(p.V_value - x0.V_value) <= 1e-8 * vs
        )

    def sign_state(cls):
        prods = [p.alpha * p.c for p in cls]
        if all(pr > 0.0 for pr in prods):
            alphas = [p.alpha for p in cls]
            if all(a > 0.0 for a in alphas):
                return "direct"
            if all(a < 0.0 for a in alphas):
                return "conjugated"
            return "mixed-orientation"
        return "violated"

    ranked = sorted(
        minimizers, key=lambda p: (sign_state(class_of(p)) == "violated", p.s)
    )
    x0 = ranked[0]
    S = class_of(x0)
    state = sign_state(S)
    if state == "violated":
        detail = ", ".join(f"s={p.s:.4g}: alpha*c={p.alpha * p.c:.4g}" for p in S)
        raise HypothesisViolation(
            "sign condition alpha*c > 0 fails on the candidate class "
            f"({detail}); conjugating the operator cannot repair it because "
            "alpha*c is conjugation-invariant"
        )
    if state == "mixed-orientation":
        raise HypothesisViolation(
            "alpha changes sign across the candidate class; no single "
            "conjugation normalizes alpha > 0 on all of S"
        )
    return CandidateSet(x0=x0, S=S, assumption_ok=True, conjugated=(state == "conjugated"))


# ---------------------------------------------------------------------------
# curvilinear frame


@dataclass(frozen=True)
class FrameDescriptor:
    """Local (t, s)-coordinates at a boundary point: t inward, s arclength."""

    curve: BoundaryCurve = field(repr=False)
    s0: float
    origin: np.ndarray
    tangent: np.ndarray
    normal: np.ndarray
    kappa: float
    kappa_prime: float

    def to_xy(self, t, s):
        """Map strip coordinates to the plane: x(s, t) = gamma(s) - t nu(s)."""
        t = np.asarray(t, dtype=float)
        s = np.asarray(s, dtype=float)
        pts = np.asarray(self.curve.point(s), dtype=float)
        nus = np.asarray(self.curve.normal(s), dtype=float)
        return pts - t[..., None] * nus

    def metric(self, t, s):
        """g = 1 - t*kappa(s), the Jacobian factor of the strip coordinates."""
        t = np.asarray(t, dtype=float)
        return 1.0 - t * np.asarray(self.curve.curvature(s), dtype=float)

    def validate_width(self, width: float) -> None:
        kmax = self.curve.max_curvature()
        if kmax > 0 and width > 1.0 / kmax:
            raise ConfigError(
                f"tube width {width} exceeds the coordinate validity bound "
                f"1/max|kappa| = {1.0 / kmax:.6g}"
            )


def curvilinear_frame(curve: BoundaryCurve, s0: float) -> FrameDescriptor:
    """Frame data (origin, tangent, normal, kappa, kappa') at arclength s0."""
    s0 = float(np.mod(s0, curve.length))
    return FrameDescriptor(
        curve=curve,
        s0=s0,
        origin=np.asarray(curve.point(s0), dtype=float),
        tangent=np.asarray(curve.tangent(s0), dtype=float),
        normal=np.asarray(curve.normal(s0), dtype=float),
        kappa=float(curve.curvature(s0)),
        kappa_prime=float(curve.curvature_prime(s0)),
    )
