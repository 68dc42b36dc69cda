"""Matrix realizations of the operators and eigensolvers for non-normal
matrices.

All discrete operators eliminate Dirichlet rows: the matrix acts on interior
degrees of freedom only.  Eigenvalue routines never trust solver-internal
residuals; every reported pair is re-certified against the assembled matrix.

Domains:

* 1D interval (0, a), second-order finite differences or Chebyshev
  collocation;
* half-line / whole-line model operators truncated with hard Dirichlet at a
  decay radius;
* tensor sums assembled as sparse Kronecker structures with a separable
  solve path;
* 2D: polar disk (diameter-folded Chebyshev x Fourier), curvilinear boundary
  strip with metric g = 1 - t*kappa(s), and tensor rectangles.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import spectral
from .errors import AccuracyError, CapabilityError, ConfigError
from .geometry import BoundaryCurve, PotentialField
from .models import HalfLineAiryModel, HarmonicModel, TensorSumModel

__all__ = [
    "DiscreteOperator",
    "EigenSolveReport",
    "Grid1D",
    "PolarGrid2D",
    "StripGrid2D",
    "TensorGrid2D",
    "build_1d",
    "build_2d",
    "build_halfline_model",
    "build_harmonic_model",
    "build_tensor_model",
    "export_triplets",
    "grid1d",
    "leftmost_eigenvalues",
]


# ---------------------------------------------------------------------------
# grids


@dataclass(frozen=True)
class Grid1D:
    """Nodes over a closed interval; endpoints carry the Dirichlet rows."""

    nodes: np.ndarray = field(repr=False)
    scheme: str  # "fd2" | "cheb"
    interval: tuple
    boundary: str = "dirichlet"

    def __post_init__(self):
        d = np.diff(self.nodes)
        if not np.all(d > 0):
            raise ConfigError("grid nodes must be strictly increasing")
        if self.scheme not in ("fd2", "cheb"):
            raise ConfigError(f"unknown scheme {self.scheme!r}")

    @property
    def n_interior(self) -> int:
        return len(self.nodes) - 2


def grid1d(scheme: str, n: int, interval) -> Grid1D:
    """n+1 nodes on [interval[0], interval[1]] for the given scheme."""
    a, b = float(interval[0]), float(interval[1])
    if b <= a:
        raise ConfigError("interval must have positive length")
    if scheme == "cheb":
        nodes = spectral.cheb_nodes(n, a, b)
    elif scheme == "fd2":
        nodes = np.linspace(a, b, n + 1)
    else:
        raise ConfigError(f"unknown scheme {scheme!r}")
    return Grid1D(nodes=nodes, scheme=scheme, interval=(a, b))


@dataclass(frozen=True)
class TensorGrid2D:
    """Rectangle as a tensor of two 1D grids; coordinates (x, y)."""

    x_grid: Grid1D
    y_grid: Grid1D


@dataclass(frozen=True)
class PolarGrid2D:
    """Disk grid: Chebyshev across the diameter (odd order, so no axis
    node) times a uniform Fourier grid in the angle."""

    n_r: int
    n_theta: int
    radius: float = 1.0

    def __post_init__(self):
        if self.n_r % 2 == 0:
            raise ConfigError(
                "polar diameter order n_r must be odd so the axis r = 0 "
                "carries no node (axis singularity would be unresolved)"
            )
        if self.n_theta % 2 != 0:
            raise ConfigError("n_theta must be even (diameter fold pairs angles)")


@dataclass(frozen=True)
class StripGrid2D:
    """Curvilinear boundary strip: t inward (Chebyshev), s arclength
    (Fourier, periodic)."""

    curve: BoundaryCurve
    width: float
    n_t: int
    n_s: int

    def __post_init__(self):
        # the metric factor 1 - t*kappa must stay well away from zero
        kmax = self.curve.max_curvature()
        if kmax > 0 and self.width > 0.75 / kmax:
            raise ConfigError(
                f"strip width {self.width} exceeds 0.75/max|kappa| = "
                f"{0.75 / kmax:.6g}; curvilinear coordinates degenerate"
            )


# ---------------------------------------------------------------------------
# operators


@dataclass(frozen=True)
class DiscreteOperator:
    """Matrix over the interior unknowns plus provenance metadata.

    `factors` carries the 1D blocks of Kronecker-sum operators so that
    eigensolvers can use the separable fast path (the assembled matrix is
    still what certifies residuals).
    """

    matrix: object = field(repr=False)  # ndarray or scipy sparse
    grid: object = field(repr=False)
    symbol: dict
    warnings: tuple = ()
    factors: Optional[tuple] = field(default=None, repr=False)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


def _second_derivative(grid: Grid1D):
    """Interior second-derivative matrix and interior nodes."""
    a, b = grid.interval
    n = len(grid.nodes) - 1
    if grid.scheme == "cheb":
        D, x = spectral.cheb_diff(n, a, b)
        D2 = (D @ D)[1:-1, 1:-1]
        return D2, x[1:-1]
    D2, x = spectral.fd2_dirichlet(n - 1, a, b)
    return D2, x


def _first_derivative_interior(grid: Grid1D):
    a, b = grid.interval
    n = len(grid.nodes) - 1
    if grid.scheme != "cheb":
        raise ConfigError("first-derivative blocks are only assembled on cheb grids")
    D, x = spectral.cheb_diff(n, a, b)
    return D[1:-1, 1:-1], x[1:-1]


def _resolution_warnings(grid: Grid1D, V: Callable, h: float) -> tuple:
    """Heuristic: want >= 8 nodes inside each boundary layer of depth
    h^{2/3}/|V'(endpoint)|^{1/3}."""
    a, b = grid.interval
    d = 1e-6 * (b - a)
    out = []
    for end, inward in ((a, +1.0), (b, -1.0)):
        slope = abs((V(end + inward * d) - V(end)) / (inward * d))
        if slope < 1e-12:
            continue
        depth = h ** (2.0 / 3.0) / slope ** (1.0 / 3.0)
        if end == a:
            count = int(np.sum(grid.nodes <= a + depth))
        else:
            count = int(np.sum(grid.nodes >= b - depth))
        if count < 8:
            out.append(
                f"boundary layer at x={end:g} (depth {depth:.3g}) holds only "
                f"{count} nodes (< 8); eigenvalues near that end are under-resolved"
            )
    return tuple(out)


def build_1d(V: Callable, a: float, h: float, grid: Grid1D) -> DiscreteOperator:
    """Matrix of -h^2 d^2/dx^2 + i (V - V(0)) on (0, a), Dirichlet ends."""
    ga, gb = grid.interval
    if abs(ga) > 1e-14 or abs(gb - a) > 1e-12 * max(1.0, a):
        raise ConfigError(f"grid interval {grid.interval} does not cover (0, {a})")
    D2, x = _second_derivative(grid)
    v = np.array([V(xi) for xi in x], dtype=float)
    A = -(h**2) * D2.astype(complex) + 1j * np.diag(v - float(V(0.0)))
    return DiscreteOperator(
        matrix=A,
        grid=grid,
        symbol={"operator": "interval-schrodinger", "h": h, "a": a},
        warnings=_resolution_warnings(grid, V, h),
    )


def build_halfline_model(
    beta0: float, L: float = 40.0, grid: Optional[Grid1D] = None
) -> DiscreteOperator:
    """-d^2/dx^2 + i*beta0*x on (0, L), hard Dirichlet truncation at L."""
    model = HalfLineAiryModel(beta0=beta0)
    if grid is None:
        grid = grid1d("cheb", 200, (0.0, L))
    D2, x = _second_derivative(grid)
    A = -D2.astype(complex) + 1j * beta0 * np.diag(x)
    return DiscreteOperator(
        matrix=A,
        grid=grid,
        symbol={"operator": "halfline-airy", "beta0": beta0, "L": grid.interval[1]},
    )


def build_harmonic_model(L: float = 12.0, grid: Optional[Grid1D] = None) -> DiscreteOperator:
    """-d^2/dxi^2 + (i/2) xi^2 on (-L, L), Dirichlet decay truncation."""
    model = HarmonicModel()
    if grid is None:
        grid = grid1d("cheb", 120, (-L, L))
    D2, x = _second_derivative(grid)
    A = -D2.astype(complex) + model.coefficient * np.diag(x**2)
    return DiscreteOperator(
        matrix=A,
        grid=grid,
        symbol={"operator": "complex-harmonic", "L": grid.interval[1]},
    )


def build_tensor_model(
    eps: float,
    Ls: tuple = (30.0, 12.0),
    grids: Optional[tuple] = None,
    budget: float = 2e5,
) -> DiscreteOperator:
    """Sparse Kronecker sum  A_tau (x) I + eps^{1/2} I (x) A_xi."""
    if eps <= 0:
        raise ConfigError("eps must be positive")
    if grids is None:
        grids = (grid1d("cheb", 160, (0.0, Ls[0])), grid1d("cheb", 120, (-Ls[1], Ls[1])))
    gt, gx = grids
    dim = gt.n_interior * gx.n_interior
    if dim > budget:
        raise CapabilityError(
            f"tensor dimension {gt.n_interior} x {gx.n_interior} = {dim} "
            f"exceeds the budget {budget:g}"
        )
    op_t = build_halfline_model(1.0, grid=gt)
    op_x = build_harmonic_model(grid=gx)
    At, Ax = op_t.matrix, op_x.matrix
    It = sp.identity(At.shape[0], dtype=complex, format="csr")
    Ix = sp.identity(Ax.shape[0], dtype=complex, format="csr")
    B = sp.kron(sp.csr_matrix(At), Ix) + np.sqrt(eps) * sp.kron(It, sp.csr_matrix(Ax))
    return DiscreteOperator(
        matrix=B.tocsr(),
        grid=TensorGrid2D(x_grid=gt, y_grid=gx),
        symbol={"operator": "tensor-sum", "eps": eps},
        factors=((1.0, At, op_t.grid), (np.sqrt(eps), Ax, op_x.grid)),
    )


# ---------------------------------------------------------------------------
# 2D builders


def _polar_blocks(grid: PolarGrid2D):
    """Diameter-folded polar Laplacian blocks (no axis node).

    Chebyshev nodes r_j on [-R, R] with odd order have no zero node; a point
    (r, theta) with r < 0 is the same physical point as (-r, theta + pi).
    Keeping the positive-r half, the radial derivative matrices split into a
    same-angle block and a flipped block that composes with the half-turn
    permutation in the angle.
    """
    R = grid.radius
    N = grid.n_r
    D, r_full = spectral.cheb_diff(N, -R, R)
    D2 = D @ D
    r_int = r_full[1:-1]
    pos = np.where(r_int > 0)[0]
    neg = np.where(r_int < 0)[0]
    # match each negative node to its mirror positive node
    mirror = np.array([np.argmin(np.abs(r_int[pos] + r_int[k])) for k in neg])
    L_full = D2[1:-1, 1:-1] + np.diag(1.0 / r_int) @ D[1:-1, 1:-1]
    L_same = L_full[np.ix_(pos, pos)]
    L_flip = np.zeros_like(L_same)
    L_flip[:, mirror] = L_full[np.ix_(pos, neg)]
    r_pos = r_int[pos]
    return L_same, L_flip, r_pos


def _fourier_shift_half_turn(n_theta: int) -> sp.csr_matrix:
    idx = (np.arange(n_theta) + n_theta // 2) % n_theta
    return sp.csr_matrix(
        (np.ones(n_theta), (np.arange(n_theta), idx)), shape=(n_theta, n_theta)
    )


def build_2d(domain, V, h: float, grid) -> DiscreteOperator:
    """Sparse matrix of -h^2 Delta + i (V - V0) with Dirichlet boundary.

    domain selects the assembly: PolarGrid2D needs no separate domain
    argument (pass None or the radius), StripGrid2D carries its curve,
    TensorGrid2D means a rectangle with coordinates (x, y).  V is a
    PotentialField (polar/strip) or a callable V(x, y) (rectangle).
    """
    if isinstance(grid, PolarGrid2D):
        return _build_disk(V, h, grid)
    if isinstance(grid, StripGrid2D):
        return _build_strip(V, h, grid)
    if isinstance(grid, TensorGrid2D):
        return _build_rectangle(V, h, grid)
    raise ConfigError(f"unsupported 2D grid {type(grid).__name__}")


def _potential_values(V, pts):
    if isinstance(V, PotentialField):
        return np.asarray(V.value(pts), dtype=float)
    return np.array([V(p[0], p[1]) for p in pts.reshape(-1, 2)], dtype=float).reshape(
        pts.shape[:-1]
    )


def _build_disk(V, h: float, grid: PolarGrid2D) -> DiscreteOperator:
    L_same, L_flip, r_pos = _polar_blocks(grid)
    n_theta = grid.n_theta
    theta = 2.0 * np.pi * np.arange(n_theta) / n_theta
    Dss = spectral.fourier_diff(n_theta, 2.0 * np.pi)[1]
    I_th = sp.identity(n_theta, format="csr")
    P = _fourier_shift_half_turn(n_theta)
    lap = (
        sp.kron(sp.csr_matrix(L_same), I_th)
        + sp.kron(sp.csr_matrix(L_flip), P)
        + sp.kron(sp.diags(1.0 / r_pos**2), sp.csr_matrix(Dss))
    )
    rr, tt = np.meshgrid(r_pos, theta, indexing="ij")
    pts = np.stack((rr * np.cos(tt), rr * np.sin(tt)), axis=-1)
    v = _potential_values(V, pts).ravel()
    v0 = float(np.min(v))
    A = -(h**2) * lap.astype(complex) + 1j * sp.diags(v - v0)
    return DiscreteOperator(
        matrix=A.tocsr(),
        grid=grid,
        symbol={"operator": "disk-schrodinger", "h": h, "V0": v0},
    )


def _build_strip(V, h: float, grid: StripGrid2D) -> DiscreteOperator:
    curve = grid.curve
    n_t, n_s = grid.n_t, grid.n_s
    Dt, t_nodes = spectral.cheb_diff(n_t, 0.0, grid.width)
    Dtt = Dt @ Dt
    Ds, Dss, s_nodes = spectral.fourier_diff(n_s, curve.length)
    t_int = t_nodes[1:-1]
    kap = np.asarray(curve.curvature(s_nodes), dtype=float)
    kap_p = np.asarray(curve.curvature_prime(s_nodes), dtype=float)
    tt, ss = np.meshgrid(t_int, s_nodes, indexing="ij")
    g = 1.0 - tt * kap[None, :]
    if np.min(g) <= 0:
        raise ConfigError("metric factor g = 1 - t*kappa vanished inside the strip")
    I_s = sp.identity(n_s, format="csr")
    I_t = sp.identity(len(t_int), format="csr")
    lap = (
        sp.kron(sp.csr_matrix(Dtt[1:-1, 1:-1]), I_s)
        - sp.diags((kap[None, :] / g).ravel()) @ sp.kron(sp.csr_matrix(Dt[1:-1, 1:-1]), I_s)
        + sp.diags((1.0 / g**2).ravel()) @ sp.kron(I_t, sp.csr_matrix(Dss))
        + sp.diags((tt * kap_p[None, :] / g**3).ravel()) @ sp.kron(I_t, sp.csr_matrix(Ds))
    )
    pts = np.asarray(curve.point(ss.ravel()), dtype=float) - tt.ravel()[:, None] * np.asarray(
        curve.normal(ss.ravel()), dtype=float
    )
    v = _potential_values(V, pts.reshape(len(t_int), n_s, 2)).ravel()
    v0 = float(np.min(v))
    A = -(h**2) * lap.astype(complex) + 1j * sp.diags(v - v0)
    # documented approximation: absorbing Dirichlet at the inner edge
    layer = np.exp(-2.0 / 3.0 * (grid.width / h ** (2.0 / 3.0)) ** 1.5 * 0.5)
    warn = ()
    if layer > 1e-8:
        warn = (
            f"inner-edge truncation level ~{layer:.2e} exceeds 1e-8; "
            "widen the strip or decrease h for certified truncation",
        )
    return DiscreteOperator(
        matrix=A.tocsr(),
        grid=grid,
        symbol={"operator": "strip-schrodinger", "h": h, "V0": v0},
        warnings=warn,
    )


def _build_rectangle(V, h: float, grid: TensorGrid2D) -> DiscreteOperator:
    D2x, x_int = _second_derivative(grid.x_grid)
    D2y, y_int = _second_derivative(grid.y_grid)
    Ix = sp.identity(len(x_int), format="csr")
    Iy = sp.identity(len(y_int), format="csr")
    lap = sp.kron(sp.csr_matrix(D2x), Iy) + sp.kron(Ix, sp.csr_matrix(D2y))
    xx, yy = np.meshgrid(x_int, y_int, indexing="ij")
    pts = np.stack((xx, yy), axis=-1)
    v = _potential_values(V, pts).ravel()
    v0 = float(np.min(v))
    A = -(h**2) * lap.astype(complex) + 1j * sp.diags(v - v0)
    return DiscreteOperator(
        matrix=A.tocsr(),
        grid=grid,
        symbol={"operator": "rectangle-schrodinger", "h": h, "V0": v0},
    )


# ---------------------------------------------------------------------------
# eigensolvers


@dataclass(frozen=True)
class EigenSolveReport:
    """Eigenvalues sorted by real part with matrix-certified residuals."""

    eigenvalues: np.ndarray
    residuals: np.ndarray
    accepted: np.ndarray
    method: str
    grid_meta: dict

    def require_accepted(self) -> None:
        if not bool(np.all(self.accepted)):
            bad = [
                (complex(l), float(r))
                for l, r, ok in zip(self.eigenvalues, self.residuals, self.accepted)
                if not ok
            ]
            raise AccuracyError(f"eigenpairs failed the residual certificate: {bad}")


_RESIDUAL_ACCEPT = 1e-8


def _certify(A, vals, vecs):
    res = np.empty(len(vals))
    for i, lam in enumerate(vals):
        u = vecs[:, i]
        res[i] = np.linalg.norm(A @ u - lam * u) / np.linalg.norm(u)
    return res


def _real_order(vals: np.ndarray) -> np.ndarray:
    """Ascending real part; ties (within 1e-8 scaled) order by |imag|.

    A hard truncation wall produces twin branches whose real parts agree to
    machine precision with the physical boundary mode while the imaginary
    part sits near the potential value at the wall; |imag| ranks the
    physical mode first deterministically.
    """
    order = np.lexsort((np.abs(vals.imag), vals.real))
    tol = 1e-8 * max(1.0, float(np.max(np.abs(vals.real))) if len(vals) else 1.0)
    out = []
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and vals.real[order[j + 1]] - vals.real[order[i]] <= tol:
            j += 1
        group = sorted(order[i : j + 1], key=lambda idx: (abs(vals.imag[idx]), vals.imag[idx]))
        out.extend(group)
        i = j + 1
    return np.array(out, dtype=int)


def _sorted_report(A, vals, vecs, k, shift, method, grid_meta) -> EigenSolveReport:
    if shift is None:
        order = _real_order(vals)
    else:
        order = np.argsort(np.abs(vals - shift))
    pick = order[:k]
    vals, vecs = vals[pick], vecs[:, pick]
    final = _real_order(vals)
    vals, vecs = vals[final], vecs[:, final]
    res = _certify(A, vals, vecs)
    return EigenSolveReport(
        eigenvalues=vals,
        residuals=res,
        accepted=res <= _RESIDUAL_ACCEPT,
        method=method,
        grid_meta=grid_meta,
    )


def _tensor_leftmost(op: DiscreteOperator, k: int, shift) -> EigenSolveReport:
    """Separable path: per-factor dense solves + certificates against the
    assembled sparse Kronecker matrix."""
    (ca, Aa, ga), (cb, Ab, gb) = op.factors
    wa, va = scipy.linalg.eig(np.asarray(Aa))
    wb, vb = scipy.linalg.eig(np.asarray(Ab))
    ia = _real_order(wa)[: min(k, len(wa))]
    ib = _real_order(wb)[: min(k, len(wb))]
    combos = [
        (ca * wa[i] + cb * wb[j], i, j) for i in ia for j in ib
    ]
    all_vals = np.array([c[0] for c in combos])
    keep = _real_order(all_vals)[:k]
    combos = [combos[i] for i in keep]
    vals = np.array([c[0] for c in combos])
    vecs = np.column_stack(
        [np.kron(va[:, i], vb[:, j]) for (_, i, j) in combos]
    )
    res = _certify(op.matrix, vals, vecs)
    return EigenSolveReport(
        eigenvalues=vals,
        residuals=res,
        accepted=res <= _RESIDUAL_ACCEPT,
        method="dense-qr",
        grid_meta={"separable": True, "dims": op.matrix.shape[0]},
    )


def leftmost_eigenvalues(
    op: DiscreteOperator,
    k: int = 1,
    shift: Optional[complex] = None,
    method: Optional[str] = None,
    maxiter: int = 300,
) -> EigenSolveReport:
    """k eigenvalues (nearest `shift` if given, else smallest real part).

    Dense QR for dimension <= 3000, else shift-invert Arnoldi with a sparse
    LU; a factorization failure (shift hits an eigenvalue) retries with a
    jittered shift.  Residuals are recomputed from the assembled matrix.
    `method` forces "dense-qr" or "shift-invert-arnoldi" for dual-route
    cross-checks.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    meta = {"dim": op.dim, "operator": op.symbol.get("operator", "?")}
    if method is None:
        if op.factors is not None and op.dim > 3000:
            return _tensor_leftmost(op, k, shift)
        method = "dense-qr" if op.dim <= 3000 else "shift-invert-arnoldi"
    if method == "dense-qr":
        if op.dim > 3000:
            raise CapabilityError(f"dense path capped at 3000 unknowns, got {op.dim}")
        A = op.matrix.toarray() if sp.issparse(op.matrix) else np.asarray(op.matrix)
        vals, vecs = scipy.linalg.eig(A)
        return _sorted_report(A, vals, vecs, k, shift, "dense-qr", meta)
    if method != "shift-invert-arnoldi":
        raise ConfigError(f"unknown eigensolver method {method!r}")
    if shift is None:
        raise ConfigError("shift-invert needs a target shift")
    A = sp.csc_matrix(op.matrix)
    sigma = complex(shift)
    last_exc: Optional[Exception] = None
    for attempt in range(4):
        try:
            vals, vecs = spla.eigs(
                A,
                k=k,
                sigma=sigma,
                which="LM",
                maxiter=maxiter,
                v0=np.full(A.shape[0], 1.0 + 0.5j),
            )
            return _sorted_report(A, vals, vecs, k, None, "shift-invert-arnoldi", meta)
        except spla.ArpackNoConvergence as exc:
            err = AccuracyError(
                f"shift-invert Arnoldi did not converge within the restart "
                f"budget; best iterate carries {len(exc.eigenvalues)} value(s)"
            )
            err.best_eigenvalues = exc.eigenvalues
            err.best_eigenvectors = exc.eigenvectors
            raise err from exc
        except RuntimeError as exc:  # singular factorization: shift hit spectrum
            last_exc = exc
            sigma = sigma + (1.0 + 1.0j) * 1e-6 * max(1.0, abs(sigma)) * (attempt + 1)
    raise AccuracyError(f"sparse factorization kept failing near {shift}: {last_exc}")


# ---------------------------------------------------------------------------
# export


def export_triplets(op: DiscreteOperator, path) -> None:
    """Coordinate triplet text dump: `i j re im` per structurally stored entry."""
    M = op.matrix.tocoo() if sp.issparse(op.matrix) else sp.coo_matrix(op.matrix)
    with open(path, "w", encoding="ascii") as fh:
        fh.write(f"% {op.symbol.get('operator', 'operator')} {M.shape[0]} {M.shape[1]}\n")
        for i, j, v in zip(M.row, M.col, M.data):
            fh.write(f"{i} {j} {v.real:.17e} {v.imag:.17e}\n")
