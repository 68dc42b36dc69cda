"""One-dimensional eigenvalue expansion engine.

For -h^2 d^2/dx^2 + iV on (0, a) with Dirichlet ends and V' nonzero at an
endpoint, the eigenvalues near iV(endpoint) expand in powers of eps = h^{2/3}
after the boundary rescaling x = eps*y:

    A_eps = -d^2/dy^2 + i sum_j beta_j eps^j y^{j+1},
    beta_j = V^{(j+1)}(0)/(j+1)!,

so A_eps = A_0 + perturbation with A_0 the half-line complex Airy operator.
The engine computes the coefficients lambda_j by the Fredholm solvability
recursion, builds the corrector profiles u_j (gauge <v_n, u_j> = 0 in the
bilinear pairing), assembles the cutoff quasimode, and certifies the residual
against the full potential.

Physical reconstruction: lambda_n(h) = i V(endpoint) + h^{2/3} sum_j
lambda_j h^{2j/3}.  The right endpoint is handled by reflecting the
potential, which adds the i(V(a) - V(0)) offset relative to the left-end
value.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import spectral
from .airy import ai_zero
from .errors import (
    AccuracyError,
    CapabilityError,
    ConfigError,
    HypothesisViolation,
    SolvabilityError,
)
from .models import HalfLineAiryModel, airy_halfline_eigenfunction, airy_halfline_spectrum

TAYLOR_MAX_ORDER = 10
SOLVABILITY_TOL = 1e-6
CORRECTOR_RESIDUAL_TOL = 1e-8
DEFAULT_GRID_N = 360

_EPS = np.finfo(float).eps


@dataclass(frozen=True)
class PotentialTaylor:
    """Boundary jet of the potential in endpoint-inward coordinates.

    betas[j] = W^{(j+1)}(0)/(j+1)! where W(y) = V(y) for the left endpoint
    and W(y) = V(a - y) for the right one; v0 = W(0) is the endpoint value.
    """

    betas: tuple
    endpoint: str = "left"
    a: float = 1.0
    v0: float = 0.0
    coeff_errors: tuple = ()

    def __post_init__(self):
        if self.endpoint not in ("left", "right"):
            raise ValueError(f"endpoint must be 'left' or 'right', got {self.endpoint!r}")
        scale = max(1.0, max(abs(b) for b in self.betas))
        if abs(self.betas[0]) < 1e-8 * scale:
            raise HypothesisViolation(
                f"slope at the {self.endpoint} endpoint is degenerate "
                f"(beta0 = {self.betas[0]:.3e}); the boundary-layer expansion needs V' != 0"
            )


@dataclass(frozen=True)
class ScalingInfo:
    """How the series maps back to the physical eigenvalue."""

    endpoint: str
    a: float
    v0: float
    beta0: float
    annotations: tuple = ()


@dataclass(frozen=True)
class ExpansionSeries:
    mode_index: int
    order: int
    lambdas: tuple
    scaling: ScalingInfo
    correctors: tuple = field(repr=False, default=())
    grid: np.ndarray = field(repr=False, default=None)

    def rescaled_value(self, eps: float) -> complex:
        """nu(eps) = sum lambda_j eps^j."""
        return complex(sum(l * eps**j for j, l in enumerate(self.lambdas)))

    def physical_value(self, h: float) -> complex:
        """lambda_n(h) = i*V(endpoint) + h^{2/3} nu(h^{2/3})."""
        eps = h ** (2.0 / 3.0)
        return 1j * self.scaling.v0 + eps * self.rescaled_value(eps)


@dataclass(frozen=True)
class CutoffSpec:
    """C^2 plateau cutoff: 1 on [0, c0/2], 0 beyond c0 (scaled units)."""

    c0: float = 1.0
    rho: float = 2.0 / 3.0
    profile: str = "quintic-C2-bump"

    def __post_init__(self):
        if self.c0 <= 0:
            raise ValueError("cutoff plateau width c0 must be positive")
        if not 0.0 < self.rho < 1.0:
            raise ValueError("cutoff exponent rho must lie in (0, 1)")

    def chi(self, x, eps: float):
        """Evaluate the cutoff at rescaled coordinates x for a given eps."""
        s = eps ** (self.rho - 1.0)
        u = (np.abs(np.asarray(x, dtype=float)) / s - self.c0 / 2.0) / (self.c0 / 2.0)
        u = np.clip(u, 0.0, 1.0)
        return 1.0 - u**3 * (10.0 - 15.0 * u + 6.0 * u**2)

    def support_radius(self, eps: float) -> float:
        return self.c0 * eps ** (self.rho - 1.0)


@dataclass(frozen=True)
class QuasimodeProfile:
    values: np.ndarray
    grid: np.ndarray
    correctors: tuple = field(repr=False, default=())
    corrector_grid: np.ndarray = field(repr=False, default=None)
    cutoff: CutoffSpec = None
    eps: float = 0.0


# ---------------------------------------------------------------------------
# jet extraction


def _fornberg_weights(m: int, offsets: np.ndarray) -> np.ndarray:
    """Finite-difference weights for the m-th derivative at 0 on the given
    stencil offsets (Fornberg's recurrence)."""
    n = len(offsets)
    delta = np.zeros((m + 1, n, n))
    delta[0, 0, 0] = 1.0
    c1 = 1.0
    for i in range(1, n):
        c2 = 1.0
        for j in range(i):
            c3 = offsets[i] - offsets[j]
            c2 *= c3
            for k in range(min(i, m) + 1):
                delta[k, i, j] = (
                    offsets[i] * delta[k, i - 1, j] - k * delta[k - 1, i - 1, j]
                ) / c3
        for k in range(min(i, m) + 1):
            delta[k, i, i] = (
                c1 / c2 * (k * delta[k - 1, i - 1, i - 1] - offsets[i - 1] * delta[k, i - 1, i - 1])
            )
        c1 = c2
    return delta[m, n - 1, :]


def _derivative_richardson(W, m: int, base_step: float):
    """m-th derivative of W at 0 by symmetric stencils, Richardson-extrapolated.

    Returns (value, error_estimate)."""
    K = m + 3  # stencil wider than minimal: high base accuracy order
    offsets = np.arange(-K, K + 1, dtype=float)
    w = _fornberg_weights(m, offsets)
    # leading truncation order of the symmetric stencil
    p = 2 * ((2 * K - m) // 2) + 2

    vals = []
    round_floor = 0.0
    for lvl in range(3):
        d = base_step / 2**lvl
        samples = np.array([W(o * d) for o in offsets])
        if not np.all(np.isfinite(samples)):
            raise ValueError(
                f"potential evaluator returned non-finite values within reach "
                f"{offsets[-1] * d:.2f} of the endpoint; reduce base_step"
            )
        vals.append(np.dot(w, samples) / d**m)
        round_floor = max(round_floor, 32.0 * _EPS * np.dot(np.abs(w), np.abs(samples)) / d**m)
    r1a = (2**p * vals[1] - vals[0]) / (2**p - 1)
    r1b = (2**p * vals[2] - vals[1]) / (2**p - 1)
    q = p + 2
    r2 = (2**q * r1b - r1a) / (2**q - 1)
    err = abs(r2 - r1b) + abs(r1b - r1a) / 2**p + round_floor
    return r2, err


def taylor_from_callable(V, endpoint: str = "left", N: int = 6, a: float = 1.0,
                         base_step: float = 0.8) -> PotentialTaylor:
    """Extract the boundary jet beta_0..beta_N of a potential evaluator.

    The callable must be evaluable in a two-sided neighborhood of the
    endpoint out to roughly (N+4)*base_step; reduce base_step for potentials
    with nearby singularities (at some accuracy cost for high orders).
    Coefficients come with per-coefficient error estimates.
    """
    if N > TAYLOR_MAX_ORDER:
        raise CapabilityError(f"jet order N={N} exceeds supported maximum {TAYLOR_MAX_ORDER}")
    if endpoint == "left":
        W = V
    elif endpoint == "right":
        W = lambda y: V(a - y)  # noqa: E731
    else:
        raise ValueError(f"endpoint must be 'left' or 'right', got {endpoint!r}")
    v0 = float(W(0.0))
    betas, errors = [], []
    for j in range(N + 1):
        m = j + 1
        fact = float(math.factorial(m))
        step = base_step
        while True:
            try:
                deriv, err = _derivative_richardson(W, m, step)
                break
            except ValueError:
                step *= 0.5
                if step < base_step / 16.0:
                    raise
        betas.append(deriv / fact)
        errors.append(err / fact)
    return PotentialTaylor(
        betas=tuple(betas), endpoint=endpoint, a=a, v0=v0, coeff_errors=tuple(errors)
    )


# ---------------------------------------------------------------------------
# corrector solves and the solvability recursion


def _mode_index_for(model: HalfLineAiryModel, lambda0: complex) -> int:
    rot = np.exp(-model.sign * 2j * np.pi / 3.0)
    scale = abs(model.beta0) ** (2.0 / 3.0)
    mu = lambda0 / (scale * rot)
    if abs(mu.imag) > 1e-6 * max(1.0, abs(mu)):
        raise ValueError(f"lambda0 = {lambda0} is not on the half-line Airy ray")
    for n in range(1, 65):
        if abs(mu.real - ai_zero(n)) < 1e-6:
            return n
    raise ValueError(f"lambda0 = {lambda0} does not match any supported mode")


def solve_corrector(rhs, model: HalfLineAiryModel, lambda0: complex, grid=None,
                    weights=None) -> np.ndarray:
    """Solve (A_0 - lambda0) u = rhs with u(0) = 0, decay at L, <v_n, u> = 0.

    The singular operator is regularized by bordering with the kernel
    direction (Fredholm alternative); the bordering multiplier recovers the
    kernel component of rhs, and a component beyond tolerance raises
    SolvabilityError.  The returned profile's discrete ODE residual is
    certified below 1e-8 * ||rhs||.
    """
    rhs = np.asarray(rhs, dtype=complex)
    if grid is None:
        nc = len(rhs) - 1
        length = 40.0 / abs(model.beta0) ** (1.0 / 3.0)
        grid = spectral.cheb_nodes(nc, 0.0, length)
    grid = np.asarray(grid, dtype=float)
    nc = len(grid) - 1
    if weights is None:
        weights = spectral.clencurt(nc, grid[0], grid[-1])

    n_mode = _mode_index_for(model, lambda0)
    vn = airy_halfline_eigenfunction(model, n_mode, grid).eigenfunction

    rhs_norm = float(np.sqrt(np.sum(weights * np.abs(rhs) ** 2)))
    if rhs_norm == 0.0:
        return np.zeros_like(rhs)

    D, x = spectral.cheb_diff(nc, grid[0], grid[-1])
    M = -(D @ D) + np.diag(1j * model.beta0 * x) - lambda0 * np.eye(nc + 1)
    M[0, :] = 0.0
    M[0, 0] = 1.0  # Dirichlet at 0
    M[-1, :] = 0.0
    M[-1, -1] = 1.0  # enforced decay at L

    b = rhs.copy()
    b[0] = 0.0
    b[-1] = 0.0

    big = np.zeros((nc + 2, nc + 2), dtype=complex)
    big[: nc + 1, : nc + 1] = M
    big[: nc + 1, -1] = vn  # range completion along the kernel direction
    big[-1, : nc + 1] = weights * vn  # bilinear orthogonality row
    sol = np.linalg.solve(big, np.concatenate([b, [0.0]]))
    u, s = sol[:-1], sol[-1]

    if abs(s) > SOLVABILITY_TOL * rhs_norm:
        raise SolvabilityError(
            f"kernel component {abs(s):.3e} of the right-hand side exceeds "
            f"{SOLVABILITY_TOL:.0e} * ||rhs|| = {SOLVABILITY_TOL * rhs_norm:.3e}"
        )

    # gauge polish and residual certificate
    u = u - np.sum(weights * vn * u) * vn
    resid_vec = (M @ u) - (b - s * vn)
    resid = float(np.sqrt(np.sum(weights * np.abs(resid_vec) ** 2)))
    if resid > CORRECTOR_RESIDUAL_TOL * rhs_norm:
        raise AccuracyError(
            f"corrector ODE residual {resid:.3e} exceeds "
            f"{CORRECTOR_RESIDUAL_TOL:.0e} * ||rhs||; refine the grid"
        )
    return u


def lambda_series(pt: PotentialTaylor, n: int, N: int, grid_n: int = DEFAULT_GRID_N,
                  length: float = None) -> ExpansionSeries:
    """Expansion coefficients lambda_0..lambda_N for mode n, with correctors.

    lambda_0 is the half-line Airy eigenvalue (same code path as the model
    spectrum); each lambda_k then follows from bilinear solvability of

        (A_0 - lambda_0) u_k = -sum_{j=1}^{k} (i beta_j y^{j+1} - lambda_j) u_{k-j}

    under the gauge <v_n, u_k> = 0.
    """
    if N < 0:
        raise ValueError("expansion order N must be >= 0")
    model = HalfLineAiryModel(beta0=pt.betas[0])
    if length is None:
        length = 40.0 / abs(model.beta0) ** (1.0 / 3.0)
    grid = spectral.cheb_nodes(grid_n, 0.0, length)
    weights = spectral.clencurt(grid_n, 0.0, length)

    lam0 = airy_halfline_spectrum(model, n)[-1]
    vn = airy_halfline_eigenfunction(model, n, grid).eigenfunction

    def pair(f):
        return complex(np.sum(weights * vn * f))

    x_pow = {j: grid ** (j + 1) for j in range(1, len(pt.betas))}
    lambdas = [lam0]
    correctors = [vn]
    for k in range(1, N + 1):
        lam_k = 0.0j
        for j in range(1, min(k, len(pt.betas) - 1) + 1):
            lam_k += 1j * pt.betas[j] * pair(x_pow[j] * correctors[k - j])
        lambdas.append(lam_k)

        rhs = np.zeros_like(vn)
        for j in range(1, k + 1):
            if j < len(pt.betas):
                rhs -= 1j * pt.betas[j] * x_pow[j] * correctors[k - j]
            rhs += lambdas[j] * correctors[k - j]

        # solvability certificate: kernel component of the assembled rhs
        rhs_norm = float(np.sqrt(np.sum(weights * np.abs(rhs) ** 2)))
        if rhs_norm > 0 and abs(pair(rhs)) > 1e-9 * rhs_norm:
            raise SolvabilityError(
                f"order-{k} right-hand side retains kernel component "
                f"{abs(pair(rhs)):.3e} against ||rhs|| = {rhs_norm:.3e}"
            )
        correctors.append(solve_corrector(rhs, model, lam0, grid=grid, weights=weights))

    annotations = ()
    if pt.endpoint == "right":
        annotations = (
            "right-endpoint series computed from the reflected potential; "
            "physical offset is i*V(a). An alternate tabulated offset that "
            "also subtracts the interval length a is dimensionally "
            "inconsistent and not used.",
        )
    scaling = ScalingInfo(
        endpoint=pt.endpoint, a=pt.a, v0=pt.v0, beta0=pt.betas[0], annotations=annotations
    )
    return ExpansionSeries(
        mode_index=n,
        order=N,
        lambdas=tuple(lambdas),
        scaling=scaling,
        correctors=tuple(correctors),
        grid=grid,
    )


# ---------------------------------------------------------------------------
# quasimode assembly and residual certification


def assemble_quasimode(series: ExpansionSeries, correctors, eps: float,
                       cutoff: CutoffSpec, grid_n: int = None) -> QuasimodeProfile:
    """psi_eps = chi_eps * sum_j u_j eps^j on the rescaled half-line grid.

    The grid extends exactly to the cutoff support radius, so the returned
    profile is compactly supported on-grid and vanishes at both ends.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    plateau = cutoff.support_radius(eps) / 2.0
    if plateau < 10.0:
        raise ConfigError(
            f"cutoff plateau radius {plateau:.2f} intrudes on the quasimode "
            "core (needs c0*eps^(rho-1)/2 >= 10); pick a wider cutoff or smaller eps"
        )
    corr_grid = series.grid
    L_corr = corr_grid[-1]
    L_psi = cutoff.support_radius(eps)
    if grid_n is None:
        grid_n = max(400, len(corr_grid) - 1)
    grid = spectral.cheb_nodes(grid_n, 0.0, L_psi)

    total = np.zeros(grid_n + 1, dtype=complex)
    for j, u in enumerate(correctors):
        vals = np.where(
            grid <= L_corr,
            spectral.bary_interp(corr_grid, u, np.minimum(grid, L_corr)),
            0.0,
        )
        total += eps**j * vals
    psi = cutoff.chi(grid, eps) * total
    psi[0] = 0.0
    psi[-1] = 0.0
    return QuasimodeProfile(
        values=psi,
        grid=grid,
        correctors=tuple(correctors),
        corrector_grid=corr_grid,
        cutoff=cutoff,
        eps=eps,
    )


def _residual_on_grid(psi_vals, grid, series: ExpansionSeries, V, eps: float) -> float:
    nc = len(grid) - 1
    D, x = spectral.cheb_diff(nc, grid[0], grid[-1])
    w = spectral.clencurt(nc, grid[0], grid[-1])
    sc = series.scaling
    if sc.endpoint == "left":
        x_phys = eps * x
    else:
        x_phys = sc.a - eps * x
    Vvals = np.array([V(xp) for xp in x_phys], dtype=float)
    pot = 1j * (Vvals - sc.v0) / eps
    nu = series.rescaled_value(eps)
    r_vec = -(D @ (D @ psi_vals)) + (pot - nu) * psi_vals
    num = float(np.sqrt(np.sum(w[1:-1] * np.abs(r_vec[1:-1]) ** 2)))
    den = float(np.sqrt(np.sum(w * np.abs(psi_vals) ** 2)))
    return num / den


def residual_norm(psi: QuasimodeProfile, series: ExpansionSeries, V, eps: float) -> float:
    """r(eps, N) = ||(A_eps - nu^N(eps)) psi|| / ||psi|| with the full potential.

    The rescaled operator applies the true V (not its jet), so the residual
    measures the expansion against the actual problem.  Computed at two grid
    resolutions; disagreement beyond 10% above the noise floor raises
    AccuracyError.
    """
    n_coarse = len(psi.grid) - 1
    r1 = _residual_on_grid(psi.values, psi.grid, series, V, eps)
    fine = assemble_quasimode(series, psi.correctors, eps, psi.cutoff, grid_n=2 * n_coarse)
    r2 = _residual_on_grid(fine.values, fine.grid, series, V, eps)
    if max(r1, r2) > 1e-9 and abs(r1 - r2) > 0.10 * max(r1, r2):
        raise AccuracyError(
            f"residual changed from {r1:.3e} to {r2:.3e} under grid doubling; "
            "the profile is under-resolved"
        )
    return r2
