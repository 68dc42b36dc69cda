"""Shared 1D discretization building blocks.

Chebyshev collocation (differentiation matrices, Clenshaw-Curtis weights,
barycentric interpolation), periodic Fourier differentiation matrices, and
plain second-order finite differences.  All node sets are returned ascending;
matrices act on values sampled at those nodes.
"""

import numpy as np


def cheb_nodes(n: int, a: float = -1.0, b: float = 1.0) -> np.ndarray:
    """n+1 Chebyshev extreme points on [a, b], ascending."""
    x = np.cos(np.pi * np.arange(n + 1) / n)  # descending on [-1, 1]
    x = x[::-1]
    return (x + 1.0) * (b - a) / 2.0 + a


def cheb_diff(n: int, a: float = -1.0, b: float = 1.0):
    """Chebyshev differentiation matrix and its (ascending) nodes on [a, b]."""
    if n < 1:
        raise ValueError("need at least two points")
    x = np.cos(np.pi * np.arange(n + 1) / n)
    c = np.hstack([2.0, np.ones(n - 1), 2.0]) * (-1.0) ** np.arange(n + 1)
    X = np.tile(x, (n + 1, 1)).T
    dX = X - X.T
    D = np.outer(c, 1.0 / c) / (dX + np.eye(n + 1))
    D -= np.diag(D.sum(axis=1))
    # reorder ascending and rescale to [a, b]
    D = D[::-1, ::-1] * (2.0 / (b - a))
    return D, cheb_nodes(n, a, b)


def clencurt(n: int, a: float = -1.0, b: float = 1.0) -> np.ndarray:
    """Clenshaw-Curtis quadrature weights for cheb_nodes(n, a, b)."""
    theta = np.pi * np.arange(n + 1) / n
    w = np.zeros(n + 1)
    ii = np.arange(1, n)
    v = np.ones(n - 1)
    if n % 2 == 0:
        w[0] = w[n] = 1.0 / (n**2 - 1)
        for k in range(1, n // 2):
            v -= 2.0 * np.cos(2 * k * theta[ii]) / (4 * k * k - 1)
        v -= np.cos(n * theta[ii]) / (n**2 - 1)
    else:
        w[0] = w[n] = 1.0 / n**2
        for k in range(1, (n - 1) // 2 + 1):
            v -= 2.0 * np.cos(2 * k * theta[ii]) / (4 * k * k - 1)
    w[ii] = 2.0 * v / n
    return w[::-1] * (b - a) / 2.0


def bary_weights(n: int) -> np.ndarray:
    """Barycentric weights for Chebyshev extreme points (ascending order)."""
    w = (-1.0) ** np.arange(n + 1)
    w[0] *= 0.5
    w[n] *= 0.5
    return w[::-1]


def bary_interp(x_nodes, values, x_eval):
    """Barycentric interpolation from Chebyshev nodes to arbitrary points."""
    x_nodes = np.asarray(x_nodes)
    values = np.asarray(values)
    x_eval = np.atleast_1d(np.asarray(x_eval, dtype=float))
    w = bary_weights(len(x_nodes) - 1)
    out = np.empty(x_eval.shape, dtype=values.dtype)
    for i, xe in enumerate(x_eval):
        diff = xe - x_nodes
        hit = np.flatnonzero(diff == 0.0)
        if hit.size:
            out[i] = values[hit[0]]
            continue
        q = w / diff
        out[i] = q @ values / q.sum()
    return out


def fourier_diff(n: int, length: float):
    """Periodic spectral first/second derivative matrices on [0, length).

    n must be even.  Returns (D1, D2, nodes).
    """
    if n % 2:
        raise ValueError("fourier_diff needs an even number of points")
    h = 2.0 * np.pi / n
    j = np.arange(1, n)
    col1 = np.zeros(n)
    col1[1:] = 0.5 * (-1.0) ** j / np.tan(j * h / 2.0)
    row1 = -col1
    D1 = np.empty((n, n))
    col2 = np.zeros(n)
    col2[0] = -np.pi**2 / (3.0 * h**2) - 1.0 / 6.0
    col2[1:] = -((-1.0) ** j) / (2.0 * np.sin(j * h / 2.0) ** 2)
    D2 = np.empty((n, n))
    for i in range(n):
        D1[i] = np.roll(col1, i)
        D2[i] = np.roll(col2, i)
    # the roll above fills D[i, j] = col[(j - i) mod n]; the circulant with
    # first *column* col1 is its transpose (col1 is anti-periodic, col2 even)
    D1 = D1.T
    D2 = D2.T
    scale = 2.0 * np.pi / length
    nodes = np.arange(n) * length / n
    return D1 * scale, D2 * scale**2, nodes


def fd2_dirichlet(n: int, a: float, b: float):
    """Second-order FD second derivative on n interior nodes, Dirichlet ends.

    Returns (D2, nodes); D2 is symmetric negative definite (dense).
    """
    dx = (b - a) / (n + 1)
    main = np.full(n, -2.0)
    off = np.ones(n - 1)
    D2 = (np.diag(main) + np.diag(off, 1) + np.diag(off, -1)) / dx**2
    nodes = a + dx * np.arange(1, n + 1)
    return D2, nodes


def trapezoid_weights(nodes: np.ndarray) -> np.ndarray:
    """Trapezoid quadrature weights for arbitrary sorted nodes."""
    nodes = np.asarray(nodes, dtype=float)
    w = np.zeros_like(nodes)
    d = np.diff(nodes)
    w[:-1] += d / 2.0
    w[1:] += d / 2.0
    return w
