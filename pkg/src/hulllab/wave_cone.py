"""Wave cone membership and the direction recipes used by the laminate builders.

A direction ``d = (a, b, Mb)`` is in the wave cone when some ``(xi, c)`` with
``xi != 0`` solves the stacked 8x4 system::

    [ Mb   | a ]
    [ Mb^T | b ]  (xi)
    [ a^T  | 0 ]  (c )  = 0
    [ b^T  | 0 ]

Membership is decided from the null space of that matrix, which covers every
degenerate configuration without case analysis.
"""

from __future__ import annotations

import math

import numpy as np

from .linalg import DEFAULT_RANK_TOL, _canonical_sign, cross3, kernel_basis, norm
from .state import Direction, State, _vec


def lambda_matrix(d: Direction) -> np.ndarray:
    L = np.zeros((8, 4))
    L[0:3, 0:3] = d.M_bar
    L[0:3, 3] = d.alpha_bar
    L[3:6, 0:3] = d.M_bar.T
    L[3:6, 3] = d.beta_bar
    L[6, 0:3] = d.alpha_bar
    L[7, 0:3] = d.beta_bar
    return L


def _residual(a, b, m, xi, c: float) -> float:
    # |L (xi, c)| on plain floats: a, b, xi 3-sequences, m the 9 entries of Mb row-major
    x0, x1, x2 = xi
    t0 = m[0] * x0 + m[1] * x1 + m[2] * x2 + c * a[0]
    t1 = m[3] * x0 + m[4] * x1 + m[5] * x2 + c * a[1]
    t2 = m[6] * x0 + m[7] * x1 + m[8] * x2 + c * a[2]
    u0 = m[0] * x0 + m[3] * x1 + m[6] * x2 + c * b[0]
    u1 = m[1] * x0 + m[4] * x1 + m[7] * x2 + c * b[1]
    u2 = m[2] * x0 + m[5] * x1 + m[8] * x2 + c * b[2]
    ra = a[0] * x0 + a[1] * x1 + a[2] * x2
    rb = b[0] * x0 + b[1] * x1 + b[2] * x2
    return math.sqrt(t0 * t0 + t1 * t1 + t2 * t2 + u0 * u0 + u1 * u1 + u2 * u2 + ra * ra + rb * rb)


def witness_residual(d: Direction, xi, c: float) -> float:
    """``|L(d) (xi, c)|`` for a witness normalized to ``|xi| = 1``."""
    x = [float(v) for v in np.asarray(xi, dtype=float).reshape(3)]
    n = math.sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2])
    if n == 0.0:
        return float("inf")
    x = [v / n for v in x]
    return _residual(d.alpha_bar.tolist(), d.beta_bar.tolist(), d.M_bar.ravel().tolist(), x, float(c) / n)


def in_lambda(d: Direction, tol: float = DEFAULT_RANK_TOL):
    """Return a witness ``(xi, c)`` with ``|xi| = 1``, or ``None``.

    Among all kernel vectors the one with the largest spatial fraction
    ``|xi| / |(xi, c)|`` is chosen; the direction is rejected when even that
    fraction is at most ``tol`` (only time-like oscillations remain).
    """
    K = kernel_basis(lambda_matrix(d), tol)
    if K.shape[0] == 0:
        return None
    # maximize |S^T w| over unit w, S = spatial block of the kernel basis
    S = K[:, :3]
    W, sv, _ = np.linalg.svd(S, full_matrices=False)
    if sv[0] <= tol:
        return None
    x = K.T @ W[:, 0]
    xi = x[:3] / sv[0]
    c = x[3] / sv[0]
    sgn = _canonical_sign(xi)
    return sgn * xi, float(sgn * c)


def with_witness(d: Direction, xi, c: float, tol: float = DEFAULT_RANK_TOL) -> Direction:
    """Attach a recipe witness, falling back to the kernel solve if it fails.

    Raises ``ValueError`` when the direction is not in the wave cone at all.
    """
    xi = np.asarray(xi, dtype=float)
    n = norm(xi)
    scale = max(1.0, math.sqrt(float(d.alpha_bar @ d.alpha_bar + d.beta_bar @ d.beta_bar) + float(np.sum(d.M_bar * d.M_bar))))
    if n > tol * scale:
        xi_u, c_u = xi / n, c / n
        if witness_residual(d, xi_u, c_u) <= tol * scale:
            return Direction(d.alpha_bar, d.beta_bar, d.M_bar, (xi_u, c_u))
    w = in_lambda(d, tol)
    if w is None:
        raise ValueError("direction is not in the wave cone")
    return Direction(d.alpha_bar, d.beta_bar, d.M_bar, w)


def move_direction(z: State, abar=None, bbar=None, tol: float = DEFAULT_RANK_TOL) -> Direction:
    """Direction moving exactly one of ``alpha``, ``beta`` with ``M0`` held fixed.

    ``(0, bbar, alpha (x) bbar)`` or ``(abar, 0, abar (x) beta)``.  The witness
    ``xi = bbar x alpha`` (resp. ``abar x beta``), ``c = 0`` annihilates the
    system identically whenever it is nonzero.
    """
    if (abar is None) == (bbar is None):
        raise ValueError("give exactly one of abar, bbar")
    zero = np.zeros(3)
    if abar is None:
        v = _vec(bbar)
        a, b, Mb = zero, v, np.multiply.outer(z.alpha, v)
        xi = cross3(v, z.alpha)
    else:
        v = _vec(abar)
        a, b, Mb = v, zero, np.multiply.outer(v, z.beta)
        xi = cross3(v, z.beta)
    n = norm(xi)
    if n > tol * max(1.0, norm(v)):
        return Direction._trusted(a, b, Mb, (xi / n, 0.0))
    return with_witness(Direction(a, b, Mb), xi, 0.0, tol)


def direction_from_vectors(z: State, abar, bbar, tol: float = DEFAULT_RANK_TOL) -> Direction:
    """Build the rank-one-compatible direction through ``z``.

    ``M_bar = alpha (x) bbar + abar (x) beta - (2 alpha.abar / |abar|^2) abar (x) bbar``.
    Along this direction the flux defect changes only by multiples of
    ``abar (x) bbar``.  Requires ``alpha - beta``, ``abar`` and ``bbar`` to be
    coplanar, which is what makes the direction a wave-cone element.
    """
    a = [float(v) for v in np.asarray(abar, dtype=float).reshape(3)]
    b = [float(v) for v in np.asarray(bbar, dtype=float).reshape(3)]
    al, be = z.alpha.tolist(), z.beta.tolist()
    na = math.sqrt(a[0] * a[0] + a[1] * a[1] + a[2] * a[2])
    nb = math.sqrt(b[0] * b[0] + b[1] * b[1] + b[2] * b[2])
    if na == 0.0 or not math.isfinite(na + nb):
        raise ValueError("abar must be nonzero and finite")
    w = [al[i] - be[i] for i in range(3)]
    cab = _tcross(a, b)
    triple = w[0] * cab[0] + w[1] * cab[1] + w[2] * cab[2]
    nw = math.sqrt(w[0] * w[0] + w[1] * w[1] + w[2] * w[2])
    if abs(triple) > tol * max(1.0, nw * na * nb):
        raise ValueError(f"alpha - beta, abar, bbar are not coplanar (triple product {triple:.3g})")
    k = 2.0 * (al[0] * a[0] + al[1] * a[1] + al[2] * a[2]) / (na * na)
    m = [al[i] * b[j] + a[i] * be[j] - k * a[i] * b[j] for i in range(3) for j in range(3)]

    if math.sqrt(cab[0] * cab[0] + cab[1] * cab[1] + cab[2] * cab[2]) > tol * na * max(nb, 1.0):
        xi = cab
    else:
        # abar parallel to bbar (or bbar = 0)
        xi = _tcross(w, a)
    nx = math.sqrt(xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2])
    c = -(al[0] * xi[0] + al[1] * xi[1] + al[2] * xi[2])
    A, B, Mb = np.array(a), np.array(b), np.array(m).reshape(3, 3)
    scale = max(1.0, math.sqrt(na * na + nb * nb + sum(v * v for v in m)))
    if nx > tol * scale:
        xi_u = [v / nx for v in xi]
        if _residual(a, b, m, xi_u, c / nx) <= tol * scale:
            return Direction._trusted(A, B, Mb, (np.array(xi_u), c / nx))
    return with_witness(Direction(A, B, Mb), xi, c, tol)


def _tcross(x, y) -> tuple:
    return (x[1] * y[2] - x[2] * y[1], x[2] * y[0] - x[0] * y[2], x[0] * y[1] - x[1] * y[0])
