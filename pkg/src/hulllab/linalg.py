"""Small fixed-size linear algebra used by every oracle.

Everything here works on plain ``numpy`` arrays: 3-vectors of shape ``(3,)``
and 3x3 matrices of shape ``(3, 3)``.  LAPACK does the factorizations; this
module only fixes conventions (ordering, sign canonicalization, thresholds).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

DEFAULT_RANK_TOL = 1e-9


@dataclass(frozen=True)
class SingularTriple:
    """``M = U @ diag(sigma) @ V.T`` with ``sigma`` sorted descending."""

    sigma: np.ndarray
    U: np.ndarray
    V: np.ndarray

    def reconstruct(self) -> np.ndarray:
        return (self.U * self.sigma) @ self.V.T


def _finite(a: np.ndarray, what: str) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{what} has non-finite entries")
    return a


def singular_values(M) -> SingularTriple:
    M = _finite(M, "matrix")
    if M.shape != (3, 3):
        raise ValueError(f"expected a 3x3 matrix, got shape {M.shape}")
    U, sigma, Vt = np.linalg.svd(M)
    return SingularTriple(sigma, U, Vt.T)


def nuclear_norm(M) -> float:
    """Sum of the singular values (the Ky Fan / trace norm)."""
    M = _finite(M, "matrix")
    return float(np.linalg.svd(M, compute_uv=False).sum())


def nuclear_norms(Ms: np.ndarray) -> np.ndarray:
    """Batched :func:`nuclear_norm` over a stack of shape ``(n, 3, 3)``."""
    return np.linalg.svd(np.asarray(Ms, dtype=float), compute_uv=False).sum(axis=-1)


def _canonical_sign(u: np.ndarray) -> float:
    # largest-magnitude component made positive; first index wins ties
    return 1.0 if u[int(np.argmax(np.abs(u)))] >= 0 else -1.0


def numerical_rank(M, tol: float = DEFAULT_RANK_TOL) -> int:
    """Number of singular values above ``tol * max(sigma_1, 1)``."""
    sigma = np.linalg.svd(_finite(M, "matrix"), compute_uv=False)
    return int(np.count_nonzero(sigma > tol * max(sigma[0], 1.0)))


def rank_one_factor(M, tol: float = DEFAULT_RANK_TOL):
    """Factor ``M ~ sigma * outer(u, v)`` with unit ``u``, ``v``.

    Returns ``None`` unless ``M`` is numerically rank one, i.e. the leading
    singular value exceeds ``tol`` and the second one is at most
    ``tol * max(sigma_1, 1)``.  The pair is unique up to the joint flip
    ``(u, v) -> (-u, -v)``; we pick the representative whose largest
    component of ``u`` is positive.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    svd = singular_values(M)
    s1, s2 = svd.sigma[0], svd.sigma[1]
    if s1 <= tol or s2 > tol * max(s1, 1.0):
        return None
    u = svd.U[:, 0]
    v = svd.V[:, 0]
    sgn = _canonical_sign(u)
    return sgn * u, sgn * v, float(s1)


def kernel_basis(A, tol: float = DEFAULT_RANK_TOL) -> np.ndarray:
    """Orthonormal basis (as rows) of the numerical null space of ``A``.

    Singular values below ``tol * sigma_max`` count as zero; when ``A`` is
    itself negligible (``sigma_max <= tol``) the whole domain is returned.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    A = _finite(A, "matrix")
    if A.ndim != 2 or max(A.shape) > 8:
        raise ValueError(f"expected a matrix with at most 8 rows/columns, got {A.shape}")
    n = A.shape[1]
    _, sigma, Vt = np.linalg.svd(A, full_matrices=True)
    smax = sigma[0] if sigma.size else 0.0
    if smax <= tol:
        return np.eye(n)
    rank = int(np.count_nonzero(sigma > tol * smax))
    return Vt[rank:].copy()


def solve_quadratic(a: float, b: float, c: float):
    """Real roots of ``a t^2 + b t + c = 0`` in increasing order.

    Uses the cancellation-free pairing: the larger-magnitude root comes from
    ``q = -(b + sign(b) sqrt(disc)) / 2`` and its companion from ``c / q``.
    Returns ``None`` for a negative discriminant.
    """
    if a == 0:
        raise ValueError("leading coefficient is zero; not a quadratic")
    disc = b * b - 4.0 * a * c
    if disc < 0:
        return None
    root = math.sqrt(disc)
    q = -0.5 * (b + math.copysign(root, b))
    if q == 0.0:
        # b == 0 and disc == 0, hence c == 0: double root at the origin
        return 0.0, 0.0
    t1, t2 = q / a, c / q
    return (t1, t2) if t1 <= t2 else (t2, t1)


def cross3(a, b) -> np.ndarray:
    """Cross product of two 3-vectors (``np.cross`` without the axis handling)."""
    return np.array([
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ])


def cross_matrix(a) -> np.ndarray:
    """The skew matrix ``A`` with ``A @ x == cross(x, a)`` for every ``x``."""
    a1, a2, a3 = a
    return np.array([[0.0, a3, -a2], [-a3, 0.0, a1], [a2, -a1, 0.0]])


def unit(x, fallback=None) -> np.ndarray:
    """``x / |x|``; zero vectors map to ``fallback`` (``e1`` by default)."""
    n = math.sqrt(float(np.dot(x, x)))
    if n == 0.0:
        return np.array([1.0, 0.0, 0.0]) if fallback is None else np.asarray(fallback, dtype=float)
    return np.asarray(x, dtype=float) / n


def norm(x) -> float:
    if type(x) is np.ndarray:
        return math.sqrt(x.dot(x))
    return math.sqrt(float(np.dot(x, x)))
