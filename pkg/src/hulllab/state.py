"""Points of the relaxed state space and the defect functions defined on it.

A state ``z = (alpha, beta, M)`` lives in ``R^3 x R^3 x R^{3x3}`` (15 numbers).
``alpha`` and ``beta`` are the Elsasser variables ``u + B`` and ``u - B``;
``M`` is the relaxed flux that equals ``alpha (x) beta + p I`` on the
constraint set.  The pressure ``p`` never changes during relaxation, so it
lives in :class:`Params` together with the two sphere radii.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .linalg import norm


def _vec(x) -> np.ndarray:
    a = np.asarray(x, dtype=float).reshape(3)
    if not math.isfinite(a[0] + a[1] + a[2]) and not np.isfinite(a).all():
        raise ValueError("non-finite vector component")
    return a


def _mat(x) -> np.ndarray:
    a = np.asarray(x, dtype=float).reshape(3, 3)
    if not math.isfinite(float(a.sum())) and not np.isfinite(a).all():
        raise ValueError("non-finite matrix entry")
    return a


@dataclass(frozen=True)
class Params:
    """Radii ``r``, ``s`` of the alpha/beta spheres and the frozen pressure ``p``."""

    r: float
    s: float
    p: float = 0.0

    def __post_init__(self):
        for name in ("r", "s", "p"):
            v = float(getattr(self, name))
            if not math.isfinite(v):
                raise ValueError(f"{name} must be finite")
            object.__setattr__(self, name, v)
        if self.r <= 0 or self.s <= 0:
            raise ValueError("radii r and s must be positive")
        if abs(self.p) > self.r * self.s:
            raise ValueError(f"|p| = {abs(self.p)} exceeds r*s = {self.r * self.s}")

    @property
    def tau(self) -> float:
        """Default equality tolerance, scaled with ``r*s``."""
        return 1e-9 * max(1.0, self.r * self.s)

    def tol(self, tol: float | None) -> float:
        t = self.tau if tol is None else float(tol)
        if t <= 0:
            raise ValueError("tol must be positive")
        return t


@dataclass(frozen=True, eq=False)
class State:
    alpha: np.ndarray
    beta: np.ndarray
    M: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "alpha", _vec(self.alpha))
        object.__setattr__(self, "beta", _vec(self.beta))
        object.__setattr__(self, "M", _mat(self.M))

    def vector(self) -> np.ndarray:
        """Flat 15-vector ``(alpha, beta, M row-major)``."""
        return np.concatenate([self.alpha, self.beta, self.M.ravel()])

    @classmethod
    def from_vector(cls, v) -> "State":
        v = np.asarray(v, dtype=float)
        return cls(v[0:3], v[3:6], v[6:15].reshape(3, 3))

    @classmethod
    def _trusted(cls, alpha: np.ndarray, beta: np.ndarray, M: np.ndarray) -> "State":
        # skips validation; callers pass float arrays of the right shapes
        z = object.__new__(cls)
        object.__setattr__(z, "alpha", alpha)
        object.__setattr__(z, "beta", beta)
        object.__setattr__(z, "M", M)
        return z

    def shifted(self, d: "Direction", t: float) -> "State":
        """The point ``z + t * d`` on the line through ``z`` along ``d``."""
        t = float(t)
        if not math.isfinite(t):
            raise ValueError("non-finite step")
        return State._trusted(self.alpha + t * d.alpha_bar, self.beta + t * d.beta_bar, self.M + t * d.M_bar)

    def __eq__(self, other):
        if not isinstance(other, State):
            return NotImplemented
        return (
            np.array_equal(self.alpha, other.alpha)
            and np.array_equal(self.beta, other.beta)
            and np.array_equal(self.M, other.M)
        )

    def distance(self, other: "State") -> float:
        return float(np.linalg.norm(self.vector() - other.vector()))


@dataclass(frozen=True, eq=False)
class Direction:
    """A candidate oscillation direction ``(alpha_bar, beta_bar, M_bar)``.

    ``witness`` optionally carries the plane-wave data ``(xi, c)`` showing the
    direction lies in the wave cone.
    """

    alpha_bar: np.ndarray
    beta_bar: np.ndarray
    M_bar: np.ndarray
    witness: tuple[np.ndarray, float] | None = field(default=None)

    def __post_init__(self):
        object.__setattr__(self, "alpha_bar", _vec(self.alpha_bar))
        object.__setattr__(self, "beta_bar", _vec(self.beta_bar))
        object.__setattr__(self, "M_bar", _mat(self.M_bar))
        if self.witness is not None:
            xi, c = self.witness
            object.__setattr__(self, "witness", (_vec(xi), float(c)))

    def vector(self) -> np.ndarray:
        return np.concatenate([self.alpha_bar, self.beta_bar, self.M_bar.ravel()])

    @classmethod
    def _trusted(cls, alpha_bar, beta_bar, M_bar, witness=None) -> "Direction":
        d = object.__new__(cls)
        object.__setattr__(d, "alpha_bar", alpha_bar)
        object.__setattr__(d, "beta_bar", beta_bar)
        object.__setattr__(d, "M_bar", M_bar)
        object.__setattr__(d, "witness", witness)
        return d

    def scaled(self, k: float) -> "Direction":
        return Direction(k * self.alpha_bar, k * self.beta_bar, k * self.M_bar, self.witness)

    @classmethod
    def between(cls, z1: State, z2: State) -> "Direction":
        """The difference ``z2 - z1`` (no witness attached)."""
        return cls(z2.alpha - z1.alpha, z2.beta - z1.beta, z2.M - z1.M)


_DIAG = (np.arange(3), np.arange(3))


def m0(z: State, params: Params) -> np.ndarray:
    """Flux defect ``alpha (x) beta - M + p I``; zero exactly on flux-consistent states."""
    out = np.multiply.outer(z.alpha, z.beta) - z.M
    if params.p:
        out[_DIAG] += params.p
    return out


def _ball_slack(z: State, params: Params, tol: float | None = None) -> tuple[float, float]:
    t = params.tol(tol)
    na, nb = norm(z.alpha), norm(z.beta)
    if na > params.r + t or nb > params.s + t:
        raise ValueError(
            f"state outside the ball product: |alpha|={na:.6g} (r={params.r}), |beta|={nb:.6g} (s={params.s})"
        )
    da = params.r**2 - na * na
    db = params.s**2 - nb * nb
    # boundary states from root-finding land a rounding error outside
    return max(da, 0.0), max(db, 0.0)


def g_defect(z: State, params: Params, tol: float | None = None) -> float:
    """The rank-one budget ``sqrt((r^2 - |alpha|^2)(s^2 - |beta|^2))``."""
    da, db = _ball_slack(z, params, tol)
    return math.sqrt(da * db)


def f0(A, tol: float = 1e-9) -> np.ndarray:
    """Axial vector ``a`` of a skew matrix: ``A @ x == cross(x, a)``."""
    A = np.asarray(A, dtype=float)
    if np.linalg.norm(A + A.T) > tol * max(1.0, np.linalg.norm(A)):
        raise ValueError("matrix is not skew-symmetric within tolerance")
    return np.array([A[1, 2] - A[2, 1], A[2, 0] - A[0, 2], A[0, 1] - A[1, 0]]) * 0.5


def _axial_of_antisym_part(M: np.ndarray) -> np.ndarray:
    # f0(M - M^T) without the skewness check
    return np.array([M[1, 2] - M[2, 1], M[2, 0] - M[0, 2], M[0, 1] - M[1, 0]])


def ohm_defect(z: State) -> float:
    """Relaxed ``E . B``: ``f0(M - M^T) . (alpha - beta)``."""
    return float(_axial_of_antisym_part(z.M) @ (z.alpha - z.beta))


def ohm_defect_matrix_form(z: State) -> np.ndarray:
    """``(|A|_F^2 I + 2 A^2)(alpha - beta)`` with ``A = M - M^T``.

    For skew ``A`` the bracket equals ``2 f0(A) (x) f0(A)``, so this vector
    vanishes exactly when :func:`ohm_defect` does.
    """
    A = z.M - z.M.T
    w = z.alpha - z.beta
    return float(np.sum(A * A)) * w + 2.0 * (A @ (A @ w))


def in_K(z: State, params: Params, tol: float | None = None) -> bool:
    t = params.tol(tol)
    return (
        float(np.linalg.norm(m0(z, params))) <= t
        and abs(norm(z.alpha) - params.r) <= t
        and abs(norm(z.beta) - params.s) <= t
    )


def k_residual(z: State, params: Params) -> float:
    """Largest violation among the three equalities defining the constraint set."""
    return max(
        float(np.linalg.norm(m0(z, params))),
        abs(norm(z.alpha) - params.r),
        abs(norm(z.beta) - params.s),
    )
