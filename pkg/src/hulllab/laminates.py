"""Explicit laminate decompositions (the inner estimate of the hull).

Three constructive oracles, from cheapest to most general:

* first order: ``M0(z) = -G(z) u (x) v`` plus a sign and a coplanarity
  condition; one split lands both children on the constraint set.
* flux-consistent (``M0(z) = 0``): at most two splits that keep ``M0``
  fixed while pushing ``beta`` and then ``alpha`` onto their spheres.
* rank-one ``M0`` with nuclear norm at most ``G(z)``: one split to
  flux-consistent children, each finished by the previous construction.

Every decomposition is returned as an explicit binary tree so it can be
re-verified independently (:func:`verify_tree`).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Iterator, Union

import numpy as np

from .linalg import cross3, norm, rank_one_factor, singular_values, solve_quadratic, unit
from .state import Direction, Params, State, _ball_slack, g_defect, in_K, k_residual, m0, ohm_defect
from .wave_cone import direction_from_vectors, in_lambda, move_direction, with_witness, witness_residual


class Reason(str, enum.Enum):
    """Why a state could not be decomposed."""

    NOT_RANK_ONE = "NotRankOne"
    NUCLEAR_EXCEEDS_BOUND = "NuclearExceedsBound"
    SIGN_CONDITION = "SignCondition"
    NORM_BALANCE = "NormBalanceMismatch"
    OHM_DEFECT = "OhmDefect"
    OUT_OF_BALL = "OutOfBall"


class NotDecomposable(Exception):
    def __init__(self, reason: Reason, **detail):
        self.reason = reason
        self.detail = detail
        extra = ", ".join(f"{k}={v:.6g}" if isinstance(v, float) else f"{k}={v}" for k, v in detail.items())
        super().__init__(f"{reason.value}" + (f" ({extra})" if extra else ""))


@dataclass(frozen=True, eq=False)
class WitnessPair:
    """Vectors ``abar``, ``bbar`` with ``M0(z) + abar (x) bbar = 0`` and ``c = |abar||bbar|``."""

    abar: np.ndarray
    bbar: np.ndarray
    c: float


class _FluxConsistent:
    def __repr__(self):
        return "SECOND_ORDER"


#: returned by :func:`third_order_witness` when ``M0(z)`` already vanishes
SECOND_ORDER = _FluxConsistent()


@dataclass(frozen=True, eq=False)
class Leaf:
    state: State

    depth = 0

    def leaves(self, weight: float = 1.0) -> Iterator[tuple[float, State]]:
        yield weight, self.state

    def splits(self) -> Iterator["Split"]:
        return iter(())


@dataclass(frozen=True, eq=False)
class Split:
    """Binary node: children sit at ``state + t1 * direction`` and ``state + t2 * direction``."""

    state: State
    direction: Direction
    t1: float
    t2: float
    left: "LaminateTree"
    right: "LaminateTree"
    kind: str = ""
    witness: WitnessPair | None = field(default=None)

    def __post_init__(self):
        if not (self.t1 < 0.0 < self.t2):
            raise ValueError(f"split parameters must satisfy t1 < 0 < t2, got ({self.t1}, {self.t2})")

    @property
    def weights(self) -> tuple[float, float]:
        span = self.t2 - self.t1
        return self.t2 / span, -self.t1 / span

    @property
    def depth(self) -> int:
        return 1 + max(self.left.depth, self.right.depth)

    def leaves(self, weight: float = 1.0) -> Iterator[tuple[float, State]]:
        mu1, mu2 = self.weights
        yield from self.left.leaves(weight * mu1)
        yield from self.right.leaves(weight * mu2)

    def splits(self) -> Iterator["Split"]:
        yield self
        yield from self.left.splits()
        yield from self.right.splits()


LaminateTree = Union[Leaf, Split]


def rescale_pair(abar: np.ndarray, bbar: np.ndarray, ratio: float) -> tuple[np.ndarray, np.ndarray]:
    """``(lam*abar, bbar/lam)`` with ``|lam*abar|^2 / |bbar/lam|^2 == ratio``.

    The outer product ``abar (x) bbar`` is unchanged.
    """
    na, nb = norm(abar), norm(bbar)
    lam = (ratio * nb * nb / (na * na)) ** 0.25
    return lam * abar, bbar / lam


def _scale(*xs: float) -> float:
    return max(1.0, *xs)


def _interior(z: State, params: Params, tol: float) -> bool:
    return norm(z.alpha) < params.r - tol and norm(z.beta) < params.s - tol


def first_order_witness(z: State, params: Params, tol: float | None = None) -> WitnessPair | None:
    """Decide whether ``z`` is a single split away from the constraint set.

    Uses the canonical normalization ``|abar|^2 = s^2 - |beta|^2``,
    ``|bbar|^2 = r^2 - |alpha|^2`` together with ``alpha.abar == beta.bbar``
    and coplanarity of ``alpha - beta``, ``abar``, ``bbar``.  Both tests are
    invariant under the joint flip ``(abar, bbar) -> (-abar, -bbar)``, so a
    single sign choice suffices.

    Requires a strictly interior state; boundary states raise ``ValueError``.
    """
    t = params.tol(tol)
    if not _interior(z, params, t):
        raise ValueError("first-order test needs |alpha| < r and |beta| < s strictly")
    da, db = _ball_slack(z, params, t)
    G = math.sqrt(da * db)
    fac = rank_one_factor(m0(z, params), t)
    if fac is None:
        return None
    u, v, sigma = fac
    if abs(sigma - G) > t:
        return None
    abar = -math.sqrt(db) * u
    bbar = math.sqrt(da) * v
    na, nb = math.sqrt(db), math.sqrt(da)
    na_ = norm(z.alpha)
    nb_ = norm(z.beta)
    if abs(z.alpha @ abar - z.beta @ bbar) > t * _scale(na_ * na + nb_ * nb):
        return None
    w = z.alpha - z.beta
    if abs(w @ cross3(abar, bbar)) > t * _scale(norm(w) * na * nb):
        return None
    return WitnessPair(abar, bbar, na * nb)


def first_order_split(z: State, w: WitnessPair, params: Params, tol: float | None = None) -> Split:
    """Split ``z`` into two points of the constraint set along a wave-cone segment."""
    t = params.tol(tol)
    da, db = _ball_slack(z, params, t)
    abar, bbar = rescale_pair(w.abar, w.bbar, da / db)
    d = direction_from_vectors(z, abar, bbar, t)

    a2 = float(abar @ abar)
    roots = solve_quadratic(a2, 2.0 * float(z.alpha @ abar), float(z.alpha @ z.alpha) - params.r**2)
    if roots is None or not (roots[0] < 0.0 < roots[1]):
        raise ValueError("alpha-sphere quadratic has no roots of opposite sign")
    t1, t2 = roots
    b2 = float(bbar @ bbar)
    for root in roots:
        res = b2 * root * root + 2.0 * root * float(z.beta @ bbar) + float(z.beta @ z.beta) - params.s**2
        if abs(res) > t * _scale(params.s**2, b2 * root * root):
            raise ValueError("alpha- and beta-sphere quadratics disagree; witness is inconsistent")

    lo, hi = z.shifted(d, t1), z.shifted(d, t2)
    for child in (lo, hi):
        if not in_K(child, params, t * 10):
            raise ValueError(f"first-order child misses the constraint set by {k_residual(child, params):.3g}")
    return Split(z, d, t1, t2, Leaf(lo), Leaf(hi), kind="first-order", witness=WitnessPair(abar, bbar, w.c))


def _beta_move(z: State, params: Params, tol: float) -> Split | None:
    nb = norm(z.beta)
    if nb >= params.s - tol:
        return None
    bhat = unit(z.beta)
    d = move_direction(z, bbar=bhat, tol=tol)
    t1, t2 = solve_quadratic(1.0, 2.0 * float(z.beta @ bhat), nb * nb - params.s**2)
    return Split(
        z, d, t1, t2, _alpha_move_tree(z.shifted(d, t1), params, tol), _alpha_move_tree(z.shifted(d, t2), params, tol),
        kind="beta-move",
    )


def _alpha_move_tree(z: State, params: Params, tol: float) -> LaminateTree:
    na = norm(z.alpha)
    if na >= params.r - tol:
        return Leaf(z)
    ahat = unit(z.alpha)
    d = move_direction(z, abar=ahat, tol=tol)
    t1, t2 = solve_quadratic(1.0, 2.0 * float(z.alpha @ ahat), na * na - params.r**2)
    return Split(z, d, t1, t2, Leaf(z.shifted(d, t1)), Leaf(z.shifted(d, t2)), kind="alpha-move")


def second_order_path(z: State, params: Params, tol: float | None = None) -> LaminateTree:
    """Decompose a flux-consistent state (``M0(z) = 0``) in at most two levels.

    First ``beta`` is pushed to its sphere along ``(0, b, alpha (x) b)`` with
    ``b = beta/|beta|``, then ``alpha`` along ``(a, 0, a (x) beta)`` with
    ``a = alpha/|alpha|``.  Neither move changes ``M0``.  Zero vectors use
    ``e1`` as their direction.
    """
    t = params.tol(tol)
    if float(np.linalg.norm(m0(z, params))) > t * _scale(params.r * params.s):
        raise ValueError("second-order path needs M0(z) = 0")
    if norm(z.alpha) > params.r + t or norm(z.beta) > params.s + t:
        raise ValueError("state outside the ball product")
    split = _beta_move(z, params, t)
    return split if split is not None else _alpha_move_tree(z, params, t)


def _third_order(z: State, params: Params, tol: float):
    """Check the rank-one conditions; raise :class:`NotDecomposable` with the first failure."""
    na, nb = norm(z.alpha), norm(z.beta)
    if na > params.r + tol or nb > params.s + tol:
        raise NotDecomposable(Reason.OUT_OF_BALL, alpha_norm=na, beta_norm=nb)
    M0 = m0(z, params)
    scale = _scale(params.r * params.s)
    if float(np.linalg.norm(M0)) <= tol * scale:
        return SECOND_ORDER
    svd = singular_values(M0)
    s1, s2 = float(svd.sigma[0]), float(svd.sigma[1])
    if s2 > tol * max(s1, 1.0):
        raise NotDecomposable(Reason.NOT_RANK_ONE, sigma2=s2)
    da, db = _ball_slack(z, params, tol)
    G = math.sqrt(da * db)
    nuc = float(svd.sigma.sum())
    if nuc > G + tol or G <= tol:
        raise NotDecomposable(Reason.NUCLEAR_EXCEEDS_BOUND, nuclear=nuc, bound=G)
    if float(z.alpha @ M0 @ z.beta) > tol * scale * _scale(na * nb):
        raise NotDecomposable(Reason.SIGN_CONDITION, value=float(z.alpha @ M0 @ z.beta))
    lhs = norm(M0 @ z.beta) * math.sqrt(da)
    rhs = norm(M0.T @ z.alpha) * math.sqrt(db)
    if abs(lhs - rhs) > tol * _scale(lhs, rhs):
        raise NotDecomposable(Reason.NORM_BALANCE, lhs=lhs, rhs=rhs)
    ohm = ohm_defect(z)
    if abs(ohm) > tol * _scale(float(np.linalg.norm(z.M)) * norm(z.alpha - z.beta)):
        raise NotDecomposable(Reason.OHM_DEFECT, value=ohm)

    u, v, sigma = rank_one_factor(M0, tol) or (svd.U[:, 0], svd.V[:, 0], s1)
    rho = math.sqrt(da / db)
    abar = -math.sqrt(sigma * rho) * u
    bbar = math.sqrt(sigma / rho) * v
    # consequences of the checks above; re-asserted on the constructed pair
    if abs((z.beta @ bbar) * rho * rho - z.alpha @ abar) > 10 * tol * _scale(na * norm(abar), nb * norm(bbar)):
        raise NotDecomposable(Reason.SIGN_CONDITION, residual=float((z.beta @ bbar) * rho * rho - z.alpha @ abar))
    w = z.alpha - z.beta
    if abs(w @ cross3(abar, bbar)) > 10 * tol * _scale(norm(w) * sigma):
        raise NotDecomposable(Reason.OHM_DEFECT, triple=float(w @ cross3(abar, bbar)))
    return WitnessPair(abar, bbar, sigma)


def third_order_witness(z: State, params: Params, tol: float | None = None):
    """Witness for the rank-one construction, :data:`SECOND_ORDER`, or ``None``.

    The pair is sized so ``|abar| |bbar| = |M0|_n`` and
    ``|abar| / |bbar| = sqrt((r^2 - |alpha|^2) / (s^2 - |beta|^2))``.
    """
    t = params.tol(tol)
    if norm(z.alpha) > params.r + t or norm(z.beta) > params.s + t:
        raise ValueError("state outside the ball product")
    try:
        return _third_order(z, params, t)
    except NotDecomposable:
        return None


def third_order_split(z: State, w: WitnessPair, params: Params, tol: float | None = None) -> Split:
    """Split along the rank-one segment to two flux-consistent states, then finish both."""
    t = params.tol(tol)
    na, nb = norm(w.abar), norm(w.bbar)
    if not (0.0 < w.c <= g_defect(z, params, t) + t):
        raise ValueError("defect magnitude must lie in (0, G(z)]")
    d = direction_from_vectors(z, w.abar, w.bbar, t)
    roots = solve_quadratic(1.0, 2.0 * float(z.alpha @ w.abar) / (na * na), -w.c / (na * nb))
    if roots is None or not (roots[0] < 0.0 < roots[1]):
        raise ValueError("rank-one quadratic has no roots of opposite sign")
    t1, t2 = roots
    lo, hi = z.shifted(d, t1), z.shifted(d, t2)
    return Split(
        z, d, t1, t2, second_order_path(lo, params, t), second_order_path(hi, params, t),
        kind="third-order", witness=w,
    )


def decompose(z: State, params: Params, tol: float | None = None) -> LaminateTree:
    """Explicit laminate of order at most three ending on the constraint set.

    Raises :class:`NotDecomposable` carrying a :class:`Reason` when none of
    the constructions applies.  Failing does not prove ``z`` lies outside
    the hull: the conditions are sufficient only.
    """
    t = params.tol(tol)
    na, nb = norm(z.alpha), norm(z.beta)
    if na > params.r + t or nb > params.s + t:
        raise NotDecomposable(Reason.OUT_OF_BALL, alpha_norm=na, beta_norm=nb)
    if in_K(z, params, t):
        return Leaf(z)
    if _interior(z, params, t):
        w = first_order_witness(z, params, t)
        if w is not None:
            try:
                return first_order_split(z, w, params, t)
            except ValueError:
                pass
    w = _third_order(z, params, t)
    if w is SECOND_ORDER:
        return second_order_path(z, params, t)
    return third_order_split(z, w, params, t)


def in_lower_hull(z: State, params: Params, tol: float | None = None) -> bool:
    try:
        decompose(z, params, tol)
    except NotDecomposable:
        return False
    return True


def recombine(tree: LaminateTree) -> tuple[State, list[tuple[float, State]]]:
    """Weighted average of the leaves, with the leaf list (weight, state)."""
    leaves = list(tree.leaves())
    total = sum(w for w, _ in leaves)
    if not math.isclose(total, 1.0, rel_tol=0, abs_tol=1e-12):
        raise ValueError(f"leaf weights sum to {total}, not 1")
    v = sum(w * leaf.vector() for w, leaf in leaves)
    return State.from_vector(v), leaves


@dataclass
class TreeReport:
    leaves: int
    depth: int
    max_leaf_residual: float
    max_lambda_residual: float
    max_child_error: float
    recombination_error: float

    def ok(self, tol: float = 1e-8) -> bool:
        return (
            self.max_leaf_residual <= tol
            and self.max_lambda_residual <= tol
            and self.max_child_error <= tol
            and self.recombination_error <= tol
        )


def verify_tree(tree: LaminateTree, params: Params, kernel: bool = False) -> TreeReport:
    """Re-check a tree from scratch.

    Leaves against the constraint set, children against ``state + t *
    direction``, and the root against the weighted leaf average.  Directions
    are checked through their stored witness, or through a fresh null-space
    solve when ``kernel`` is set (or no witness is stored).
    """
    lam = 0.0
    child = 0.0
    for s in tree.splits():
        d = s.direction
        if kernel or d.witness is None:
            w = in_lambda(d)
            res = float("inf") if w is None else witness_residual(d, *w)
        else:
            res = witness_residual(d, *d.witness)
        lam = max(lam, res)
        child = max(
            child,
            s.state.shifted(d, s.t1).distance(s.left.state),
            s.state.shifted(d, s.t2).distance(s.right.state),
        )
    root, leaves = recombine(tree)
    return TreeReport(
        leaves=len(leaves),
        depth=tree.depth,
        max_leaf_residual=max(k_residual(leaf, params) for _, leaf in leaves),
        max_lambda_residual=lam,
        max_child_error=child,
        recombination_error=root.distance(tree.state),
    )

