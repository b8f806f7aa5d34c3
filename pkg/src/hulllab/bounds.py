"""Outer estimate of the hull and the classification built on both estimates.

The outer set is

    U = { |p| < rs, |alpha| < r, |beta| < s, ohm_defect(z) = 0, |M0(z)|_n < G(z) }

and it is convex along wave-cone lines because every member of the family
``H_gamma`` below is convex.  States that pass the outer test but not the
laminate oracle are sub-classified; the interesting ones are rank-one
boundary states whose sign balance ``alpha.abar == beta.bbar`` fails.
"""

from __future__ import annotations

import enum
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .laminates import NotDecomposable, _interior, _third_order, decompose, first_order_witness
from .linalg import cross3, cross_matrix, nuclear_norm, nuclear_norms, norm, numerical_rank, rank_one_factor
from .state import Direction, Params, State, m0, ohm_defect

CONVEXITY_SLACK = 1e-10


class Kind(str, enum.Enum):
    IN_LOWER_HULL = "InLowerHull"
    IN_UPPER_INTERIOR = "InUpperInterior"
    ON_UPPER_BOUNDARY = "OnUpperBoundary"
    OUTSIDE_UPPER = "OutsideUpper"
    OFF_OHM_MANIFOLD = "OffOhmManifold"


class BoundaryKind(str, enum.Enum):
    GAP_CANDIDATE = "GapCandidate"
    FIRST_ORDER_POINT = "FirstOrderPoint"
    RANK_DEFICIENT = "RankDeficient"


@dataclass(frozen=True)
class Verdict:
    kind: Kind
    sub: BoundaryKind | None = None

    def __post_init__(self):
        if (self.kind is Kind.ON_UPPER_BOUNDARY) != (self.sub is not None):
            raise ValueError("a boundary sub-kind goes with OnUpperBoundary and only with it")

    @property
    def tag(self) -> str:
        return self.kind.value if self.sub is None else f"{self.kind.value}/{self.sub.value}"

    @classmethod
    def from_tag(cls, tag: str) -> "Verdict":
        kind, _, sub = tag.partition("/")
        return cls(Kind(kind), BoundaryKind(sub) if sub else None)

    def __str__(self):
        return self.tag


#: every verdict, in report order
VERDICT_TAGS = (
    "InLowerHull",
    "InUpperInterior",
    "OnUpperBoundary/GapCandidate",
    "OnUpperBoundary/FirstOrderPoint",
    "OnUpperBoundary/RankDeficient",
    "OutsideUpper",
    "OffOhmManifold",
)


def _ohm_ok(z: State, tol: float) -> bool:
    (m00, m01, m02), (m10, m11, m12), (m20, m21, m22) = z.M.tolist()
    a0, a1, a2 = z.alpha.tolist()
    b0, b1, b2 = z.beta.tolist()
    w0, w1, w2 = a0 - b0, a1 - b1, a2 - b2
    defect = (m12 - m21) * w0 + (m20 - m02) * w1 + (m01 - m10) * w2
    fro2 = m00 * m00 + m01 * m01 + m02 * m02 + m10 * m10 + m11 * m11 + m12 * m12 + m20 * m20 + m21 * m21 + m22 * m22
    return abs(defect) <= tol * max(1.0, math.sqrt(fro2 * (w0 * w0 + w1 * w1 + w2 * w2)))


def _slack(z: State, params: Params) -> tuple[float, float]:
    return params.r**2 - float(z.alpha @ z.alpha), params.s**2 - float(z.beta @ z.beta)


def in_upper(z: State, params: Params, tol: float | None = None, closed: bool = False) -> bool:
    """Membership in the outer set ``U`` (or its closure when ``closed``).

    The open test demands every strict inequality with margin ``tol``; the
    closed test allows each to be violated by ``tol``.  The Ohm constraint is
    an equality in both and is tested to ``tol``.
    """
    t = params.tol(tol)
    if not _ohm_ok(z, t):
        return False
    rs = params.r * params.s
    na, nb = norm(z.alpha), norm(z.beta)
    da, db = _slack(z, params)
    nuc = float(np.linalg.svd(m0(z, params), compute_uv=False).sum())
    if closed:
        if abs(params.p) > rs + t or na > params.r + t or nb > params.s + t:
            return False
        return nuc <= math.sqrt(max(da, 0.0) * max(db, 0.0)) + t
    if abs(params.p) >= rs - t or na >= params.r - t or nb >= params.s - t:
        return False
    return nuc < math.sqrt(da * db) - t


def h_gamma(z: State, gamma: float, params: Params) -> float:
    """``gamma(|alpha|^2 - r^2) + (1-gamma)(|beta|^2 - s^2) + 2 sqrt(gamma(1-gamma)) |M0|_n``."""
    if not 0.0 <= gamma <= 1.0:
        raise ValueError(f"gamma must lie in [0, 1], got {gamma}")
    da, db = _slack(z, params)
    return -gamma * da - (1.0 - gamma) * db + 2.0 * math.sqrt(gamma * (1.0 - gamma)) * nuclear_norm(m0(z, params))


def _h_gamma_batch(alpha, beta, M, gamma, params: Params) -> np.ndarray:
    M0 = alpha[:, :, None] * beta[:, None, :] - M
    M0[:, np.arange(3), np.arange(3)] += params.p
    da = params.r**2 - np.einsum("ij,ij->i", alpha, alpha)
    db = params.s**2 - np.einsum("ij,ij->i", beta, beta)
    return -gamma * da - (1.0 - gamma) * db + 2.0 * np.sqrt(gamma * (1.0 - gamma)) * nuclear_norms(M0)


def gamma_star(z: State, params: Params, tol: float | None = None) -> float:
    """The member of the ``H_gamma`` family whose sign matches ``|M0|_n - G``.

    Undefined (``ValueError``) when both radii are saturated.
    """
    t = params.tol(tol)
    da, db = _slack(z, params)
    if da + db <= t:
        raise ValueError("both spheres saturated; the balancing weight is undefined")
    return db / (da + db)


@dataclass
class ViolationReport:
    name: str
    n: int
    seed: int
    violations: list = field(default_factory=list)
    max_excess: float = -math.inf
    skipped: int = 0

    @property
    def passed(self) -> bool:
        return not self.violations

    def to_dict(self) -> dict:
        d = asdict(self)
        d["passed"] = self.passed
        return d


def check_h_convexity(params: Params, n: int, seed: int, gamma: float | None = None) -> ViolationReport:
    """Midpoint-convexity probe of ``H_gamma`` on random pairs in the whole space.

    Pairs are Gaussian with the scale of the problem; ``gamma`` is uniform
    on [0, 1] unless fixed.  A violation is an excess above the chord
    midpoint larger than ``1e-10``.
    """
    if n <= 0:
        raise ValueError("n must be positive")
    rng = np.random.Generator(np.random.Philox(seed))
    scale = np.array([params.r] * 3 + [params.s] * 3 + [params.r * params.s] * 9)
    z1 = rng.standard_normal((n, 15)) * scale
    z2 = rng.standard_normal((n, 15)) * scale
    g = rng.uniform(0.0, 1.0, n) if gamma is None else np.full(n, float(gamma))
    zm = 0.5 * (z1 + z2)

    def H(v):
        return _h_gamma_batch(v[:, 0:3], v[:, 3:6], v[:, 6:15].reshape(-1, 3, 3), g, params)

    excess = H(zm) - 0.5 * (H(z1) + H(z2))
    report = ViolationReport("h-convexity", n, seed, max_excess=float(excess.max()))
    for i in np.flatnonzero(excess > CONVEXITY_SLACK):
        report.violations.append({"index": int(i), "gamma": float(g[i]), "excess": float(excess[i])})
    return report


def _ohm_preserving(d_alpha, d_beta, d_M, z: State, xi):
    """Shift ``d_M`` by a multiple of the skew matrix of ``xi`` so the Ohm defect stays affine-flat.

    The shift keeps ``M_bar xi`` and ``M_bar^T xi`` (hence wave-cone
    membership) unchanged.
    """
    w = z.alpha - z.beta
    ax_z = np.array([z.M[1, 2] - z.M[2, 1], z.M[2, 0] - z.M[0, 2], z.M[0, 1] - z.M[1, 0]])
    ax_d = np.array([d_M[1, 2] - d_M[2, 1], d_M[2, 0] - d_M[0, 2], d_M[0, 1] - d_M[1, 0]])
    linear = ax_d @ w + ax_z @ (d_alpha - d_beta)
    denom = 2.0 * float(xi @ w)
    if abs(denom) < 1e-6:
        return None
    return d_M - (linear / denom) * cross_matrix(xi)


def random_cone_direction(z: State, rng: np.random.Generator, scale: float = 1.0):
    """A generic wave-cone direction along which the Ohm defect of ``z`` stays constant.

    Every cone element has the form ``xi`` unit, ``a, b`` orthogonal to
    ``xi`` and ``M_bar = P R P - c a (x) xi - c xi (x) b`` with ``P`` the
    projector orthogonal to ``xi``.
    """
    xi = rng.standard_normal(3)
    xi /= norm(xi)
    P = np.eye(3) - np.outer(xi, xi)
    a = P @ rng.standard_normal(3)
    b = P @ rng.standard_normal(3)
    c = float(rng.standard_normal())
    Mb = P @ rng.standard_normal((3, 3)) @ P - c * np.outer(a, xi) - c * np.outer(xi, b)
    Mb = _ohm_preserving(a, b, Mb, z, xi)
    if Mb is None:
        return None
    return Direction(scale * a, scale * b, scale * Mb, (xi, c))


def check_lambda_convexity_U(params: Params, n: int, seed: int) -> ViolationReport:
    """Probe that wave-cone segments between points of ``U`` stay in its closure.

    Half the pairs are the two constraint-set endpoints of forward first-order
    laminates; the other half start from a random point of ``U`` and move
    along a random Ohm-preserving cone direction, shrinking the step until the
    far endpoint is in ``U`` as well.  Interior segment points at
    ``0.25, 0.5, 0.75`` are tested against the closed set.
    """
    from .sampler import child_stream, forward_laminate, sample_upper

    if n <= 0:
        raise ValueError("n must be positive")
    report = ViolationReport("lambda-convexity-U", n, seed, max_excess=0.0)
    check_tol = 1e-8
    for i in range(n):
        rng = child_stream(seed, i)
        if i % 2 == 0:
            _, tree = forward_laminate(params, 1, rng)
            z1, z2 = tree.left.state, tree.right.state
        else:
            z1 = sample_upper(params, rng, fill=float(rng.uniform(0.0, 0.95)))
            d = random_cone_direction(z1, rng, scale=max(params.r, params.s))
            z2 = None
            if d is not None:
                h = 1.0
                for _ in range(40):
                    cand = z1.shifted(d, h)
                    if in_upper(cand, params, check_tol, closed=True):
                        z2 = cand
                        break
                    h *= 0.5
            if z2 is None:
                report.skipped += 1
                continue
        for lam in (0.25, 0.5, 0.75):
            zm = State.from_vector((1.0 - lam) * z1.vector() + lam * z2.vector())
            if not in_upper(zm, params, check_tol, closed=True):
                G = math.sqrt(max(_slack(zm, params)[0], 0.0) * max(_slack(zm, params)[1], 0.0))
                excess = nuclear_norm(m0(zm, params)) - G
                report.max_excess = max(report.max_excess, excess)
                report.violations.append({"index": i, "lambda": lam, "excess": excess})
    return report


def classify(z: State, params: Params, tol: float | None = None) -> Verdict:
    t = params.tol(tol)
    if not _ohm_ok(z, t):
        return Verdict(Kind.OFF_OHM_MANIFOLD)
    upper = in_upper(z, params, t, closed=True)
    try:
        decompose(z, params, t)
        lower = True
    except NotDecomposable:
        lower = False
    if lower and not upper:
        raise AssertionError("state decomposed into a laminate yet lies outside the closed outer set")
    if not upper:
        return Verdict(Kind.OUTSIDE_UPPER)
    if lower:
        return Verdict(Kind.IN_LOWER_HULL)
    if in_upper(z, params, t, closed=False):
        return Verdict(Kind.IN_UPPER_INTERIOR)
    if numerical_rank(m0(z, params), t) != 1:
        return Verdict(Kind.ON_UPPER_BOUNDARY, BoundaryKind.RANK_DEFICIENT)
    if _interior(z, params, t) and first_order_witness(z, params, t) is not None:
        return Verdict(Kind.ON_UPPER_BOUNDARY, BoundaryKind.FIRST_ORDER_POINT)
    return Verdict(Kind.ON_UPPER_BOUNDARY, BoundaryKind.GAP_CANDIDATE)


@dataclass
class GapReport:
    """What separates a boundary state from the first-order laminates.

    ``factorizes``: ``M0`` is rank one; ``magnitudes``: its norm equals
    ``G`` so the canonical pair with ``|abar|^2 = s^2 - |beta|^2`` and
    ``|bbar|^2 = r^2 - |alpha|^2`` exists; ``coplanar``: ``alpha - beta``,
    ``abar``, ``bbar`` coplanar; ``sign_balance``: ``alpha.abar == beta.bbar``.
    """

    rank: int
    factorizes: bool
    magnitudes: bool
    coplanar: bool
    sign_balance: bool
    sign_balance_residual: float | None
    norm_balance: tuple[float, float]
    lower_failure: str | None
    verdict: str

    def to_dict(self) -> dict:
        d = asdict(self)
        d["norm_balance"] = list(self.norm_balance)
        return d


def gap_probe(z: State, params: Params, tol: float | None = None) -> GapReport:
    """Explain a state on the boundary of the outer set.

    Verdict ``FirstOrder`` when all four first-order conditions hold,
    ``GapPoint`` when only the sign balance fails, ``Inconclusive`` otherwise.
    """
    t = params.tol(tol)
    if not (in_upper(z, params, t, closed=True) and not in_upper(z, params, t, closed=False)):
        raise ValueError("gap probe needs a state on the boundary of the outer set")
    M0 = m0(z, params)
    da, db = (max(x, 0.0) for x in _slack(z, params))
    G = math.sqrt(da * db)
    norm_balance = (norm(M0 @ z.beta) * math.sqrt(da), norm(M0.T @ z.alpha) * math.sqrt(db))
    try:
        _third_order(z, params, t)
        lower_failure = None
    except NotDecomposable as exc:
        lower_failure = exc.reason.value

    rank = numerical_rank(M0, t)
    fac = rank_one_factor(M0, t)
    factorizes = fac is not None
    magnitudes = coplanar = sign_balance = False
    residual = None
    if factorizes:
        u, v, sigma = fac
        magnitudes = abs(sigma - G) <= t
        abar = -math.sqrt(db) * u
        bbar = math.sqrt(da) * v
        w = z.alpha - z.beta
        coplanar = abs(float(w @ cross3(abar, bbar))) <= t * max(1.0, norm(w) * norm(abar) * norm(bbar))
        residual = float(z.alpha @ abar - z.beta @ bbar)
        sign_balance = abs(residual) <= t * max(1.0, norm(z.alpha) * norm(abar) + norm(z.beta) * norm(bbar))
    if factorizes and magnitudes and coplanar:
        verdict = "FirstOrder" if sign_balance else "GapPoint"
    else:
        verdict = "Inconclusive"
    return GapReport(rank, factorizes, magnitudes, coplanar, sign_balance, residual, norm_balance, lower_failure, verdict)
