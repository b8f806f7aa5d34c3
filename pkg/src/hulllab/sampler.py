"""Seeded generators for constraint-set points, forward laminates and point clouds.

RNG contract
------------
Every random quantity comes from a Philox-4x64 counter-based generator.
Sample ``i`` of a campaign with master seed ``seed`` draws from
``child_stream(seed, i)``, i.e. ``Philox(SeedSequence(seed, spawn_key=(i,)))``.
Samples never share a stream, so serial and threaded runs produce the same
values in the same order.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .bounds import VERDICT_TAGS, Verdict, classify
from .laminates import Leaf, Split
from .linalg import cross3, cross_matrix, nuclear_norm, norm, solve_quadratic
from .state import Direction, Params, State, m0, ohm_defect
from .wave_cone import direction_from_vectors, move_direction

REGIONS = ("kpoints", "laminates", "boundary", "ball", "lower", "file")
_MAX_TRIES = 1000
_EYE = np.eye(3)


def child_stream(seed: int, index: int) -> np.random.Generator:
    if seed < 0 or index < 0:
        raise ValueError("seed and index must be non-negative")
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(index,))))


def random_unit(rng) -> np.ndarray:
    while True:
        g = np.asarray(rng.standard_normal(3), dtype=float)
        n = norm(g)
        if n > 1e-12:
            return g / n


def sample_ball(radius: float, rng) -> np.ndarray:
    """Uniform point of the open ball of the given radius."""
    return radius * rng.uniform(0.0, 1.0) ** (1.0 / 3.0) * random_unit(rng)


def sample_K(params: Params, rng) -> State:
    """Uniform ``alpha`` and ``beta`` on their spheres, ``M = alpha (x) beta + p I``."""
    alpha = params.r * random_unit(rng)
    beta = params.s * random_unit(rng)
    return State._trusted(alpha, beta, np.multiply.outer(alpha, beta) + params.p * _EYE)


def _flux_consistent(alpha, beta, params: Params) -> State:
    return State(alpha, beta, np.multiply.outer(alpha, beta) + params.p * _EYE)


def _first_order_laminate(params: Params, rng) -> tuple[State, Split]:
    """Two constraint-set points joined by a cone segment, combined away from both ends."""
    r, s, p = params.r, params.s, params.p
    for _ in range(_MAX_TRIES):
        a1 = _tscale(r, _tunit(rng))
        b1 = _tscale(s, _tunit(rng))
        a2 = _tscale(r, _tunit(rng))
        da = _tsub(a1, a2)
        # beta2 on the s-sphere with (alpha2 - beta2) . (da x (beta1 - beta2)) = 0,
        # a linear condition beta2 . w = C
        w = _tcross(da, _tsub(b1, a2))
        C = _tdot(a2, _tcross(da, b1))
        nw = math.sqrt(_tdot(w, w))
        if nw < 1e-6 or abs(C) >= 0.999 * s * nw:
            continue
        wh = _tscale(1.0 / nw, w)
        perp = _tunit(rng)
        perp = _tsub(perp, _tscale(_tdot(perp, wh), wh))
        npp = math.sqrt(_tdot(perp, perp))
        if npp < 1e-6:
            continue
        h = C / nw
        b2 = _taxpy(_tscale(h, wh), math.sqrt(s * s - h * h) / npp, perp)
        db = _tsub(b1, b2)
        if math.sqrt(_tdot(da, da)) < 0.05 * r or math.sqrt(_tdot(db, db)) < 0.05 * s:
            continue
        M1, M2 = _touter(a1, b1), _touter(a2, b2)
        if p:
            for k in (0, 4, 8):
                M1[k] += p
                M2[k] += p
        lam = float(rng.uniform(0.05, 0.95))
        mix = lambda x, y: [(1.0 - lam) * xi + lam * yi for xi, yi in zip(x, y)]
        root = _node(mix(a1, a2), mix(b1, b2), mix(M1, M2))
        d = direction_from_vectors(root, _tsub(a2, a1), _tsub(b2, b1))
        gap = d.M_bar.ravel().tolist()
        if max(abs(g - (y - x)) for g, x, y in zip(gap, M1, M2)) > 1e-9 * max(1.0, r * s):
            continue
        k1, k2 = _node(a1, b1, M1), _node(a2, b2, M2)
        return root, Split(root, d, -lam, 1.0 - lam, Leaf(k1), Leaf(k2), kind="forward-first-order")
    raise RuntimeError("could not draw a first-order laminate")


# The move trees below do their 3-vector arithmetic on plain float tuples:
# at this size a numpy call costs several times the arithmetic it performs.


def _tdot(x, y) -> float:
    return x[0] * y[0] + x[1] * y[1] + x[2] * y[2]


def _tcross(x, y) -> tuple:
    return (x[1] * y[2] - x[2] * y[1], x[2] * y[0] - x[0] * y[2], x[0] * y[1] - x[1] * y[0])


def _touter(x, y) -> list:
    x0, x1, x2 = x
    y0, y1, y2 = y
    return [x0 * y0, x0 * y1, x0 * y2, x1 * y0, x1 * y1, x1 * y2, x2 * y0, x2 * y1, x2 * y2]


def _taxpy(x, t, y) -> list:
    return [xi + t * yi for xi, yi in zip(x, y)]


def _tsub(x, y) -> tuple:
    return (x[0] - y[0], x[1] - y[1], x[2] - y[2])


def _tscale(t, x) -> tuple:
    return (t * x[0], t * x[1], t * x[2])


def _tunit(rng) -> tuple:
    while True:
        g = rng.standard_normal(3).tolist()
        n = math.sqrt(_tdot(g, g))
        if n > 1e-12:
            return (g[0] / n, g[1] / n, g[2] / n)


def _tball(radius, rng) -> tuple:
    # same draws as sample_ball
    rho = radius * rng.uniform(0.0, 1.0) ** (1.0 / 3.0)
    return _tscale(rho, _tunit(rng))


def _node(a, b, M) -> State:
    return State._trusted(np.array(a), np.array(b), np.array(M).reshape(3, 3))


def _move(a, b, v, on_beta: bool) -> Direction:
    """``(0, v, a (x) v)`` or ``(v, 0, v (x) b)`` with the witness ``xi = v x a`` (``v x b``), ``c = 0``."""
    zero = np.zeros(3)
    if on_beta:
        Mb, xi = _touter(a, v), _tcross(v, a)
    else:
        Mb, xi = _touter(v, b), _tcross(v, b)
    n = math.sqrt(_tdot(xi, xi))
    if n <= 1e-9:
        z = _node(a, b, (0.0,) * 9)
        return move_direction(z, bbar=v) if on_beta else move_direction(z, abar=v)
    vv = np.array(v)
    wit = (np.array((xi[0] / n, xi[1] / n, xi[2] / n)), 0.0)
    Mb = np.array(Mb).reshape(3, 3)
    return Direction._trusted(zero, vv, Mb, wit) if on_beta else Direction._trusted(vv, zero, Mb, wit)


def _random_flux_tree(z: State, params: Params, rng):
    """Laminate of a flux-consistent state using random (not radial) move directions.

    ``beta`` travels along a random unit ``b`` with ``M`` changing by
    ``alpha (x) b``; then ``alpha`` along a random unit ``a`` with ``M``
    changing by ``a (x) beta``.  Both moves leave ``M0`` unchanged.
    """
    a, b, M = tuple(z.alpha.tolist()), tuple(z.beta.tolist()), tuple(z.M.ravel().tolist())
    bh = _tunit(rng)
    nb2 = _tdot(b, b)
    if nb2 >= params.s**2 * (1.0 - 1e-12):
        return _random_alpha_tree(a, b, M, params, rng, z)
    d = _move(a, b, bh, on_beta=True)
    t1, t2 = solve_quadratic(1.0, 2.0 * _tdot(b, bh), nb2 - params.s**2)
    dM = _touter(a, bh)
    left = _random_alpha_tree(a, _taxpy(b, t1, bh), _taxpy(M, t1, dM), params, rng)
    right = _random_alpha_tree(a, _taxpy(b, t2, bh), _taxpy(M, t2, dM), params, rng)
    return Split(z, d, t1, t2, left, right, kind="forward-beta-move")


def _random_alpha_tree(a, b, M, params: Params, rng, node: State | None = None):
    z = _node(a, b, M) if node is None else node
    ah = _tunit(rng)
    na2 = _tdot(a, a)
    if na2 >= params.r**2 * (1.0 - 1e-12):
        return Leaf(z)
    d = _move(a, b, ah, on_beta=False)
    t1, t2 = solve_quadratic(1.0, 2.0 * _tdot(a, ah), na2 - params.r**2)
    dM = _touter(ah, b)
    lo = _node(_taxpy(a, t1, ah), b, _taxpy(M, t1, dM))
    hi = _node(_taxpy(a, t2, ah), b, _taxpy(M, t2, dM))
    return Split(z, d, t1, t2, Leaf(lo), Leaf(hi), kind="forward-alpha-move")


def _flux_laminate(params: Params, rng) -> tuple[State, Split]:
    z = _flux_consistent(sample_ball(params.r, rng), sample_ball(params.s, rng), params)
    return z, _random_flux_tree(z, params, rng)


def _rank_one_laminate(params: Params, rng) -> tuple[State, Split]:
    """Two flux-consistent states joined along a rank-one cone segment.

    From ``za`` the segment direction has ``M_bar = alpha (x) bbar + abar (x)
    beta + h abar (x) bbar`` with ``h = -2 alpha.abar/|abar|^2``, so the far
    end ``za + h d`` is flux-consistent again and ``|alpha|`` is preserved.
    """
    r, s, p = params.r, params.s, params.p
    for _ in range(_MAX_TRIES):
        a = _tball(r, rng)
        b = _tball(s, rng)
        na = math.sqrt(_tdot(a, a))
        if na < 0.05 * r:
            continue
        ab = _tunit(rng)
        proj = _tdot(a, ab)
        if abs(proj) < 0.05 * na:
            continue
        if proj > 0:
            ab, proj = _tscale(-1.0, ab), -proj
        h = -2.0 * proj
        # bbar in span(alpha - beta, abar) keeps the three vectors coplanar
        n = _tcross(_tsub(a, b), ab)
        nn = math.sqrt(_tdot(n, n))
        bb = _tunit(rng)
        if nn > 1e-9:
            bb = _taxpy(bb, -_tdot(bb, n) / (nn * nn), n)
        nbb = math.sqrt(_tdot(bb, bb))
        if nbb < 1e-3:
            continue
        bb = _tscale(1.0 / nbb, bb)
        # beta + x*bb stays in the ball for x in [q1, q2]
        q1, q2 = solve_quadratic(1.0, 2.0 * _tdot(b, bb), _tdot(b, b) - s * s)
        x = float(rng.uniform(q1, q2))
        if abs(x) < 0.05 * (q2 - q1):
            continue
        bb = _tscale(x / h, bb)
        lam = float(rng.uniform(0.05, 0.95))
        # root = za + lam h (ab, bb, Mb), Mb = a (x) bb + ab (x) b + h ab (x) bb
        t = lam * h
        Mb = [x + y + h * z for x, y, z in zip(_touter(a, bb), _touter(ab, b), _touter(ab, bb))]
        M = _touter(a, b)
        if p:
            for k in (0, 4, 8):
                M[k] += p
        root = _node(_taxpy(a, t, ab), _taxpy(b, t, bb), _taxpy(M, t, Mb))
        try:
            d = direction_from_vectors(root, ab, bb)
        except ValueError:
            continue
        t1, t2 = -lam * h, (1.0 - lam) * h
        lo, hi = root.shifted(d, t1), root.shifted(d, t2)
        if norm(hi.beta) > s or norm(lo.beta) > s:
            continue
        return root, Split(
            root, d, t1, t2, _random_flux_tree(lo, params, rng), _random_flux_tree(hi, params, rng),
            kind="forward-rank-one",
        )
    raise RuntimeError("could not draw a rank-one laminate")


def forward_laminate(params: Params, depth: int, rng) -> tuple[State, "Leaf | Split"]:
    """A point of the order-``depth`` lamination set together with its tree.

    Depth 0 is a constraint-set point; depth 1 combines two of them across a
    cone segment; depth 2 is a flux-consistent interior point split by
    random ``beta`` then ``alpha`` moves; depth 3 combines two depth-2
    states across a rank-one segment.
    """
    if depth == 0:
        z = sample_K(params, rng)
        return z, Leaf(z)
    if depth == 1:
        return _first_order_laminate(params, rng)
    if depth == 2:
        return _flux_laminate(params, rng)
    if depth == 3:
        return _rank_one_laminate(params, rng)
    raise ValueError(f"depth must be in 0..3, got {depth}")


def sample_rank_one_lower(params: Params, rng, fill: float | None = None) -> State:
    """Interior state with ``M0 = sigma u (x) v`` meeting the third-order conditions.

    ``v`` lies in the plane of ``u`` and ``alpha - beta`` (zero Ohm defect),
    with its angle solved so that ``|M0 beta| sqrt(r^2-|alpha|^2)`` equals
    ``|M0^T alpha| sqrt(s^2-|beta|^2)``, and its sign chosen so that
    ``alpha . M0 beta <= 0``.  ``sigma = fill * G`` (``fill`` uniform in
    ``[0.05, 1]`` when omitted).
    """
    r, s = params.r, params.s
    for _ in range(_MAX_TRIES):
        alpha = sample_ball(r, rng)
        beta = sample_ball(s, rng)
        da = r * r - float(alpha @ alpha)
        db = s * s - float(beta @ beta)
        if da < 1e-3 * r * r or db < 1e-3 * s * s:
            continue
        w = alpha - beta
        u = random_unit(rng)
        e = w - float(w @ u) * u
        if norm(e) < 1e-6 * max(1.0, norm(w)):
            continue
        e /= norm(e)
        # v(th) = cos(th) u + sin(th) e, so v.beta = R cos(th - phi)
        bu, be = float(beta @ u), float(beta @ e)
        R = math.hypot(bu, be)
        target = abs(float(alpha @ u)) * math.sqrt(db / da)
        if R < 1e-9 or target > R:
            continue
        phi = math.atan2(be, bu)
        th = phi + (1.0 if rng.uniform() < 0.5 else -1.0) * math.acos(target / R)
        v = math.cos(th) * u + math.sin(th) * e
        if float(alpha @ u) * float(v @ beta) > 0:
            v = -v
        f = float(rng.uniform(0.05, 1.0)) if fill is None else float(fill)
        M0 = f * math.sqrt(da * db) * np.outer(u, v)
        return State(alpha, beta, np.outer(alpha, beta) + params.p * np.eye(3) - M0)
    raise RuntimeError("could not draw a rank-one lower-bound state")


def sample_upper(params: Params, rng, fill: float) -> State:
    """Ball-product state on the Ohm manifold with ``|M0|_n = fill * G``.

    ``M0`` starts Gaussian; its antisymmetric part is corrected so the Ohm
    defect vanishes, then the matrix is rescaled.
    """
    alpha = sample_ball(params.r, rng)
    beta = sample_ball(params.s, rng)
    M0 = np.asarray(rng.standard_normal((3, 3)), dtype=float)
    w = alpha - beta
    if norm(w) > 0:
        wh = w / norm(w)
        ax = np.array([M0[1, 2] - M0[2, 1], M0[2, 0] - M0[0, 2], M0[0, 1] - M0[1, 0]])
        M0 = M0 - 0.5 * float(ax @ wh) * cross_matrix(wh)
    G = math.sqrt((params.r**2 - alpha @ alpha) * (params.s**2 - beta @ beta))
    M0 *= fill * G / nuclear_norm(M0)
    return State(alpha, beta, np.outer(alpha, beta) + params.p * np.eye(3) - M0)


def boundary_state(alpha, beta, params: Params, M0_unit) -> State:
    """State with ``M0 = G(z) * M0_unit``; ``M0_unit`` should have unit nuclear norm."""
    alpha = np.asarray(alpha, dtype=float)
    beta = np.asarray(beta, dtype=float)
    G = math.sqrt((params.r**2 - alpha @ alpha) * (params.s**2 - beta @ beta))
    return State(alpha, beta, np.outer(alpha, beta) + params.p * np.eye(3) - G * np.asarray(M0_unit, dtype=float))


def sample_boundary(params: Params, rng, rank: int = 1) -> State:
    """Exact point of the outer boundary ``|M0|_n = G`` on the Ohm manifold.

    Rank one: ``M0 = G u (x) v`` with ``v`` in the plane of ``u`` and
    ``alpha - beta``.  Rank two: ``M0`` symmetric with two nonzero
    eigenvalues, so the Ohm defect vanishes identically.
    """
    alpha = sample_ball(params.r, rng)
    beta = sample_ball(params.s, rng)
    if rank == 1:
        u = random_unit(rng)
        w = alpha - beta
        c1, c2 = rng.standard_normal(2)
        v = c1 * u + c2 * w
        if norm(v) < 1e-9:
            v = u
        v = v / norm(v)
        return boundary_state(alpha, beta, params, np.outer(u, v))
    if rank == 2:
        Q, _ = np.linalg.qr(rng.standard_normal((3, 3)))
        share = float(rng.uniform(0.1, 0.9))
        signs = rng.choice([-1.0, 1.0], size=2)
        D = np.diag([signs[0] * share, signs[1] * (1.0 - share), 0.0])
        return boundary_state(alpha, beta, params, Q @ D @ Q.T)
    raise ValueError("rank must be 1 or 2")


def draw(params: Params, region: str, index: int, seed: int) -> State:
    """Sample ``index`` of a campaign (deterministic in ``(seed, index)``)."""
    rng = child_stream(seed, index)
    if region == "kpoints":
        return sample_K(params, rng)
    if region == "laminates":
        return forward_laminate(params, 1 + index % 3, rng)[0]
    if region == "boundary":
        return sample_boundary(params, rng, rank=2 if index % 4 == 3 else 1)
    if region == "ball":
        return sample_upper(params, rng, fill=float(rng.uniform(0.0, 1.25)))
    if region == "lower":
        return sample_rank_one_lower(params, rng)
    raise ValueError(f"unknown region {region!r}; expected one of {', '.join(REGIONS)}")


@dataclass
class Row:
    state: State
    verdict: Verdict
    nuclear: float
    G: float
    ohm: float


@dataclass
class ClassificationReport:
    params: Params
    n: int
    seed: int
    region: str
    counts: dict = field(default_factory=dict)
    rows: list = field(default_factory=list)

    def summary(self) -> dict:
        c = self.counts
        return {
            "params": {"r": self.params.r, "s": self.params.s, "p": self.params.p},
            "n": self.n,
            "seed": self.seed,
            "region": self.region,
            "counts": dict(c),
            "in_lower_hull": c["InLowerHull"],
            "in_upper_interior": c["InUpperInterior"],
            "on_upper_boundary": sum(v for k, v in c.items() if k.startswith("OnUpperBoundary")),
            "gap_candidates": c["OnUpperBoundary/GapCandidate"],
            "outside_upper": c["OutsideUpper"],
            "off_ohm_manifold": c["OffOhmManifold"],
        }


def thread_count(requested: int | None = None) -> int:
    """Worker count: the request, capped by ``HULLLAB_THREADS`` when set."""
    n = requested if requested is not None else (os.cpu_count() or 1)
    cap = os.environ.get("HULLLAB_THREADS")
    if cap:
        n = min(n, max(1, int(cap)))
    return max(1, n)


def classify_row(z: State, params: Params, tol: float | None = None) -> Row:
    da = params.r**2 - float(z.alpha @ z.alpha)
    db = params.s**2 - float(z.beta @ z.beta)
    G = math.sqrt(max(da, 0.0) * max(db, 0.0))
    return Row(z, classify(z, params, tol), nuclear_norm(m0(z, params)), G, ohm_defect(z))


def monte_carlo_classify(
    params: Params,
    n: int,
    seed: int,
    region: str,
    points: list[State] | None = None,
    threads: int | None = 1,
    tol: float | None = None,
) -> ClassificationReport:
    """Classify a sampled cloud and tally the verdicts.

    ``region`` is one of ``kpoints``, ``laminates``, ``boundary``, ``ball``, ``lower``
    or ``file`` (classify the given ``points``; ``n`` is then their count).
    The result depends only on ``(params, n, seed, region)``, never on the
    thread count.
    """
    if region not in REGIONS:
        raise ValueError(f"unknown region {region!r}; expected one of {', '.join(REGIONS)}")
    if region == "file":
        if not points:
            raise ValueError("region 'file' needs a non-empty point list")
        n = len(points)
    if n <= 0:
        raise ValueError("n must be positive")

    def work(i: int) -> Row:
        z = points[i] if region == "file" else draw(params, region, i, seed)
        return classify_row(z, params, tol)

    workers = thread_count(threads)
    if workers == 1:
        rows = [work(i) for i in range(n)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(work, range(n), chunksize=64))
    counts = dict.fromkeys(VERDICT_TAGS, 0)
    for row in rows:
        counts[row.verdict.tag] += 1
    return ClassificationReport(params, n, seed, region, counts, rows)
