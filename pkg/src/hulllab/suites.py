"""Named property suites run by ``hulllab verify`` and the acceptance tests.

Each suite draws its own seeded samples, checks one invariant at a fixed
tolerance and returns a :class:`SuiteResult`.  Failures are counted, and the
first few are kept verbatim for diagnosis.
"""

from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np

from .bounds import check_h_convexity, check_lambda_convexity_U, gamma_star, h_gamma, in_upper
from .laminates import (
    NotDecomposable,
    Split,
    decompose,
    first_order_split,
    first_order_witness,
    rescale_pair,
    verify_tree,
)
from .linalg import cross3, nuclear_norm, norm
from .sampler import (
    child_stream,
    forward_laminate,
    random_unit,
    sample_ball,
    sample_K,
    sample_rank_one_lower,
    sample_upper,
)
from .state import Direction, Params, State, _axial_of_antisym_part, f0, g_defect, m0
from .wave_cone import in_lambda, move_direction, witness_residual

# split kinds whose direction comes from direction_from_vectors
RECIPE_KINDS = frozenset({"first-order", "third-order", "forward-first-order", "forward-rank-one"})

_KEEP = 5


@dataclass
class SuiteResult:
    name: str
    n: int
    seed: int
    tolerance: float
    failures: int = 0
    max_residual: float = 0.0
    skipped: int = 0
    elapsed: float = 0.0
    examples: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.failures == 0

    def record(self, residual: float, **info) -> None:
        """Track ``residual``; it fails when above the tolerance (or NaN)."""
        if not residual <= self.tolerance:
            self.failures += 1
            if len(self.examples) < _KEEP:
                self.examples.append({"residual": residual, **info})
        if residual > self.max_residual or math.isnan(residual):
            self.max_residual = residual

    def fail(self, **info) -> None:
        self.failures += 1
        if len(self.examples) < _KEEP:
            self.examples.append(info)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["passed"] = self.passed
        return d

    def line(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        return (
            f"{verdict} {self.name}: n={self.n} failures={self.failures} "
            f"max_residual={self.max_residual:.3g} (tol {self.tolerance:g}) {self.elapsed:.2f}s"
        )


def _timed(fn):
    def run(*args, **kwargs) -> SuiteResult:
        t0 = time.perf_counter()
        res = fn(*args, **kwargs)
        res.elapsed = time.perf_counter() - t0
        return res

    run.__doc__ = fn.__doc__
    run.__name__ = fn.__name__
    return run


@_timed
def f0_identity(params: Params, n: int, seed: int) -> SuiteResult:
    """``|A|_F^2 id + 2 A^2 == 2 f0(A) (x) f0(A)`` for random skew ``A`` of varied scale."""
    res = SuiteResult("f0-identity", n, seed, 1e-12)
    rng = child_stream(seed, 0)
    for i in range(n):
        G = rng.standard_normal((3, 3)) * 10.0 ** rng.uniform(-3, 3)
        A = G - G.T
        a = f0(A)
        fro2 = float(np.sum(A * A))
        lhs = fro2 * np.eye(3) + 2.0 * A @ A
        err = float(np.linalg.norm(lhs - 2.0 * np.outer(a, a)))
        res.record(err / (1.0 + fro2), index=i)
    return res


@_timed
def h_convexity(params: Params, n: int, seed: int) -> SuiteResult:
    """Midpoint convexity of ``H_gamma`` with slack ``1e-10``."""
    rep = check_h_convexity(params, n, seed)
    res = SuiteResult("h-convexity", n, seed, 1e-10, max_residual=max(rep.max_excess, 0.0))
    res.failures = len(rep.violations)
    res.examples = rep.violations[:_KEEP]
    return res


@_timed
def lambda_convexity_u(params: Params, n: int, seed: int) -> SuiteResult:
    """Cone segments between points of ``U`` stay in the closure of ``U``."""
    rep = check_lambda_convexity_U(params, n, seed)
    res = SuiteResult("lambda-convexity-U", n, seed, 1e-8, max_residual=max(rep.max_excess, 0.0))
    res.failures = len(rep.violations)
    res.skipped = rep.skipped
    res.examples = rep.violations[:_KEEP]
    return res


@_timed
@_timed
def forward_backward(params: Params, n: int, seed: int, directions: list | None = None) -> SuiteResult:
    """Depth-1 forward laminates are accepted by the first-order test and re-split into the constraint set."""
    res = SuiteResult("forward-backward", n, seed, 1e-8)
    for i in range(n):
        z, tree = forward_laminate(params, 1, child_stream(seed, i))
        if directions is not None:
            directions.append(tree.direction)
        w = first_order_witness(z, params)
        if w is None:
            res.fail(index=i, reason="rejected")
            continue
        try:
            split = first_order_split(z, w, params)
        except ValueError as exc:
            res.fail(index=i, reason=str(exc))
            continue
        if directions is not None:
            directions.append(split.direction)
        res.record(verify_tree(split, params).recombination_error, index=i)
    return res


@_timed
def sandwich(params: Params, n: int, seed: int, directions: list | None = None) -> SuiteResult:
    """Forward laminates of depths 1-3 lie in the closure of ``U`` (tolerance ``1e-8``).

    The residual is ``|M0|_n - G`` clipped at zero.  When ``directions`` is
    given, every recipe-built split direction is appended to it.
    """
    tol = 1e-8
    res = SuiteResult("sandwich", n, seed, tol)
    for i in range(n):
        z, tree = forward_laminate(params, 1 + i % 3, child_stream(seed, i))
        if directions is not None:
            directions.extend(s.direction for s in tree.splits() if s.kind in RECIPE_KINDS)
        if not in_upper(z, params, tol, closed=True):
            excess = nuclear_norm(m0(z, params)) - g_defect(z, params, tol)
            res.fail(index=i, depth=1 + i % 3, excess=excess)
            res.max_residual = max(res.max_residual, excess)
    return res


def check_directions(directions: list[Direction], name: str = "wave-cone", seed: int = 0) -> SuiteResult:
    """Fresh null-space witness residual and Ohm flatness of each direction (both ``<= 1e-9``)."""
    t0 = time.perf_counter()
    res = SuiteResult(name, len(directions), seed, 1e-9)
    for i, d in enumerate(directions):
        w = in_lambda(d)
        if w is None:
            res.fail(index=i, reason="not in the wave cone")
            continue
        res.record(witness_residual(d, *w), index=i, check="witness")
        ohm = abs(float(_axial_of_antisym_part(d.M_bar) @ (d.alpha_bar - d.beta_bar)))
        res.record(ohm, index=i, check="ohm")
    res.elapsed = time.perf_counter() - t0
    return res


def worked_example_directions() -> list[Direction]:
    """Recipe directions from the two worked decompositions."""
    P = Params(1.0, 1.0, 0.0)
    e1, e2 = np.eye(3)[0], np.eye(3)[1]
    out = []
    for k in (0.8, 0.4):
        tree = decompose(State(0.6 * e2, np.zeros(3), k * np.outer(e1, e2)), P)
        out.extend(s.direction for s in tree.splits() if s.kind in RECIPE_KINDS)
    return out


@_timed
def wave_cone(params: Params, n: int, seed: int) -> SuiteResult:
    """Recipe directions from the worked examples, forward/backward and sandwich runs."""
    dirs = worked_example_directions()
    forward_backward(params, n, seed, directions=dirs)
    sandwich(params, n, seed, directions=dirs)
    res = check_directions(dirs, seed=seed)
    return res


def _lower_candidate(params: Params, i: int, rng) -> State:
    kind = i % 4
    if kind == 0:
        return forward_laminate(params, 1, rng)[0]
    if kind == 1:
        return forward_laminate(params, 2, rng)[0]
    if kind == 2:
        return sample_rank_one_lower(params, rng)
    return sample_upper(params, rng, fill=float(rng.uniform(0.0, 1.0)))


@_timed
def soundness(params: Params, n: int, seed: int) -> SuiteResult:
    """Every tree for a state accepted by ``in_lower_hull`` re-verifies from scratch.

    Candidates mix first-order, flux-consistent, rank-one lower-bound and
    generic upper-set states; rejected candidates count as skipped.  Leaves,
    kernel witnesses and recombination are all checked at ``1e-8``.
    """
    res = SuiteResult("soundness", n, seed, 1e-8)
    for i in range(n):
        z = _lower_candidate(params, i, child_stream(seed, i))
        try:
            tree = decompose(z, params)
        except NotDecomposable:
            res.skipped += 1
            continue
        rep = verify_tree(tree, params, kernel=True)
        res.record(
            max(rep.max_leaf_residual, rep.max_lambda_residual, rep.max_child_error, rep.recombination_error),
            index=i,
        )
    return res


def first_order_residuals(z: State, abar, bbar, params: Params) -> dict:
    """Residuals of the three first-order conditions for a candidate pair (split normalization).

    ``flux``: ``M0 + G abar_hat (x) bbar_hat``; ``sign`` and ``ratio``: the two
    balance equations; ``coplanar``: the triple product.
    """
    da = params.r**2 - float(z.alpha @ z.alpha)
    db = params.s**2 - float(z.beta @ z.beta)
    G = math.sqrt(da * db)
    na, nb = norm(abar), norm(bbar)
    ratio = da / db
    return {
        "flux": float(np.linalg.norm(m0(z, params) + G * np.outer(abar / na, bbar / nb))),
        "sign": abs(float(z.beta @ bbar) * ratio - float(z.alpha @ abar)),
        "ratio": abs(ratio - na * na / (nb * nb)),
        "coplanar": abs(float((z.alpha - z.beta) @ cross3(abar, bbar))),
    }


@_timed
def normalization_cross_check(params: Params, n: int, seed: int) -> SuiteResult:
    """Normalized first-order witnesses, once rescaled, satisfy the unnormalized conditions."""
    res = SuiteResult("normalization-cross-check", n, seed, 1e-9)
    for i in range(n):
        z, _ = forward_laminate(params, 1, child_stream(seed, i))
        w = first_order_witness(z, params)
        if w is None:
            res.fail(index=i, reason="rejected")
            continue
        da = params.r**2 - float(z.alpha @ z.alpha)
        db = params.s**2 - float(z.beta @ z.beta)
        abar, bbar = rescale_pair(w.abar, w.bbar, da / db)
        res.record(max(first_order_residuals(z, abar, bbar, params).values()), index=i)
    return res


@_timed
def second_order_invariance(params: Params, n: int, seed: int) -> SuiteResult:
    """``M0`` does not change along the pure-``beta`` and pure-``alpha`` moves."""
    res = SuiteResult("second-order-invariance", n, seed, 1e-12)
    for i in range(n):
        rng = child_stream(seed, i)
        a = sample_ball(params.r, rng)
        b = sample_ball(params.s, rng)
        z = State(a, b, np.outer(a, b) + params.p * np.eye(3) + rng.standard_normal((3, 3)))
        base = m0(z, params)
        for d in (move_direction(z, bbar=random_unit(rng)), move_direction(z, abar=random_unit(rng))):
            t = float(rng.uniform(-2.0, 2.0)) * max(params.r, params.s)
            drift = float(np.linalg.norm(m0(z.shifted(d, t), params) - base))
            res.record(drift / (1.0 + float(np.linalg.norm(z.M)) + abs(t) * float(np.linalg.norm(d.M_bar))), index=i)
    return res


@_timed
def weight_identity(params: Params, n: int, seed: int) -> SuiteResult:
    """``t (1 - t) = G / (|abar| |bbar|)`` at first-order splits, ``t`` the right-child weight.

    The difference vector between the two children is ``(t2 - t1) d``.
    """
    res = SuiteResult("weight-identity", n, seed, 1e-9)
    for i in range(n):
        z, _ = forward_laminate(params, 1, child_stream(seed, i))
        tree = decompose(z, params)
        if not isinstance(tree, Split) or tree.kind != "first-order":
            res.fail(index=i, reason=f"decomposed as {getattr(tree, 'kind', 'leaf')}")
            continue
        t = tree.weights[1]
        span = tree.t2 - tree.t1
        rhs = g_defect(z, params) / (span * span * norm(tree.direction.alpha_bar) * norm(tree.direction.beta_bar))
        res.record(abs(t * (1.0 - t) - rhs), index=i)
    return res


@_timed
def h_equivalence(params: Params, n: int, seed: int) -> SuiteResult:
    """``sign H_gamma*(z) == sign(|M0|_n - G)`` at strictly interior states."""
    res = SuiteResult("h-equivalence", n, seed, 0.0)
    band = 1e-9 * max(1.0, params.r * params.s)
    for i in range(n):
        rng = child_stream(seed, i)
        z = sample_upper(params, rng, fill=float(rng.uniform(0.0, 2.0)))
        gap = nuclear_norm(m0(z, params)) - g_defect(z, params)
        if abs(gap) <= band:
            res.skipped += 1
            continue
        H = h_gamma(z, gamma_star(z, params), params)
        if abs(H) > band and (H > 0) != (gap > 0):
            res.fail(index=i, H=H, gap=gap)
    return res


@_timed
def sphere_law(params: Params, n: int, seed: int) -> SuiteResult:
    """The mean of sampled ``alpha`` on the sphere is within ``0.02 r`` of the origin.

    At least 10^5 draws are used whatever ``n`` is: the standard error of
    the mean is ``r / sqrt(3 n)``, too coarse for the bound below that.
    """
    n = max(n, 100_000)
    res = SuiteResult("sphere-law", n, seed, 0.02 * params.r)
    rng = child_stream(seed, 0)
    total = np.zeros(3)
    for _ in range(n):
        total += sample_K(params, rng).alpha
    res.record(norm(total / n), mean=(total / n).tolist())
    return res


SUITES: dict[str, Callable[[Params, int, int], SuiteResult]] = {
    "f0-identity": f0_identity,
    "h-convexity": h_convexity,
    "lambda-convexity-U": lambda_convexity_u,
    "forward-backward": forward_backward,
    "sandwich": sandwich,
    "wave-cone": wave_cone,
    "soundness": soundness,
    "normalization-cross-check": normalization_cross_check,
    "second-order-invariance": second_order_invariance,
    "weight-identity": weight_identity,
    "h-equivalence": h_equivalence,
    "sphere-law": sphere_law,
}


def run_suite(name: str, params: Params, n: int, seed: int) -> SuiteResult:
    if name not in SUITES:
        raise KeyError(f"unknown suite {name!r}; known: {', '.join(SUITES)}")
    if n <= 0:
        raise ValueError("n must be positive")
    return SUITES[name](params, n, seed)
