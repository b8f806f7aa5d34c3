import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hulllab.laminates import (
    SECOND_ORDER,
    Leaf,
    NotDecomposable,
    Reason,
    Split,
    decompose,
    first_order_split,
    first_order_witness,
    in_lower_hull,
    recombine,
    rescale_pair,
    second_order_path,
    third_order_split,
    third_order_witness,
    verify_tree,
)
from hulllab.sampler import child_stream, forward_laminate, sample_rank_one_lower
from hulllab.state import Direction, Params, State, in_K, k_residual, m0

from conftest import E1, E2, E3, ball_point, params_st, seeds, z_gap, z_prime, z_star


def _leaf_set(tree):
    return sorted((round(w, 12), *np.round(s.vector(), 12)) for w, s in tree.leaves())


def _expected_zprime_leaves():
    """Closed form for the rank-one example.

    The first split has t = -1, +1 with weights 1/2 and children
    alpha = (+-sqrt(0.32), 0.6, 0), beta = (0, +-sqrt(0.5), 0).  Each child
    sends beta to +-e2 (weights (1 -+ sqrt(0.5))/2 toward -+ the child's beta
    direction) and then alpha to +-alpha/|alpha| with weights
    (1 -+ |alpha|)/2, |alpha| = sqrt(0.68).
    """
    a, b, na = math.sqrt(0.32), math.sqrt(0.5), math.sqrt(0.68)
    out = []
    for sgn in (1.0, -1.0):
        alpha = np.array([sgn * a, 0.6, 0.0])
        ahat = alpha / na
        bhat = sgn * E2
        for bs, wb in ((1.0, (1 + b) / 2), (-1.0, (1 - b) / 2)):
            for as_, wa in ((1.0, (1 + na) / 2), (-1.0, (1 - na) / 2)):
                al, be = as_ * ahat, bs * bhat
                z = State(al, be, np.outer(al, be))
                out.append((round(0.5 * wb * wa, 12), *np.round(z.vector(), 12)))
    return sorted(out)


def test_first_order_worked_example(unit_params):
    tree = decompose(z_star(), unit_params)
    assert isinstance(tree, Split) and tree.kind == "first-order"
    assert (tree.t1, tree.t2) == pytest.approx((-1.0, 1.0), abs=1e-14)
    assert tree.weights == pytest.approx((0.5, 0.5), abs=1e-14)
    lo, hi = tree.left.state, tree.right.state
    M = 0.8 * np.outer(E1, E2)
    expected = {
        (-1.0,): State([-0.8, 0.6, 0], -E2, M - 0.6 * np.outer(E2, E2)),
        (1.0,): State([0.8, 0.6, 0], E2, M + 0.6 * np.outer(E2, E2)),
    }
    got = {(math.copysign(1.0, s.alpha[0]),): s for s in (lo, hi)}
    for key, z in expected.items():
        assert got[key].distance(z) <= 1e-14
        assert k_residual(got[key], unit_params) <= 1e-10


def test_third_order_worked_example(unit_params):
    tree = decompose(z_prime(), unit_params)
    assert tree.kind == "third-order" and tree.depth == 3
    assert (tree.t1, tree.t2) == pytest.approx((-1.0, 1.0), abs=1e-14)
    assert _leaf_set(tree) == pytest.approx(_expected_zprime_leaves(), abs=1e-11)
    rep = verify_tree(tree, unit_params, kernel=True)
    assert rep.leaves == 8 and rep.ok(1e-10)


def test_gap_state_fails_norm_balance(unit_params):
    with pytest.raises(NotDecomposable) as info:
        decompose(z_gap(), unit_params)
    assert info.value.reason is Reason.NORM_BALANCE
    assert info.value.detail["lhs"] == pytest.approx(0.0, abs=1e-15)
    assert info.value.detail["rhs"] == pytest.approx(0.48, abs=1e-12)


def test_origin_decomposes_into_four_equal_leaves(unit_params):
    z0 = State(np.zeros(3), np.zeros(3), np.zeros((3, 3)))
    tree = decompose(z0, unit_params)
    leaves = list(tree.leaves())
    assert len(leaves) == 4
    assert [w for w, _ in leaves] == pytest.approx([0.25] * 4)
    assert all(abs(abs(s.alpha[0]) - 1) < 1e-15 and abs(abs(s.beta[0]) - 1) < 1e-15 for _, s in leaves)


def test_constraint_point_is_a_leaf(unit_params):
    z = State(E1, E2, np.outer(E1, E2))
    assert isinstance(decompose(z, unit_params), Leaf)


@pytest.mark.parametrize(
    "z, reason",
    [
        (State(np.zeros(3), np.zeros(3), -np.diag([0.1, 0.1, 0.0])), Reason.NOT_RANK_ONE),
        (State(np.zeros(3), np.zeros(3), -2.0 * np.outer(E1, E2)), Reason.NUCLEAR_EXCEEDS_BOUND),
        (State(0.5 * E1, 0.5 * E1, 0.25 * np.outer(E1, E1) - 0.1 * np.outer(E1, E1)), Reason.SIGN_CONDITION),
        (State(0.5 * E3, np.zeros(3), -0.3 * np.outer(E1, E2)), Reason.OHM_DEFECT),
        (State(2.0 * E1, np.zeros(3), np.zeros((3, 3))), Reason.OUT_OF_BALL),
    ],
)
def test_each_rejection_reason(unit_params, z, reason):
    with pytest.raises(NotDecomposable) as info:
        decompose(z, unit_params)
    assert info.value.reason is reason
    assert not in_lower_hull(z, unit_params)


def test_split_requires_opposite_roots():
    z = State(np.zeros(3), np.zeros(3), np.zeros((3, 3)))
    d = Direction(E1, np.zeros(3), np.zeros((3, 3)))
    with pytest.raises(ValueError):
        Split(z, d, 0.5, 1.0, Leaf(z), Leaf(z))


def test_first_order_witness_needs_interior(unit_params):
    with pytest.raises(ValueError):
        first_order_witness(State(E1, np.zeros(3), np.zeros((3, 3))), unit_params)


def test_third_order_witness_values(unit_params):
    assert third_order_witness(z_gap(), unit_params) is None
    flux = State(0.3 * E1, 0.2 * E2, 0.06 * np.outer(E1, E2))
    assert third_order_witness(flux, unit_params) is SECOND_ORDER
    w = third_order_witness(z_prime(), unit_params)
    # |abar| |bbar| = |M0|_n = 0.4 and |abar|/|bbar| = sqrt(0.64 / 1)
    na, nb = np.linalg.norm(w.abar), np.linalg.norm(w.bbar)
    assert na * nb == pytest.approx(0.4) and na / nb == pytest.approx(0.8)
    with pytest.raises(ValueError):
        third_order_split(z_prime(), type(w)(w.abar, w.bbar, 5.0), unit_params)


def test_rescale_pair_preserves_outer_product():
    a, b = np.array([1.0, 2.0, 0.0]), np.array([0.0, 0.5, 3.0])
    a2, b2 = rescale_pair(a, b, 2.0)
    assert np.allclose(np.outer(a2, b2), np.outer(a, b))
    assert np.dot(a2, a2) / np.dot(b2, b2) == pytest.approx(2.0)


def test_recombine_weights_must_sum_to_one():
    z = State(E1, E2, np.outer(E1, E2))
    d = Direction(E1, np.zeros(3), np.zeros((3, 3)))
    good = Split(z, d, -1.0, 1.0, Leaf(z.shifted(d, -1.0)), Leaf(z.shifted(d, 1.0)))
    root, leaves = recombine(good)
    assert root.distance(z) <= 1e-15 and len(leaves) == 2


@given(params_st(), st.data())
def test_second_order_path_reaches_constraint_set(P, data):
    a = data.draw(ball_point(P.r))
    b = data.draw(ball_point(P.s))
    z = State(a, b, np.outer(a, b) + P.p * np.eye(3))
    tree = second_order_path(z, P)
    assert tree.depth <= 2
    rep = verify_tree(tree, P, kernel=True)
    assert rep.ok(1e-8 * max(1.0, P.r * P.s))
    for split in tree.splits():
        assert np.linalg.norm(m0(split.left.state, P) - m0(z, P)) <= 1e-12 * max(1.0, P.r * P.s)


@settings(max_examples=150)
@given(params_st(), seeds())
def test_rank_one_lower_states_decompose_and_verify(P, seed):
    z = sample_rank_one_lower(P, child_stream(seed, 0))
    tree = decompose(z, P)
    rep = verify_tree(tree, P, kernel=True)
    assert rep.ok(1e-8 * max(1.0, P.r * P.s))
    for _, leaf in tree.leaves():
        assert in_K(leaf, P, 1e-8 * max(1.0, P.r * P.s))


@settings(max_examples=150)
@given(params_st(), seeds())
def test_forward_first_order_laminates_round_trip(P, seed):
    z, fwd = forward_laminate(P, 1, child_stream(seed, 0))
    w = first_order_witness(z, P)
    assert w is not None
    split = first_order_split(z, w, P)
    # the backward split finds the same two constraint points
    ends_fwd = sorted(tuple(np.round(s.state.vector(), 7)) for s in (fwd.left, fwd.right))
    ends_bwd = sorted(tuple(np.round(s.state.vector(), 7)) for s in (split.left, split.right))
    assert np.allclose(ends_fwd, ends_bwd, atol=1e-6 * max(1.0, P.r * P.s))
