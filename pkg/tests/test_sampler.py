import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hulllab.bounds import VERDICT_TAGS
from hulllab.laminates import Leaf, verify_tree
from hulllab.sampler import (
    REGIONS,
    child_stream,
    draw,
    forward_laminate,
    monte_carlo_classify,
    sample_K,
    sample_rank_one_lower,
    sample_upper,
    thread_count,
)
from hulllab.state import Params, in_K, m0, ohm_defect
from hulllab.linalg import nuclear_norm
from hulllab.state import g_defect

from conftest import params_st, seeds


class _StubStream:
    """Replays fixed normal draws."""

    def __init__(self, normals):
        self.normals = list(normals)

    def standard_normal(self, size):
        out, self.normals = self.normals[:size], self.normals[size:]
        return np.array(out)


def test_sample_K_with_stubbed_stream():
    P = Params(2.0, 3.0, 0.5)
    z = sample_K(P, _StubStream([5.0, 0.0, 0.0, 0.0, 0.5, 0.0]))
    assert np.allclose(z.alpha, [2.0, 0, 0]) and np.allclose(z.beta, [0, 3.0, 0])
    assert z.M[0, 1] == pytest.approx(6.0)
    assert z.M[0, 0] == pytest.approx(0.5)


@given(params_st(), seeds())
def test_sample_K_lands_in_K(P, seed):
    z = sample_K(P, child_stream(seed, 0))
    assert in_K(z, P, 1e-12 * max(1.0, P.r * P.s))


def test_streams_are_reproducible_and_distinct():
    a = child_stream(3, 7).standard_normal(4)
    assert np.array_equal(a, child_stream(3, 7).standard_normal(4))
    assert not np.array_equal(a, child_stream(3, 8).standard_normal(4))
    with pytest.raises(ValueError):
        child_stream(-1, 0)


def test_sphere_sampling_is_centered():
    P = Params(1.0, 1.0)
    rng = child_stream(11, 0)
    mean = np.mean([sample_K(P, rng).alpha for _ in range(100_000)], axis=0)
    assert np.linalg.norm(mean) <= 0.02


def test_depth_zero_is_a_constraint_point():
    P = Params(1.0, 1.0)
    z, tree = forward_laminate(P, 0, child_stream(1, 1))
    assert isinstance(tree, Leaf) and in_K(z, P)
    with pytest.raises(ValueError):
        forward_laminate(P, 4, child_stream(1, 1))


@settings(max_examples=150)
@given(params_st(), seeds(), st.integers(1, 3))
def test_forward_laminate_trees_verify(P, seed, depth):
    z, tree = forward_laminate(P, depth, child_stream(seed, 0))
    assert tree.state is z
    assert tree.depth == depth or (depth > 1 and tree.depth >= depth - 1)
    assert verify_tree(tree, P, kernel=True).ok(1e-8 * max(1.0, P.r * P.s))


@given(params_st(), seeds(), st.floats(0.0, 1.5))
def test_sample_upper_hits_requested_fill(P, seed, fill):
    z = sample_upper(P, child_stream(seed, 0), fill)
    assert abs(ohm_defect(z)) <= 1e-9 * max(1.0, P.r * P.s) * (P.r + P.s)
    assert nuclear_norm(m0(z, P)) == pytest.approx(fill * g_defect(z, P), rel=1e-9, abs=1e-12)


@given(params_st(), seeds())
def test_rank_one_lower_states_meet_the_conditions(P, seed):
    z = sample_rank_one_lower(P, child_stream(seed, 0))
    M0 = m0(z, P)
    da = P.r**2 - z.alpha @ z.alpha
    db = P.s**2 - z.beta @ z.beta
    lhs = np.linalg.norm(M0 @ z.beta) * np.sqrt(da)
    rhs = np.linalg.norm(M0.T @ z.alpha) * np.sqrt(db)
    scale = max(1.0, P.r * P.s) ** 2
    assert abs(lhs - rhs) <= 1e-10 * scale
    assert z.alpha @ M0 @ z.beta <= 1e-12 * scale
    assert nuclear_norm(M0) <= g_defect(z, P) * (1 + 1e-12)


def test_draw_rejects_unknown_region():
    with pytest.raises(ValueError):
        draw(Params(1.0, 1.0), "nowhere", 0, 0)


def test_monte_carlo_laminates_never_outside():
    rep = monte_carlo_classify(Params(1.0, 1.0), 300, 5, "laminates")
    s = rep.summary()
    assert s["outside_upper"] == 0 and s["off_ohm_manifold"] == 0
    assert sum(s["counts"].values()) == 300
    assert set(s["counts"]) == set(VERDICT_TAGS)


def test_monte_carlo_is_independent_of_thread_count():
    P = Params(1.0, 1.0, 0.2)
    one = monte_carlo_classify(P, 200, 9, "ball", threads=1)
    many = monte_carlo_classify(P, 200, 9, "ball", threads=4)
    assert one.counts == many.counts
    assert all(a.state == b.state and a.verdict == b.verdict for a, b in zip(one.rows, many.rows))


def test_monte_carlo_argument_errors():
    P = Params(1.0, 1.0)
    with pytest.raises(ValueError):
        monte_carlo_classify(P, 0, 1, "ball")
    with pytest.raises(ValueError):
        monte_carlo_classify(P, 5, 1, "bogus")
    with pytest.raises(ValueError):
        monte_carlo_classify(P, 5, 1, "file")
    assert "file" in REGIONS


def test_thread_count_respects_env_cap(monkeypatch):
    monkeypatch.setenv("HULLLAB_THREADS", "2")
    assert thread_count(8) == 2
    monkeypatch.delenv("HULLLAB_THREADS")
    assert thread_count(3) == 3
