import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hulllab.state import Direction, State, _axial_of_antisym_part
from hulllab.wave_cone import (
    direction_from_vectors,
    in_lambda,
    lambda_matrix,
    move_direction,
    with_witness,
    witness_residual,
)

from conftest import E1, E2, E3, mat3, vec3


def _cone_element(xi, a, b, c, R):
    """General cone element: ``a, b`` orthogonal to ``xi`` and ``M = P R P - c a (x) xi - c xi (x) b``."""
    xi = xi / np.linalg.norm(xi)
    P = np.eye(3) - np.outer(xi, xi)
    a, b = P @ a, P @ b
    M = P @ R @ P - c * np.outer(a, xi) - c * np.outer(xi, b)
    return Direction(a, b, M), xi, c


def test_lambda_matrix_layout():
    d = Direction([1, 2, 3], [4, 5, 6], np.arange(9.0).reshape(3, 3))
    L = lambda_matrix(d)
    assert L.shape == (8, 4)
    assert np.array_equal(L[0:3, 0:3], d.M_bar) and np.array_equal(L[3:6, 0:3], d.M_bar.T)
    assert np.array_equal(L[6, :3], d.alpha_bar) and np.array_equal(L[7, :3], d.beta_bar)
    assert L[6, 3] == 0 and L[7, 3] == 0


def test_pure_time_oscillation_is_rejected():
    # identity M and nonzero a, b: only xi = 0 is compatible
    assert in_lambda(Direction(E1, E2, np.eye(3))) is None


def test_zero_direction_is_in_cone():
    w = in_lambda(Direction(np.zeros(3), np.zeros(3), np.zeros((3, 3))))
    assert w is not None and np.linalg.norm(w[0]) == pytest.approx(1.0)


@given(vec3, vec3, vec3, st.floats(-3, 3), mat3)
def test_constructed_cone_elements_are_found(xi, a, b, c, R):
    if np.linalg.norm(xi) < 1e-3:
        return
    d, xi_u, c_u = _cone_element(xi, a, b, c, R)
    assert witness_residual(d, xi_u, c_u) <= 1e-9 * max(1.0, np.linalg.norm(d.vector()))
    w = in_lambda(d)
    assert w is not None
    assert witness_residual(d, *w) <= 1e-9 * max(1.0, np.linalg.norm(d.vector()))


def test_witness_residual_normalizes_xi():
    d, xi, c = _cone_element(E3, E1, E2, 0.7, np.eye(3))
    assert witness_residual(d, 5 * xi, 5 * c) == pytest.approx(witness_residual(d, xi, c), abs=1e-15)
    assert witness_residual(d, np.zeros(3), 1.0) == float("inf")


def test_with_witness_falls_back_and_rejects():
    d, xi, c = _cone_element(E3, E1, E2, 0.7, np.eye(3))
    fixed = with_witness(d, E1, 0.0)  # wrong hint: kernel solve takes over
    assert witness_residual(fixed, *fixed.witness) <= 1e-9
    with pytest.raises(ValueError):
        with_witness(Direction(E1, E2, np.eye(3)), E3, 0.0)


@given(vec3, vec3, vec3, vec3, st.floats(-2, 2), st.floats(-2, 2))
def test_direction_from_vectors_in_cone_and_ohm_flat(alpha, beta, abar, u, s1, s2):
    z = State(alpha, beta, np.outer(alpha, beta))
    w = alpha - beta
    if np.linalg.norm(abar) < 1e-3:
        return
    bbar = s1 * w + s2 * abar  # coplanar with alpha - beta and abar
    d = direction_from_vectors(z, abar, bbar)
    scale = max(1.0, np.linalg.norm(d.vector()))
    assert witness_residual(d, *d.witness) <= 1e-9 * scale
    fresh = in_lambda(d)
    assert fresh is not None and witness_residual(d, *fresh) <= 1e-9 * scale
    ohm = float(_axial_of_antisym_part(d.M_bar) @ (d.alpha_bar - d.beta_bar))
    assert abs(ohm) <= 1e-9 * scale**2


def test_direction_from_vectors_preconditions():
    z = State(E1, E2, np.outer(E1, E2))
    with pytest.raises(ValueError):
        direction_from_vectors(z, np.zeros(3), E1)
    with pytest.raises(ValueError):
        direction_from_vectors(z, E3, E1)  # e1 - e2, e3, e1 are not coplanar


def test_parallel_pair_uses_fallback_witness():
    z = State(E1, E2, np.outer(E1, E2))
    d = direction_from_vectors(z, E3, 2 * E3)
    assert witness_residual(d, *d.witness) <= 1e-12


@given(vec3, vec3, vec3)
def test_move_directions_keep_m0(alpha, beta, v):
    if np.linalg.norm(v) < 1e-3:
        return
    z = State(alpha, beta, np.outer(alpha, beta))
    for d in (move_direction(z, bbar=v), move_direction(z, abar=v)):
        assert witness_residual(d, *d.witness) <= 1e-9 * max(1.0, np.linalg.norm(d.vector()))
        z2 = z.shifted(d, 0.37)
        assert np.allclose(np.outer(z2.alpha, z2.beta) - z2.M, 0.0, atol=1e-12 * (1 + np.linalg.norm(z2.M)))


def test_move_direction_needs_exactly_one_vector():
    z = State(E1, E2, np.zeros((3, 3)))
    with pytest.raises(ValueError):
        move_direction(z)
    with pytest.raises(ValueError):
        move_direction(z, abar=E1, bbar=E2)
