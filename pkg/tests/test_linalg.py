import math

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from hulllab.linalg import (
    cross3,
    cross_matrix,
    kernel_basis,
    nuclear_norm,
    nuclear_norms,
    numerical_rank,
    rank_one_factor,
    singular_values,
    solve_quadratic,
    unit,
)

from conftest import E1, E2, mat3, vec3


def test_singular_values_of_simple_matrices():
    assert np.allclose(singular_values(np.eye(3)).sigma, [1, 1, 1])
    assert np.allclose(singular_values(np.diag([1.0, -2.0, 3.0])).sigma, [3, 2, 1])
    assert np.allclose(singular_values(0.8 * np.outer(E1, E2)).sigma, [0.8, 0, 0])


@given(mat3)
def test_svd_reconstructs_and_is_sorted(M):
    svd = singular_values(M)
    scale = max(1.0, float(np.linalg.norm(M)))
    assert np.linalg.norm(svd.reconstruct() - M) <= 1e-12 * scale
    assert np.all(np.diff(svd.sigma) <= 0) and svd.sigma[-1] >= 0
    assert np.allclose(svd.U.T @ svd.U, np.eye(3), atol=1e-12)
    assert np.allclose(svd.V.T @ svd.V, np.eye(3), atol=1e-12)


@pytest.mark.parametrize("bad", [np.full((3, 3), np.nan), np.full((3, 3), np.inf)])
def test_non_finite_input_rejected(bad):
    with pytest.raises(ValueError):
        singular_values(bad)
    with pytest.raises(ValueError):
        nuclear_norm(bad)


def test_nuclear_norm_examples():
    assert nuclear_norm(np.eye(3)) == pytest.approx(3.0)
    u, v = np.array([1.0, 2.0, 2.0]), np.array([0.0, 3.0, 4.0])
    assert nuclear_norm(np.outer(u, v)) == pytest.approx(15.0)
    # M0 of the worked first-order state is -0.8 e1 (x) e2
    assert nuclear_norm(-0.8 * np.outer(E1, E2)) == pytest.approx(0.8, abs=1e-15)


@given(mat3, mat3)
def test_nuclear_norm_is_a_norm_dominating_frobenius(A, B):
    nA = nuclear_norm(A)
    assert nA >= np.linalg.norm(A) * (1 - 1e-12) - 1e-12
    assert nuclear_norm(A + B) <= nA + nuclear_norm(B) + 1e-9
    assert nuclear_norm(-2.5 * A) == pytest.approx(2.5 * nA, rel=1e-12, abs=1e-12)


@given(mat3)
def test_nuclear_norm_matches_gram_eigenvalues(M):
    # second route: sum of sqrt(eig(M^T M)); sqrt loses half the digits near zero
    lam = np.clip(np.linalg.eigvalsh(M.T @ M), 0.0, None)
    scale = max(1.0, float(np.linalg.norm(M)))
    assert abs(nuclear_norm(M) - float(np.sqrt(lam).sum())) <= 1e-7 * scale


def test_batched_nuclear_norm_matches_scalar():
    rng = np.random.default_rng(0)
    Ms = rng.standard_normal((50, 3, 3))
    assert np.allclose(nuclear_norms(Ms), [nuclear_norm(M) for M in Ms], rtol=1e-13)


def test_rank_one_factor_of_worked_defect():
    u, v, s = rank_one_factor(-0.8 * np.outer(E1, E2), 1e-9)
    assert s == pytest.approx(0.8)
    assert np.allclose(u, E1) and np.allclose(v, -E2)


def test_rank_one_factor_absent_for_full_and_zero_rank():
    assert rank_one_factor(np.eye(3), 1e-9) is None
    assert rank_one_factor(np.zeros((3, 3)), 1e-9) is None
    with pytest.raises(ValueError):
        rank_one_factor(np.eye(3), 0.0)


@given(vec3, vec3)
def test_rank_one_factor_recovers_outer_products(a, b):
    M = np.outer(a, b)
    fac = rank_one_factor(M, 1e-9)
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na * nb <= 1e-6:
        return
    assert fac is not None
    u, v, s = fac
    assert s == pytest.approx(na * nb, rel=1e-10)
    assert np.linalg.norm(M - s * np.outer(u, v)) <= 2e-9 * max(s, 1.0)
    # canonical representative: largest entry of u positive
    assert u[np.argmax(np.abs(u))] > 0


def test_numerical_rank():
    assert numerical_rank(np.eye(3)) == 3
    assert numerical_rank(np.outer(E1, E2)) == 1
    assert numerical_rank(np.zeros((3, 3))) == 0


def test_kernel_basis_extremes():
    assert kernel_basis(np.zeros((8, 4)), 1e-9).shape == (4, 4)
    Q, _ = np.linalg.qr(np.random.default_rng(1).standard_normal((8, 4)))
    assert kernel_basis(Q, 1e-9).shape == (0, 4)
    with pytest.raises(ValueError):
        kernel_basis(np.zeros((9, 4)), 1e-9)


@given(st.lists(st.floats(-5, 5), min_size=8 * 4, max_size=8 * 4), st.integers(1, 3))
def test_kernel_basis_is_orthonormal_null_space(entries, drop):
    A = np.array(entries).reshape(8, 4)
    A[:, :drop] = 0.0  # force a nontrivial kernel
    K = kernel_basis(A, 1e-9)
    assert K.shape[0] >= drop
    assert np.allclose(K @ K.T, np.eye(K.shape[0]), atol=1e-12)
    smax = np.linalg.norm(A, 2)
    assert np.all(np.linalg.norm(A @ K.T, axis=0) <= 1e-9 * max(smax, 1.0) + 1e-12)


def test_solve_quadratic_cases():
    assert solve_quadratic(1.0, 0.0, -1.0) == (-1.0, 1.0)
    assert solve_quadratic(1.0, 0.0, 1.0) is None
    assert solve_quadratic(1.0, 0.0, 0.0) == (0.0, 0.0)
    with pytest.raises(ValueError):
        solve_quadratic(0.0, 1.0, 1.0)


def test_solve_quadratic_avoids_cancellation():
    # roots 1e8 and 1e-8; the naive formula loses the small one entirely
    t1, t2 = solve_quadratic(1.0, -(1e8 + 1e-8), 1.0)
    assert t1 == pytest.approx(1e-8, rel=1e-14)
    assert t2 == pytest.approx(1e8, rel=1e-14)


@given(st.floats(-1e3, 1e3), st.floats(-1e3, 1e3), st.floats(0.1, 10))
def test_solve_quadratic_roots_satisfy_equation(r1, r2, a):
    assume(abs(r1 - r2) > 1e-3 * (1 + abs(r1) + abs(r2)))  # a double root may round to a negative discriminant
    b, c = -a * (r1 + r2), a * r1 * r2
    roots = solve_quadratic(a, b, c)
    assert roots is not None
    lo, hi = roots
    assert lo <= hi
    assert lo == pytest.approx(min(r1, r2), rel=1e-6, abs=1e-6 * (1 + abs(r1) + abs(r2)))
    assert hi == pytest.approx(max(r1, r2), rel=1e-6, abs=1e-6 * (1 + abs(r1) + abs(r2)))


@given(vec3, vec3)
def test_cross_helpers_agree_with_numpy(a, b):
    assert np.allclose(cross3(a, b), np.cross(a, b), atol=1e-12)
    assert np.allclose(cross_matrix(b) @ a, np.cross(a, b), atol=1e-12)


def test_unit_falls_back_to_e1_for_zero():
    assert np.array_equal(unit(np.zeros(3)), E1)
    assert math.isclose(np.linalg.norm(unit(np.array([3.0, 4.0, 0.0]))), 1.0)
