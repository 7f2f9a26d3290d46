import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from drem_mrac import matrix_core as mc


def cofactor_adjugate(M):
    """Independent oracle: transpose of the cofactor matrix via numpy minors."""
    n = M.shape[0]
    if n == 1:
        return np.ones((1, 1))
    C = np.empty((n, n))
    for i, j in itertools.product(range(n), range(n)):
        minor = np.delete(np.delete(M, i, axis=0), j, axis=1)
        C[i, j] = (-1) ** (i + j) * np.linalg.det(minor)
    return C.T


def charpoly_min_eig(M):
    """Independent oracle: smallest real root of the characteristic polynomial."""
    roots = np.roots(np.poly(M))
    return float(np.min(roots.real))


finite = st.floats(-10, 10, allow_nan=False, allow_infinity=False)


def square(n):
    return arrays(np.float64, (n, n), elements=finite)


# --- determinant ---

def test_determinant_identity_zero_diag():
    assert mc.determinant(np.eye(7)) == 1.0
    assert mc.determinant(np.zeros((3, 3))) == 0.0
    assert mc.determinant(np.diag([2.0, 3.0, 4.0])) == pytest.approx(24.0, rel=1e-15)


def test_determinant_small_dims_exact():
    assert mc.determinant([[5.0]]) == 5.0
    assert mc.determinant([[1.0, 2.0], [3.0, 4.0]]) == -2.0


def test_determinant_non_square():
    with pytest.raises(mc.DimensionError):
        mc.determinant(np.ones((2, 3)))


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 6).flatmap(lambda n: st.tuples(square(n), square(n))))
def test_determinant_multiplicative(pair):
    A, B = pair
    lhs = mc.determinant(A @ B)
    rhs = mc.determinant(A) * mc.determinant(B)
    scale = (1 + np.linalg.norm(A)) ** A.shape[0] * (1 + np.linalg.norm(B)) ** A.shape[0]
    assert abs(lhs - rhs) <= 1e-8 * (1 + abs(rhs)) + 1e-13 * scale


# --- adjugate ---

def test_adjugate_identity_and_1x1():
    assert np.array_equal(mc.adjugate(np.eye(5)), np.eye(5))
    assert np.array_equal(mc.adjugate([[5.0]]), [[1.0]])


def test_adjugate_well_conditioned_5x5():
    rng = np.random.default_rng(1)
    M = rng.normal(size=(5, 5)) + 3 * np.eye(5)
    adj = mc.adjugate(M)
    res = np.linalg.norm(adj @ M - mc.determinant(M) * np.eye(5))
    assert res <= 1e-8 * np.linalg.norm(adj) * np.linalg.norm(M)
    assert np.allclose(adj, cofactor_adjugate(M), rtol=1e-10, atol=1e-12)


def test_adjugate_of_singular_matrix_is_finite_and_matches_cofactors():
    rng = np.random.default_rng(2)
    M = rng.normal(size=(6, 6))
    M[3] = 0.0
    adj = mc.adjugate(M)
    assert np.all(np.isfinite(adj))
    assert np.allclose(adj, cofactor_adjugate(M), atol=1e-10)
    # rank n-1 through a dependent column
    M2 = rng.normal(size=(4, 4))
    M2[:, 2] = M2[:, 0] + M2[:, 1]
    assert np.allclose(mc.adjugate(M2), cofactor_adjugate(M2), atol=1e-10)


def test_adjugate_of_zero_matrix():
    assert np.array_equal(mc.adjugate(np.zeros((3, 3))), np.zeros((3, 3)))
    # 2x2 zero: adj is zero too
    assert np.array_equal(mc.adjugate(np.zeros((2, 2))), np.zeros((2, 2)))


@settings(max_examples=80, deadline=None)
@given(st.integers(1, 7).flatmap(lambda n: st.tuples(square(n), st.integers(-1, n - 1))))
def test_adjugate_identity_property(case):
    M, zero_row = case
    M = M.copy()
    if zero_row >= 0:
        M[zero_row] = 0.0
    adj = mc.adjugate(M)
    d = mc.determinant(M)
    n = M.shape[0]
    lhs = np.linalg.norm(adj @ M - d * np.eye(n))
    assert lhs <= 1e-8 * (1 + np.linalg.norm(adj)) * (1 + np.linalg.norm(M))


def test_adjugate_product_matches_adjugate_times_rhs():
    rng = np.random.default_rng(3)
    M = rng.normal(size=(7, 7))
    R = rng.normal(size=(7, 4))
    y, d = mc.adjugate_product(M, R)
    assert np.allclose(y, cofactor_adjugate(M) @ R, rtol=1e-9, atol=1e-10)
    assert d == pytest.approx(np.linalg.det(M), rel=1e-12)


def test_adjugate_product_on_ill_conditioned_gramian():
    # Gramian of monomials on [0, 0.3]: condition number around 2e11
    t = np.linspace(0, 0.3, 400)
    V = np.vstack([t ** k for k in range(6)])
    F = V @ V.T * (t[1] - t[0])
    theta = np.arange(1.0, 7.0)[:, None]
    G = F @ theta
    y, d = mc.adjugate_product(F, G)
    err_fused = np.abs(y / d - theta).max()
    err_two_pass = np.abs(mc.adjugate(F) @ G / d - theta).max()
    assert err_fused < 1e-6
    assert err_fused < err_two_pass


def test_adjugate_non_square():
    with pytest.raises(mc.DimensionError):
        mc.adjugate(np.ones((3, 2)))


# --- solve ---

def test_solve_examples():
    b = np.array([[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]])
    assert np.array_equal(mc.solve(np.eye(3), b), b)
    assert np.allclose(mc.solve(np.diag([2.0, 4.0]), [2.0, 4.0]), [1.0, 1.0])


def test_solve_random_spd_residual():
    rng = np.random.default_rng(4)
    M = rng.normal(size=(6, 6))
    a = M @ M.T + 6 * np.eye(6)
    b = rng.normal(size=6)
    x = mc.solve(a, b)
    assert np.linalg.norm(a @ x - b) <= 1e-10 * np.linalg.norm(b)


def test_solve_singular_reports_pivot():
    with pytest.raises(mc.SingularMatrixError) as info:
        mc.solve(np.array([[1.0, 2.0], [2.0, 4.0]]), [1.0, 1.0])
    assert info.value.pivot <= 1e-12


def test_solve_shape_errors():
    with pytest.raises(mc.DimensionError):
        mc.solve(np.eye(3), np.ones(2))


# --- min_eig_sym ---

def test_min_eig_examples():
    assert mc.min_eig_sym(np.diag([3.0, 1.0, 2.0])) == pytest.approx(1.0, rel=1e-14)
    assert mc.min_eig_sym(np.zeros((4, 4))) == 0.0


def test_min_eig_rejects_asymmetric():
    with pytest.raises(mc.SymmetryError):
        mc.min_eig_sym(np.array([[1.0, 2.0], [0.0, 1.0]]))


def test_min_eig_recorded_gramian_vs_charpoly():
    # Gramian of a recorded two-tone signal, dim 4
    t = np.linspace(0, 3, 3001)
    V = np.vstack([np.sin(t), np.cos(2 * t), np.ones_like(t), t])
    G = (V[:, :-1] @ V[:, :-1].T) * (t[1] - t[0])
    lam = mc.min_eig_sym(G)
    assert lam == pytest.approx(charpoly_min_eig(G), rel=1e-6)
    assert lam == pytest.approx(np.linalg.eigvalsh(G)[0], rel=1e-8)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 6).flatmap(lambda n: square(n)), st.integers(0, 2 ** 31 - 1))
def test_min_eig_rayleigh_upper_bound(M, seed):
    S = M + M.T
    lam = mc.min_eig_sym(S)
    rng = np.random.default_rng(seed)
    V = rng.normal(size=(100, S.shape[0]))
    rq = np.einsum("ij,jk,ik->i", V, S, V) / np.einsum("ij,ij->i", V, V)
    assert np.all(lam <= rq + 1e-9 * (1 + np.linalg.norm(S)))


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 4).flatmap(lambda n: square(n)))
def test_min_eig_matches_dense_eigensolver_small_dims(M):
    S = M + M.T
    lam = mc.min_eig_sym(S)
    ref = np.linalg.eigvalsh(S)[0]
    assert abs(lam - ref) <= 1e-8 * (1 + np.abs(S).max())
