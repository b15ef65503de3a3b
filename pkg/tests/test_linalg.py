import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from rkhs_behavior.errors import ContractError, DimensionError, ShapeError
from rkhs_behavior.linalg import (
    RankPolicy,
    as_sequence,
    colspace_residual,
    eig_sym,
    hankel,
    is_pe,
    numerical_rank,
    oblique_project,
    pinv,
    svd_trunc,
)

finite = st.floats(-10, 10, allow_nan=False, allow_infinity=False)


def matrices(max_rows=6, max_cols=6):
    return st.tuples(st.integers(1, max_rows), st.integers(1, max_cols)).flatmap(
        lambda s: arrays(np.float64, s, elements=finite))


# -- hankel


def test_hankel_scalar_unrolled():
    np.testing.assert_array_equal(hankel([1, 2, 3, 4], 2), [[1, 2, 3], [2, 3, 4]])


def test_hankel_full_depth_is_single_column(rng):
    w = rng.standard_normal((5, 2))
    H = hankel(w, 5)
    assert H.shape == (10, 1)
    np.testing.assert_array_equal(H[:, 0], w.ravel())


def test_hankel_depth_one_is_data_matrix(rng):
    w = rng.standard_normal((7, 3))
    np.testing.assert_array_equal(hankel(w, 1), w.T)


@pytest.mark.parametrize("depth", [0, 6, -1])
def test_hankel_depth_out_of_range(depth):
    with pytest.raises(DimensionError):
        hankel(np.arange(5.0), depth)


def test_as_sequence_rejects_ragged():
    with pytest.raises(ShapeError):
        as_sequence([[1.0, 2.0], [3.0]])


@given(st.integers(1, 4), st.integers(2, 12), st.integers(0, 3), st.data())
def test_hankel_shifted_block_property(q, T, i, data):
    depth = data.draw(st.integers(1, T))
    i = min(i, depth - 1)
    w = data.draw(arrays(np.float64, (T, q), elements=finite))
    H = hankel(w, depth)
    Hs = hankel(w[i:], depth - i) if depth - i >= 1 else None
    # block row i of H equals block row 0 of the shifted signal's Hankel
    ncols = H.shape[1]
    np.testing.assert_array_equal(H[i * q:(i + 1) * q], Hs[:q, :ncols])


# -- persistency of excitation


def test_is_pe_random_normal_matches_svd_oracle(rng):
    w = rng.standard_normal(20)
    H = np.array([w[i:i + 18] for i in range(3)])
    s = np.linalg.svd(H, compute_uv=False)
    assert is_pe(w, 3) == bool(s[-1] > 1e-10 * s[0])
    assert is_pe(w, 3)


def test_is_pe_zero_and_constant():
    assert not is_pe(np.zeros(20), 2)
    assert not is_pe(np.full(20, 3.0), 2)


def test_is_pe_too_short_is_false():
    # depth*q rows cannot be reached with fewer columns
    assert not is_pe(np.arange(4.0), 3)


# -- pseudoinverse


def test_pinv_identity_and_diagonal():
    np.testing.assert_array_equal(pinv(np.eye(3)), np.eye(3))
    np.testing.assert_allclose(pinv(np.diag([2.0, 0.0])), np.diag([0.5, 0.0]))


def test_pinv_penrose_identity(rng):
    M = rng.standard_normal((5, 3))
    P = pinv(M)
    assert np.linalg.norm(M @ P @ M - M) < 1e-10
    assert np.linalg.norm(P @ M @ P - P) < 1e-10
    np.testing.assert_allclose(P, np.linalg.pinv(M), atol=1e-12)


def test_pinv_empty():
    assert pinv(np.zeros((0, 4))).shape == (4, 0)


def test_pinv_cuts_small_singular_values():
    M = np.diag([1.0, 1e-12])
    np.testing.assert_allclose(pinv(M), np.diag([1.0, 0.0]))
    np.testing.assert_allclose(pinv(M, RankPolicy(rel_tol=1e-14)), np.diag([1.0, 1e12]))
    np.testing.assert_allclose(pinv(np.diag([3.0, 2.0, 1.0]), RankPolicy("fixed", fixed_rank=1)),
                               np.diag([1 / 3, 0, 0]))


@given(matrices())
def test_pinv_penrose_conditions(M):
    P = pinv(M)
    scale = max(1.0, np.abs(M).max()) * max(1.0, np.abs(P).max())
    assert np.allclose(M @ P @ M, M, atol=1e-8 * scale * max(1.0, np.abs(M).max()))
    assert np.allclose((M @ P).T, M @ P, atol=1e-8 * scale)
    assert np.allclose((P @ M).T, P @ M, atol=1e-8 * scale)


def test_pinv_involution_on_exact_rank(rng):
    M = rng.standard_normal((6, 2)) @ rng.standard_normal((2, 5))
    assert np.linalg.norm(pinv(pinv(M)) - M) < 1e-9


def test_rank_policy_validation():
    with pytest.raises(ValueError):
        RankPolicy("fixed")
    with pytest.raises(ValueError):
        RankPolicy("bogus")
    with pytest.raises(ContractError):
        RankPolicy("fixed", fixed_rank=5).rank(np.array([3.0, 1.0]))
    assert numerical_rank(np.zeros((3, 3))) == 0


# -- oblique projection


def _oblique_oracle(A, B, C):
    # classical form: A Pi_{B perp} (C Pi_{B perp})^+ C
    PiB = np.eye(A.shape[1]) - np.linalg.pinv(B) @ B
    return A @ PiB @ np.linalg.pinv(C @ PiB) @ C


def test_oblique_project_identity_instance():
    # rows of B orthogonal to rows of C, A = C
    C = np.array([[1.0, 0, 0, 0], [0, 1.0, 0, 0]])
    B = np.array([[0, 0, 1.0, 0]])
    np.testing.assert_allclose(oblique_project(C, B, C), C, atol=1e-14)


def test_oblique_project_matches_classical_formula(rng):
    k = 30
    A, B, C = (rng.standard_normal((r, k)) for r in (3, 4, 5))
    np.testing.assert_allclose(oblique_project(A, B, C), _oblique_oracle(A, B, C), atol=1e-10)


def test_oblique_project_empty_b_is_orthogonal_projection(rng):
    A, C = rng.standard_normal((2, 9)), rng.standard_normal((3, 9))
    ref = A @ C.T @ np.linalg.pinv(C @ C.T) @ C
    np.testing.assert_allclose(oblique_project(A, np.zeros((0, 9)), C), ref, atol=1e-12)


def test_oblique_project_zero_a(rng):
    B, C = rng.standard_normal((2, 8)), rng.standard_normal((3, 8))
    np.testing.assert_array_equal(oblique_project(np.zeros((4, 8)), B, C), np.zeros((4, 8)))


def test_oblique_project_annihilates_b_rowspace(rng):
    B, C = rng.standard_normal((2, 12)), rng.standard_normal((3, 12))
    A = rng.standard_normal((4, 2)) @ B
    assert np.abs(oblique_project(A, B, C)).max() < 1e-10


@given(st.integers(1, 3), st.integers(0, 3), st.integers(1, 4), st.integers(0, 2**31 - 1))
def test_oblique_project_rowspace_in_c(p, q, r, seed):
    g = np.random.default_rng(seed)
    k = 2 * (q + r) + 3
    A, B, C = g.standard_normal((p, k)), g.standard_normal((q, k)), g.standard_normal((r, k))
    O = oblique_project(A, B, C)
    resid = O - O @ np.linalg.pinv(C) @ C
    assert np.linalg.norm(resid) < 1e-9 * max(1.0, np.linalg.norm(O))


def test_oblique_project_shape_mismatch():
    with pytest.raises(ShapeError):
        oblique_project(np.zeros((2, 3)), np.zeros((1, 4)), np.zeros((1, 3)))


# -- eigen and singular value decompositions


def test_eig_sym_diagonal():
    lam, V = eig_sym(np.diag([1.0, 3.0]))
    np.testing.assert_array_equal(lam, [3.0, 1.0])
    np.testing.assert_array_equal(np.abs(V), [[0, 1], [1, 0]])
    assert (V.max(axis=0) > 0).all()


def test_eig_sym_zero():
    lam, V = eig_sym(np.zeros((3, 3)))
    np.testing.assert_array_equal(lam, 0)
    np.testing.assert_allclose(V.T @ V, np.eye(3))


def test_eig_sym_reconstruction_and_sign_rule(rng):
    X = rng.standard_normal((4, 4))
    M = X + X.T
    lam, V = eig_sym(M)
    assert np.linalg.norm(V @ np.diag(lam) @ V.T - M) < 1e-9
    assert np.all(np.diff(lam) <= 0)
    idx = np.argmax(np.abs(V), axis=0)
    assert np.all(V[idx, range(4)] > 0)


def test_eig_sym_rejects_asymmetric():
    with pytest.raises(ValueError):
        eig_sym(np.array([[1.0, 2.0], [0.0, 1.0]]))


def test_eig_sym_symmetrizes_rounding():
    M = np.array([[2.0, 1.0], [1.0 + 1e-14, 2.0]])
    lam, _ = eig_sym(M)
    np.testing.assert_allclose(lam, [3.0, 1.0])


def test_svd_trunc_rank_one(rng):
    a, b = rng.standard_normal(4), rng.standard_normal(3)
    U, s, V = svd_trunc(np.outer(a, b))
    assert s.shape == (1,)
    np.testing.assert_allclose(s[0], np.linalg.norm(a) * np.linalg.norm(b))
    np.testing.assert_allclose((U * s) @ V.T, np.outer(a, b), atol=1e-12)


def test_svd_trunc_zero():
    U, s, V = svd_trunc(np.zeros((3, 2)))
    assert U.shape == (3, 0) and s.shape == (0,) and V.shape == (2, 0)


def test_svd_trunc_fixed_rank_error_is_third_singular_value(rng):
    Q1, _ = np.linalg.qr(rng.standard_normal((6, 4)))
    Q2, _ = np.linalg.qr(rng.standard_normal((4, 4)))
    M = Q1 @ np.diag([10.0, 5.0, 0.1, 0.01]) @ Q2.T
    U, s, V = svd_trunc(M, RankPolicy("fixed", fixed_rank=2))
    err = np.linalg.norm(M - (U * s) @ V.T, 2)
    np.testing.assert_allclose(err, np.linalg.svd(M, compute_uv=False)[2], rtol=1e-12)


def test_decompositions_deterministic(rng):
    X = rng.standard_normal((5, 5))
    M = X @ X.T
    a, b = eig_sym(M), eig_sym(M.copy())
    assert a[0].tobytes() == b[0].tobytes() and a[1].tobytes() == b[1].tobytes()
    c, d = svd_trunc(X), svd_trunc(X.copy())
    assert all(x.tobytes() == y.tobytes() for x, y in zip(c, d))


# -- column space residual


def test_colspace_residual(rng):
    M = rng.standard_normal((5, 2))
    assert colspace_residual(M, M @ [1.0, -2.0]) < 1e-14
    e = np.linalg.svd(M)[0][:, -1]
    np.testing.assert_allclose(colspace_residual(M, e), 1.0)
    assert colspace_residual(M, np.zeros(5)) == 0.0
    r = colspace_residual(M, np.column_stack([M[:, 0], e]))
    assert r.shape == (2,)
