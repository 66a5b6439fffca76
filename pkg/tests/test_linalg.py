import mpmath
import numpy as np
import pytest

from multiechelon import SingularMatrixError, TridiagonalBreakdown
from multiechelon.linalg import (
    TridiagonalMatrix,
    dense_inverse,
    dense_solve,
    expm,
    expm_2x2_closed,
    gershgorin,
    smw_inverse,
    tridiag_inverse,
    tridiag_solve,
)


def reference_expm(A, t=1.0):
    with mpmath.workdps(50):
        return np.array(mpmath.expm(mpmath.matrix((np.asarray(A) * t).tolist())).tolist(), dtype=float)


def rel_err(a, b):
    return np.linalg.norm(a - b) / max(np.linalg.norm(b), 1e-300)


@pytest.mark.parametrize("seed", range(20))
def test_expm_matches_high_precision(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 12))
    A = rng.normal(scale=rng.uniform(0.1, 20), size=(n, n))
    assert rel_err(expm(A), reference_expm(A)) < 1e-12


def test_expm_zero_and_time_scaling():
    A = np.array([[-0.137, 0.0025, 0.001], [0.005, -0.2325, 0.005], [0.002, 0.005, -0.3375]])
    np.testing.assert_array_equal(expm(A, 0.0), np.eye(3))
    np.testing.assert_allclose(expm(A, 40.0), reference_expm(A, 40.0), rtol=1e-12)


def test_expm_diagonal():
    d = np.array([-2.0, 0.5, 3.0])
    np.testing.assert_allclose(expm(np.diag(d)), np.diag(np.exp(d)), rtol=1e-14)


def test_expm_semigroup():
    rng = np.random.default_rng(3)
    A = rng.normal(size=(5, 5)) - 3 * np.eye(5)
    np.testing.assert_allclose(expm(A, 1.3) @ expm(A, 2.1), expm(A, 3.4), rtol=1e-11, atol=1e-14)


def test_expm_rejects_non_square_and_nan():
    with pytest.raises(ValueError):
        expm(np.ones((2, 3)))
    with pytest.raises(ValueError):
        expm(np.array([[np.nan]]))


@pytest.mark.parametrize(
    "A",
    [
        [[-0.135, 0.005], [0.005, -0.185]],
        [[-1.0, 0.0], [0.0, -1.0]],
        [[-1.0, 1.0], [0.0, -1.0]],
        [[0.0, 1.0], [-1.0, 0.0]],
        [[-0.3, 2.0], [-2.0, -0.3]],
        [[2.0, 0.5], [0.1, -4.0]],
    ],
)
@pytest.mark.parametrize("t", [0.0, 0.5, 7.0])
def test_closed_2x2_matches_pade(A, t):
    A = np.array(A)
    np.testing.assert_allclose(expm_2x2_closed(A, t), expm(A, t), rtol=1e-10, atol=1e-13)


def test_closed_2x2_at_zero_is_identity():
    np.testing.assert_array_equal(expm_2x2_closed(np.array([[1.0, 2.0], [3.0, 4.0]]), 0.0), np.eye(2))


def random_tridiag(rng, n, dominant=True):
    lower, upper = rng.normal(size=n - 1), rng.normal(size=n - 1)
    diag = rng.normal(size=n)
    if dominant:
        diag += np.sign(diag) * 4
    return TridiagonalMatrix(lower, diag, upper)


@pytest.mark.parametrize("n", [1, 2, 3, 10, 64])
def test_tridiag_solve_matches_dense(n):
    rng = np.random.default_rng(n)
    T = random_tridiag(rng, n)
    rhs = rng.normal(size=n)
    np.testing.assert_allclose(tridiag_solve(T, rhs), np.linalg.solve(T.to_dense(), rhs), rtol=1e-12, atol=1e-14)


def test_tridiag_identity_and_round_trip():
    T = TridiagonalMatrix.from_dense(np.eye(4))
    np.testing.assert_array_equal(tridiag_solve(T, [1, 2, 3, 4]), [1, 2, 3, 4])
    M = np.diag([1.0, 2, 3]) + np.diag([4.0, 5], 1) + np.diag([6.0, 7], -1)
    T = TridiagonalMatrix.from_dense(M)
    np.testing.assert_array_equal(T.to_dense(), M)
    np.testing.assert_allclose(T.matvec([1, 1, 1]), M @ [1, 1, 1])
    assert T.norm_inf() == np.abs(M).sum(axis=1).max()


def test_tridiag_zero_row_breaks_down():
    T = TridiagonalMatrix(np.array([0.0, 1.0]), np.array([1.0, 0.0, 1.0]), np.array([1.0, 0.0]))
    with pytest.raises(TridiagonalBreakdown):
        tridiag_solve(T, np.ones(3))
    assert issubclass(TridiagonalBreakdown, SingularMatrixError)


@pytest.mark.parametrize("n", [1, 2, 5, 16, 64])
def test_tridiag_inverse_matches_dense(n):
    T = random_tridiag(np.random.default_rng(100 + n), n)
    np.testing.assert_allclose(tridiag_inverse(T) @ T.to_dense(), np.eye(n), atol=1e-10)


def test_tridiag_inverse_of_linear_network_matrix():
    L = np.array([100.0, 120, 80, 150])
    mu = np.array([5.0, 6, 4, 7])
    theta = np.array([0.1, 0.2, 0.3, 0.4])
    g = np.zeros((4, 4))
    for i in range(3):
        g[i, i + 1] = g[i + 1, i] = 1.0
    A = g.T / L
    np.fill_diagonal(A, -(mu / L + theta + g.sum(axis=1) / L))
    inv = tridiag_inverse(TridiagonalMatrix.from_dense(A))
    np.testing.assert_allclose(inv, np.linalg.inv(A), rtol=1e-12)


@pytest.mark.parametrize("seed", range(15))
def test_smw_low_rank(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 20))
    k = int(rng.integers(1, min(4, n) + 1))
    M = np.diag(rng.uniform(2, 5, n))
    U, V = rng.normal(scale=0.3, size=(n, k)), rng.normal(scale=0.3, size=(n, k))
    got = smw_inverse(np.linalg.inv(M), U, V)
    np.testing.assert_allclose(got, np.linalg.inv(M + U @ V.T), rtol=1e-10, atol=1e-12)


def test_smw_rank_one_identity():
    u = np.array([[1.0], [2.0], [3.0]])
    got = smw_inverse(np.eye(3), u, u)
    np.testing.assert_allclose(got, np.eye(3) - u @ u.T / (1 + 14))


def test_smw_singular_inner_matrix():
    u = np.array([[1.0], [0.0]])
    with pytest.raises(SingularMatrixError):
        smw_inverse(np.eye(2), u, -u)


def test_gershgorin_encloses_eigenvalues():
    rng = np.random.default_rng(7)
    for _ in range(50):
        n = int(rng.integers(1, 10))
        A = rng.normal(size=(n, n))
        rep = gershgorin(A)
        eig = np.linalg.eigvals(A)
        assert np.all(eig.real <= rep.bound + 1e-12)
        assert np.all(eig.real >= rep.lower - 1e-12)
        assert len(rep.intervals()) == n


def test_gershgorin_uses_columns():
    A = np.array([[-1.0, 5.0], [0.1, -2.0]])
    rep = gershgorin(A)
    np.testing.assert_allclose(rep.radii, [0.1, 5.0])
    assert rep.bound == pytest.approx(3.0)


def test_dense_helpers():
    A = np.array([[2.0, 1.0], [1.0, 3.0]])
    np.testing.assert_allclose(dense_solve(A, [3, 4]), [1, 1])
    np.testing.assert_allclose(dense_inverse(A) @ A, np.eye(2), atol=1e-15)
    with pytest.raises(SingularMatrixError):
        dense_solve(np.zeros((2, 2)), [1, 1])
    with pytest.raises(SingularMatrixError):
        dense_inverse(np.ones((2, 2)))
