import numpy as np
import pytest

from repsim import DimensionMismatchError, NonFiniteValueError, center_columns, svd
from repsim.exceptions import DegenerateInputError
from repsim.linalg import as_matrix, matmul, require_positive_variance


def naive_matmul(a, b):
    out = np.zeros((a.shape[0], b.shape[1]))
    for i in range(a.shape[0]):
        for j in range(b.shape[1]):
            for k in range(a.shape[1]):
                out[i, j] += a[i, k] * b[k, j]
    return out


def test_as_matrix_validates():
    with pytest.raises(DimensionMismatchError):
        as_matrix(np.zeros(3), "v")
    with pytest.raises(DimensionMismatchError):
        as_matrix(np.zeros((0, 2)), "empty")
    with pytest.raises(NonFiniteValueError):
        as_matrix(np.array([[1.0, np.nan]]), "bad")
    with pytest.raises(NonFiniteValueError):
        as_matrix(np.array([[1.0, np.inf]]), "bad")
    out = as_matrix([[1, 2], [3, 4]], "ints")
    assert out.dtype == np.float64


def test_matmul_identity_and_hand_case():
    a = np.array([[1.0, 2.0], [3.0, 4.0]])
    assert np.allclose(matmul(np.eye(2), a), a)
    assert np.allclose(matmul(a, np.array([[1.0], [1.0]])), [[3.0], [7.0]])
    with pytest.raises(DimensionMismatchError):
        matmul(a, np.zeros((3, 2)))


def test_matmul_matches_naive_triple_loop(rng):
    a = rng.normal(size=(5, 4))
    b = rng.normal(size=(4, 3))
    assert np.abs(matmul(a, b) - naive_matmul(a, b)).max() < 1e-12


def test_matmul_associative(rng):
    for _ in range(5):
        a = rng.normal(size=(6, 5))
        b = rng.normal(size=(5, 7))
        c = rng.normal(size=(7, 4))
        left = matmul(matmul(a, b), c)
        right = matmul(a, matmul(b, c))
        assert np.abs(left - right).max() / np.abs(left).max() < 1e-9


def test_svd_diagonal_case():
    result = svd(np.diag([3.0, 2.0, 1.0]))
    assert np.allclose(result.singular_values, [3.0, 2.0, 1.0])


def test_svd_rank_one(rng):
    u = rng.normal(size=7)
    v = rng.normal(size=4)
    result = svd(np.outer(u, v))
    assert result.singular_values[0] > 0
    assert np.all(result.singular_values[1:] < 1e-12 * result.singular_values[0])


def test_svd_orthonormal_and_reconstructs(rng):
    for shape in [(8, 5), (5, 8), (256, 96)]:
        a = rng.normal(size=shape)
        result = svd(a)
        r = result.singular_values.size
        assert np.abs(result.left.T @ result.left - np.eye(r)).max() < 1e-8
        assert np.abs(result.right.T @ result.right - np.eye(r)).max() < 1e-8
        err = np.linalg.norm(result.reconstruct() - a) / np.linalg.norm(a)
        assert err < 1e-8
        assert np.all(np.diff(result.singular_values) <= 0)
        assert np.all(result.singular_values >= 0)


def test_svd_large_reconstruction(rng):
    a = rng.normal(size=(512, 512))
    result = svd(a)
    assert np.linalg.norm(result.reconstruct() - a) / np.linalg.norm(a) < 1e-8


def test_svd_sign_convention_deterministic(rng):
    # largest-magnitude entry of each left singular vector is positive
    for _ in range(5):
        a = rng.normal(size=(9, 6))
        result = svd(a)
        for col in result.left.T:
            assert col[np.abs(col).argmax()] > 0
        again = svd(a.copy())
        assert np.array_equal(result.left, again.left)


def test_center_columns():
    assert np.allclose(center_columns(np.full((4, 3), 2.5)), 0.0)
    assert np.allclose(center_columns(np.array([[1.0], [3.0]])), [[-1.0], [1.0]])


def test_center_columns_zero_means_and_idempotent(rng):
    a = rng.normal(size=(20, 7)) + 3.0
    centered = center_columns(a)
    assert np.abs(centered.mean(axis=0)).max() < 1e-12
    assert np.abs(center_columns(centered) - centered).max() < 1e-15


def test_require_positive_variance():
    with pytest.raises(DegenerateInputError):
        require_positive_variance(np.full((6, 3), 4.0), "const")
    ok = require_positive_variance(np.array([[0.0, 1.0], [1.0, 0.0]]), "ok")
    assert ok.shape == (2, 2)
