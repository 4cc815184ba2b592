import numpy as np
import pytest

from polyformer.linalg import as_matrix, matmul, relu, softmax_columns


def naive_matmul(a, b):
    out = np.zeros((a.shape[0], b.shape[1]))
    for i in range(a.shape[0]):
        for j in range(b.shape[1]):
            for k in range(a.shape[1]):
                out[i, j] += a[i, k] * b[k, j]
    return out


class TestMatmul:
    def test_identity(self):
        a = np.arange(6.0).reshape(2, 3)
        np.testing.assert_array_equal(matmul(np.eye(2), a), a)

    def test_hand_checked(self):
        np.testing.assert_array_equal(matmul([[1, 2], [3, 4]], [[1], [1]]), [[3], [7]])

    def test_against_triple_loop(self):
        rng = np.random.default_rng(3)
        a, b = rng.normal(size=(5, 7)), rng.normal(size=(7, 3))
        np.testing.assert_allclose(matmul(a, b), naive_matmul(a, b), atol=1e-12)

    def test_associative(self):
        rng = np.random.default_rng(4)
        a, b, c = rng.normal(size=(4, 5)), rng.normal(size=(5, 6)), rng.normal(size=(6, 3))
        np.testing.assert_allclose(matmul(matmul(a, b), c), matmul(a, matmul(b, c)), rtol=1e-10)

    def test_mismatch_message(self):
        with pytest.raises(ValueError, match="columns"):
            matmul(np.ones((2, 3)), np.ones((2, 3)))


class TestRelu:
    def test_values(self):
        np.testing.assert_array_equal(relu([[-1, 2], [0, -3]]), [[0, 2], [0, 0]])

    def test_fixed_point_and_idempotent(self):
        rng = np.random.default_rng(0)
        a = rng.normal(size=(6, 6))
        np.testing.assert_array_equal(relu(np.abs(a)), np.abs(a))
        np.testing.assert_array_equal(relu(relu(a)), relu(a))
        assert np.all(relu(a) >= 0) and np.all(relu(a) <= np.abs(a))


class TestSoftmaxColumns:
    def test_zero_logits_uniform(self):
        np.testing.assert_allclose(softmax_columns(np.zeros((4, 4))), np.full((4, 4), 0.25), atol=1e-15)

    def test_columns_sum_to_one(self):
        rng = np.random.default_rng(1)
        s = softmax_columns(rng.normal(scale=5, size=(7, 7)))
        np.testing.assert_allclose(s.sum(axis=0), 1.0, atol=1e-12)
        assert np.all(s > 0) and np.all(s <= 1)

    def test_negated_exponent(self):
        a = np.array([[0.0, 0.0], [np.log(3.0), 0.0]])
        s = softmax_columns(a)
        # exp(0) : exp(-log 3) = 3 : 1 in the first column
        np.testing.assert_allclose(s[:, 0], [0.75, 0.25], atol=1e-15)

    def test_column_shift_invariance(self):
        rng = np.random.default_rng(2)
        a = rng.normal(size=(5, 5))
        b = a.copy()
        b[:, 2] += 3.7
        np.testing.assert_allclose(softmax_columns(b), softmax_columns(a), atol=1e-12)

    def test_large_values_stable(self):
        s = softmax_columns(np.array([[1000.0, -1000.0], [0.0, 0.0]]))
        assert np.all(np.isfinite(s))

    def test_requires_square(self):
        with pytest.raises(ValueError):
            softmax_columns(np.zeros((2, 3)))


def test_as_matrix_rejects_nan():
    with pytest.raises(ValueError):
        as_matrix([[np.nan]])
    assert as_matrix([1, 2, 3]).shape == (1, 3)
