import numpy as np
import pytest

from fixpoint import _kernels_py


def test_affine_iterate_matches_repeated_matvec(backend, rng):
    A = rng.uniform(-0.4, 0.4, (4, 4))
    b = rng.uniform(-1, 1, 4)
    X = rng.uniform(-1, 1, (7, 4))
    expected = X.copy()
    for _ in range(13):
        expected = np.array([A @ x + b for x in expected])
    np.testing.assert_allclose(backend.affine_iterate(A, b, X, 13), expected, rtol=1e-13, atol=1e-15)


def test_affine_iterate_zero_steps_is_copy(backend):
    X = np.arange(6.0).reshape(3, 2)
    out = backend.affine_iterate(np.eye(2) * 2, np.ones(2), X, 0)
    np.testing.assert_array_equal(out, X)
    assert out is not X


def test_affine_iterate_accepts_read_only(backend):
    A = np.eye(2)
    A.setflags(write=False)
    np.testing.assert_array_equal(backend.affine_iterate(A, np.zeros(2), [[1.0, 2.0]], 3), [[1.0, 2.0]])


def test_pair_norms(backend, rng):
    X = rng.standard_normal((20, 3))
    I = rng.integers(0, 20, 50)
    J = rng.integers(0, 20, 50)
    expected = [np.linalg.norm(X[i] - X[j]) for i, j in zip(I, J)]
    np.testing.assert_allclose(backend.pair_norms(X, I, J), expected, rtol=1e-14)


def test_ratio_max_ties_and_guard(backend):
    num = np.array([1.0, 2.0, 4.0, 2.0, 5.0])
    den = np.array([1.0, 1.0, 2.0, 1.0, 0.0])
    top, k, skipped = backend.ratio_max(num, den, 1e-14)
    assert (top, k, skipped) == (2.0, 1, 1)
    assert backend.ratio_max(num, np.zeros(5), 1e-14) == (0.0, -1, 5)


def test_linear_envelope(backend):
    out = backend.linear_envelope(1.0, [1.0, 0.5], [0.0, 1.0])
    np.testing.assert_array_equal(out, [1.0, 2.0, 4.0])


def test_backends_agree(rng):
    c = pytest.importorskip("fixpoint._kernels")
    A = rng.uniform(-0.3, 0.3, (5, 5))
    b = rng.uniform(-1, 1, 5)
    X = rng.uniform(-1, 1, (30, 5))
    np.testing.assert_allclose(c.affine_iterate(A, b, X, 200), _kernels_py.affine_iterate(A, b, X, 200), rtol=1e-12, atol=1e-14)
    alpha, beta = rng.random(100) * 0.01, rng.random(100)
    np.testing.assert_array_equal(c.linear_envelope(2.0, alpha, beta), _kernels_py.linear_envelope(2.0, alpha, beta))
