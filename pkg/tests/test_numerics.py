import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from desense import numerics
from desense.errors import (
    ConvergenceError,
    DimensionError,
    NotPositiveDefiniteError,
    NotSymmetricError,
    NumericalError,
    SingularSystemError,
)

import oracles

finite = st.floats(-100, 100, allow_nan=False, allow_infinity=False)


@st.composite
def symmetric(draw, max_n=12):
    n = draw(st.integers(1, max_n))
    a = draw(hnp.arrays(np.float64, (n, n), elements=finite))
    return (a + a.T) / 2


def test_matmul_identity():
    b = np.arange(6.0).reshape(3, 2)
    assert np.array_equal(numerics.matmul(np.eye(3), b), b)


def test_matmul_hand_example():
    out = numerics.matmul([[1, 2], [3, 4]], [[0], [1]])
    assert np.array_equal(out, [[2], [4]])


def test_matmul_dimension_mismatch_reports_shapes():
    with pytest.raises(DimensionError, match="2x3 by 2x3"):
        numerics.matmul(np.ones((2, 3)), np.ones((2, 3)))


def test_non_finite_rejected():
    with pytest.raises(NumericalError):
        numerics.matmul([[np.nan]], [[1.0]])


def test_cholesky_examples():
    assert np.array_equal(numerics.cholesky(np.eye(2)), np.eye(2))
    np.testing.assert_allclose(numerics.cholesky([[4, 2], [2, 5]]), [[2, 0], [1, 2]])


def test_cholesky_indefinite_names_pivot():
    # eigenvalues 3 and -1
    with pytest.raises(NotPositiveDefiniteError, match="pivot 1") as info:
        numerics.cholesky([[1, 2], [2, 1]])
    assert info.value.pivot == 1


def test_cholesky_rejects_asymmetric():
    with pytest.raises(NotSymmetricError):
        numerics.cholesky([[2.0, 1.0], [0.0, 2.0]])


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 10), st.integers(0, 2**32 - 1))
def test_cholesky_round_trip(n, seed):
    rng = np.random.default_rng(seed)
    low = np.tril(rng.normal(size=(n, n)), -1) + np.diag(rng.uniform(0.5, 2.0, n))
    got = numerics.cholesky(low @ low.T)
    assert np.max(np.abs(got - low)) <= 1e-8
    s = low @ low.T
    assert np.max(np.abs(got @ got.T - s)) <= 1e-8 * max(1, np.abs(s).max())


def test_solve_triangular_examples():
    b = np.arange(6.0).reshape(3, 2)
    assert np.array_equal(numerics.solve_triangular(np.eye(3), b), b)
    np.testing.assert_allclose(numerics.solve_triangular([[2, 0], [1, 2]], [[2], [3]]),
                               [[1], [1]])


def test_solve_triangular_transposed():
    low = np.array([[2.0, 0], [1, 2]])
    x = numerics.solve_triangular(low, [[4.0], [2.0]], side="lower-transposed")
    np.testing.assert_allclose(low.T @ x, [[4], [2]])


def test_solve_triangular_singular():
    with pytest.raises(SingularSystemError):
        numerics.solve_triangular([[1.0, 0], [1, 0]], [[1.0], [1.0]])


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 15), st.integers(0, 2**32 - 1), st.sampled_from(["lower", "lower-transposed"]))
def test_solve_triangular_residual(n, seed, side):
    rng = np.random.default_rng(seed)
    low = np.tril(rng.normal(size=(n, n)), -1) + np.diag(rng.uniform(1, 3, n))
    b = rng.normal(size=(n, 3))
    x = numerics.solve_triangular(low, b, side=side)
    lhs = low @ x if side == "lower" else low.T @ x
    assert np.max(np.abs(lhs - b)) <= 1e-8 * np.abs(b).max()


def test_sym_eig_identity():
    w, v = numerics.sym_eig(np.eye(3))
    np.testing.assert_array_equal(w, [1, 1, 1])
    np.testing.assert_allclose(v.T @ v, np.eye(3), atol=1e-12)
    assert np.all(v[np.argmax(np.abs(v), axis=0), range(3)] > 0)


def test_sym_eig_two_by_two():
    w, v = numerics.sym_eig([[2.0, 1.0], [1.0, 2.0]])
    np.testing.assert_allclose(w, [3, 1])
    r = 1 / np.sqrt(2)
    # sign rule: largest-magnitude entry positive, ties to the lower index
    np.testing.assert_allclose(v, [[r, r], [r, -r]], atol=1e-12)


def test_sym_eig_diagonal():
    w, v = numerics.sym_eig(np.diag([5.0, -2.0, 0.0]))
    np.testing.assert_array_equal(w, [5, 0, -2])
    np.testing.assert_array_equal(np.abs(v), [[1, 0, 0], [0, 0, 1], [0, 1, 0]])


def test_sym_eig_rejects_asymmetric():
    with pytest.raises(NotSymmetricError):
        numerics.sym_eig([[1.0, 2.0], [0.0, 1.0]])


def test_jacobi_sweep_cap():
    s = np.array([[1.0, 1e-3], [1e-3, 2.0]])
    with pytest.raises(ConvergenceError):
        numerics.jacobi_eig(s, max_sweeps=0)


@settings(max_examples=80, deadline=None)
@given(symmetric())
def test_sym_eig_contracts(s):
    w, v = numerics.sym_eig(s)
    n = s.shape[0]
    scale = max(1.0, np.abs(s).max())
    assert np.all(np.diff(w) <= 0)
    assert np.max(np.abs(v.T @ v - np.eye(n))) <= 1e-8
    assert np.max(np.linalg.norm(s @ v - v * w, axis=0)) <= 1e-8 * scale
    assert np.max(np.abs(v @ np.diag(w) @ v.T - s)) <= 1e-7 * max(np.abs(s).max(), 1e-300)
    assert abs(np.trace(s) - w.sum()) <= 1e-8 * max(abs(np.trace(s)), 1.0)


@pytest.mark.parametrize("method", ["jacobi", "lapack"])
def test_sym_eig_methods_agree_large(method, rng):
    a = rng.normal(size=(90, 90))
    s = a + a.T
    w, v = numerics.sym_eig(s, method=method)
    assert np.max(np.linalg.norm(s @ v - v * w, axis=0)) <= 1e-8 * np.abs(s).max()
    np.testing.assert_allclose(w, np.linalg.eigvalsh(s)[::-1], atol=1e-9)


def test_sym_eig_matches_determinant_oracle(rng):
    for _ in range(20):
        n = int(rng.integers(1, 7))
        a = rng.normal(size=(n, n))
        s = (a + a.T) / 2
        np.testing.assert_allclose(numerics.sym_eig(s)[0], oracles.sym_eigenvalues(s),
                                   atol=1e-7)


def test_kernels_are_deterministic(rng):
    a = rng.normal(size=(20, 20))
    s = a @ a.T + np.eye(20)
    w1, v1 = numerics.sym_eig(s)
    w2, v2 = numerics.sym_eig(s.copy())
    assert w1.tobytes() == w2.tobytes() and v1.tobytes() == v2.tobytes()
    assert numerics.cholesky(s).tobytes() == numerics.cholesky(s.copy()).tobytes()


def test_inputs_not_mutated(rng):
    a = rng.normal(size=(5, 5))
    s = a + a.T
    keep = s.copy()
    numerics.sym_eig(s)
    assert np.array_equal(s, keep)
