from itertools import combinations
from math import comb

import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import crandn
from wynercap.errors import DimensionError, SingularBlockError
from wynercap.linalg import (
    condition_ratio,
    frobenius,
    log_abs_det,
    solve_conjugate_transpose_inverse,
    subset_index,
    wedge_power,
)


def minors_oracle(M, k):
    """Exterior power by explicit loops over lexicographic subsets."""
    p, q = M.shape
    rows = list(combinations(range(p), k))
    cols = list(combinations(range(q), k))
    out = np.empty((len(rows), len(cols)), dtype=complex)
    for a, S in enumerate(rows):
        for b, T in enumerate(cols):
            out[a, b] = np.linalg.det(M[np.ix_(S, T)])
    return out


def test_subset_index_lexicographic():
    idx = subset_index(4, 2)
    assert idx.tolist() == [[0, 1], [0, 2], [0, 3], [1, 2], [1, 3], [2, 3]]
    assert subset_index(6, 3).shape == (comb(6, 3), 3)
    # the last basis vector is the trailing subset
    assert subset_index(6, 3)[-1].tolist() == [3, 4, 5]


def test_wedge_first_power_is_identity_map(rng):
    M = crandn(rng, 3, 5)
    np.testing.assert_array_equal(wedge_power(M, 1), M)


def test_wedge_of_identity():
    np.testing.assert_allclose(wedge_power(np.eye(4), 2), np.eye(6), atol=1e-15)


def test_wedge_full_order_is_determinant(rng):
    X = crandn(rng, 4, 4)
    W = wedge_power(X, 4)
    assert W.shape == (1, 1)
    np.testing.assert_allclose(W[0, 0], np.linalg.det(X), rtol=1e-12)


def test_wedge_zero_order():
    np.testing.assert_array_equal(wedge_power(np.ones((3, 3)), 0), [[1.0]])


def test_wedge_matches_minor_oracle(rng):
    M = crandn(rng, 4, 5)
    for k in (1, 2, 3, 4):
        np.testing.assert_allclose(wedge_power(M, k), minors_oracle(M, k), atol=1e-12)


def test_wedge_multiplicative_4x4(rng):
    A, B = crandn(rng, 4, 4), crandn(rng, 4, 4)
    lhs = wedge_power(A @ B, 2)
    rhs = minors_oracle(A, 2) @ minors_oracle(B, 2)
    assert np.linalg.norm(lhs - rhs) <= 1e-10 * np.linalg.norm(rhs)


def test_wedge_batched(rng):
    M = crandn(rng, 7, 4, 4)
    W = wedge_power(M, 2)
    for i in range(7):
        np.testing.assert_allclose(W[i], minors_oracle(M[i], 2), atol=1e-12)


@pytest.mark.parametrize("k", [-1, 4])
def test_wedge_order_out_of_range(k):
    with pytest.raises(DimensionError):
        wedge_power(np.eye(3), k)


@given(p=st.integers(2, 5), q=st.integers(2, 5), r=st.integers(2, 5), seed=st.integers(0, 2**32 - 1))
def test_wedge_multiplicativity_property(p, q, r, seed):
    rng = np.random.default_rng(seed)
    M, N = crandn(rng, p, q), crandn(rng, q, r)
    for k in range(1, min(p, q, r) + 1):
        WM, WN = wedge_power(M, k), wedge_power(N, k)
        err = np.linalg.norm(wedge_power(M @ N, k) - WM @ WN)
        assert err <= 1e-9 * np.linalg.norm(WM) * np.linalg.norm(WN)


@given(p=st.integers(1, 5), seed=st.integers(0, 2**32 - 1))
def test_det_of_top_wedge_property(p, seed):
    X = crandn(np.random.default_rng(seed), p, p)
    # wedge^p X is the 1x1 det X, so det(wedge^p X) = det(X), and the
    # compound of order k has determinant det(X)^C(p-1, k-1)
    for k in range(1, p + 1):
        lhs = log_abs_det(wedge_power(X, k))
        rhs = comb(p - 1, k - 1) * log_abs_det(X)
        assert abs(lhs - rhs) <= 1e-8 * max(1.0, abs(rhs))


@given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 6))
def test_frobenius_submultiplicative(seed, n):
    rng = np.random.default_rng(seed)
    M, N = crandn(rng, n, n), crandn(rng, n, n)
    assert frobenius(M @ N) <= frobenius(M) * frobenius(N) * (1 + 1e-12)


def test_log_abs_det_examples(rng):
    assert log_abs_det(np.eye(3)) == 0.0
    assert abs(log_abs_det(np.diag([2.0, 0.5]))) < 1e-15
    M = crandn(rng, 6, 6)
    oracle = float(np.sum(np.log(np.abs(np.linalg.eigvals(M)))))
    assert abs(log_abs_det(M) - oracle) < 1e-9


def test_log_abs_det_singular_sentinel():
    assert log_abs_det(np.zeros((2, 2))) == -np.inf


def test_log_abs_det_nonsquare():
    with pytest.raises(DimensionError):
        log_abs_det(np.ones((2, 3)))


@given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 6))
def test_log_abs_det_additive(seed, n):
    rng = np.random.default_rng(seed)
    M = crandn(rng, n, n) + 2 * np.eye(n)
    N = crandn(rng, n, n) + 2 * np.eye(n)
    assert abs(log_abs_det(M) + log_abs_det(N) - log_abs_det(M @ N)) < 1e-8


def test_solve_cti_examples(rng):
    np.testing.assert_allclose(solve_conjugate_transpose_inverse(np.eye(3)), np.eye(3))
    np.testing.assert_allclose(solve_conjugate_transpose_inverse(np.array([[2j]])), [[0.5j]])
    A = crandn(rng, 3, 3) + 3 * np.eye(3)
    X = solve_conjugate_transpose_inverse(A)
    resid = np.linalg.norm(A.conj().T @ X - np.eye(3))
    assert resid <= 1e-8 * np.linalg.norm(A) * np.linalg.norm(X)


def test_solve_cti_singular_reports_condition():
    A = np.array([[1.0, 2.0], [2.0, 4.0]], dtype=complex)
    with pytest.raises(SingularBlockError) as exc:
        solve_conjugate_transpose_inverse(A)
    assert exc.value.condition < 1e-12
    assert "condition" in str(exc.value)


def test_condition_ratio_batch():
    r = condition_ratio(np.stack([np.eye(2), np.diag([1.0, 0.0])]))
    np.testing.assert_allclose(r, [1.0, 0.0])
