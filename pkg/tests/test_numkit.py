import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dduio import benchmark
from dduio.numkit import (
    Tolerance,
    is_nilpotent,
    null_space_basis,
    numerical_rank,
    pbh_rank_at,
    pseudo_inverse,
    random_orthogonal,
)



def test_tolerance_validation():
    Tolerance(1e-6, 1e-10)
    for bad in [(0.0, 1e-8), (1.0, 1e-8), (1e-9, 0.0), (1e-9, -1.0)]:
        with pytest.raises(ValueError):
            Tolerance(*bad)


def test_rank_identity_and_zero():
    assert numerical_rank(np.eye(3)) == 3
    assert numerical_rank(np.zeros((3, 4))) == 0


def test_rank_example_products(bench_sys):
    CE = bench_sys.C @ bench_sys.E
    np.testing.assert_allclose(CE, [[0, 0], [1, -1], [0, 1]])
    assert numerical_rank(CE) == 2
    assert numerical_rank(np.hstack([bench_sys.C @ bench_sys.B, CE])) == 3


def test_rank_relative_to_sigma_max():
    M = np.diag([1e6, 1.0, 1e-2])
    assert numerical_rank(M) == 3
    assert numerical_rank(np.diag([1.0, 1e-12])) == 1
    # same matrix measured against a larger reference scale
    assert numerical_rank(np.diag([1.0, 1e-6]), reference=1e4) == 1


def test_pinv_examples():
    np.testing.assert_allclose(pseudo_inverse(np.eye(3)), np.eye(3))
    v = np.array([[1.0], [0.0], [-1.0]])
    np.testing.assert_allclose(pseudo_inverse(v), [[0.5, 0.0, -0.5]])
    Z = pseudo_inverse(np.zeros((2, 3)))
    assert Z.shape == (3, 2) and not Z.any()


def test_pinv_full_column_rank_formula(rng):
    M = rng.standard_normal((6, 3))
    np.testing.assert_allclose(pseudo_inverse(M), np.linalg.solve(M.T @ M, M.T), atol=1e-12)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 7), st.integers(1, 7), st.integers(0, 7), st.integers(0, 2**31))
def test_penrose_identities(rows, cols, k, seed):
    rng = np.random.default_rng(seed)
    k = min(k, rows, cols)
    M = rng.standard_normal((rows, k)) @ rng.standard_normal((k, cols))
    P = pseudo_inverse(M)
    assert P.shape == (cols, rows)
    assert np.abs(M @ P @ M - M).max() < 1e-8
    assert np.abs(P @ M @ P - P).max() < 1e-8
    assert np.abs((M @ P).T - M @ P).max() < 1e-8
    assert np.abs((P @ M).T - P @ M).max() < 1e-8


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 6), st.integers(1, 6), st.integers(0, 6), st.integers(0, 2**31))
def test_rank_invariant_under_orthogonal_factors(rows, cols, k, seed):
    rng = np.random.default_rng(seed)
    k = min(k, rows, cols)
    M = rng.standard_normal((rows, k)) @ rng.standard_normal((k, cols))
    Q1, Q2 = random_orthogonal(rows, rng), random_orthogonal(cols, rng)
    assert numerical_rank(M) == k
    assert numerical_rank(Q1 @ M @ Q2) == k
    assert numerical_rank(M[rng.permutation(rows)][:, rng.permutation(cols)]) == k


def test_null_space_examples():
    N = null_space_basis(np.array([[1.0, 0.0, 0.0]]))
    assert N.shape == (3, 2)
    np.testing.assert_allclose(N.T @ N, np.eye(2), atol=1e-12)
    assert np.abs(N[0]).max() < 1e-12
    assert null_space_basis(np.random.default_rng(0).standard_normal((5, 3))).shape == (3, 0)


def test_null_space_of_example_regressor(bench_data):
    R = bench_data.regressor
    N = null_space_basis(R)
    assert N.shape == (149, 143)
    assert np.abs(R @ N).max() < 1e-8
    np.testing.assert_allclose(N.T @ N, np.eye(143), atol=1e-10)


def test_nilpotent_examples(published_uio):
    assert is_nilpotent(np.zeros((3, 3))) == (True, 1)
    assert is_nilpotent(np.eye(3)) == (False, None)
    assert is_nilpotent(published_uio.A_uio) == (True, 3)


def test_nilpotent_jordan_index():
    for n in range(1, 7):
        J = np.diag(np.ones(n - 1), 1)
        assert is_nilpotent(J) == (True, n)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 7), st.integers(0, 2**31))
def test_nilpotent_verdict_bounds_spectral_radius(n, seed):
    rng = np.random.default_rng(seed)
    Q = random_orthogonal(n, rng)
    M = Q @ np.triu(rng.standard_normal((n, n)), 1) @ Q.T
    ok, idx = is_nilpotent(M)
    assert ok and idx <= n
    # |M^k|_max < tol (after scaling) forces rho <= (n tol)^(1/k) times the scale
    s = max(1.0, np.abs(M).max())
    rho = np.abs(np.linalg.eigvals(M)).max()
    assert rho <= s * (n * Tolerance().abs_zero_tol) ** (1.0 / idx)
    if idx <= 2:
        assert rho < 1e-6


def test_nilpotent_verdict_does_not_certify_tiny_eigenvalues_at_high_index():
    # J_3 + 1e-12 e3 e1^T has eigenvalues of modulus 1e-4 but its cube is 1e-12 I:
    # the power criterion accepts it, so only rho <= tol^(1/k) can be promised
    M = np.diag([1.0, 1.0], 1)
    M[2, 0] = 1e-12
    assert is_nilpotent(M) == (True, 3)
    np.testing.assert_allclose(np.abs(np.linalg.eigvals(M)), 1e-4, rtol=1e-3)


def test_pbh_examples(published_uio):
    assert pbh_rank_at(np.zeros((3, 3)), np.eye(3), 0.7 + 0.2j) == 3
    assert pbh_rank_at(np.diag([1.0, 0.0]), np.array([[0.0, 1.0]]), 1.0) == 1
    for z in [0.5, -1.3j, 2 + 1j]:
        assert pbh_rank_at(published_uio.A_uio, published_uio.C, z) == 5


def test_decoupled_projector_rank_and_kernel(rng):
    for _ in range(50):
        n = int(rng.integers(2, 9))
        r = int(rng.integers(1, n))
        p = int(rng.integers(r, n + 1))
        E = rng.standard_normal((n, r))
        C = rng.standard_normal((p, n))
        D = E @ pseudo_inverse(C @ E)
        IDC = np.eye(n) - D @ C
        assert numerical_rank(IDC) == n - r
        assert np.abs(IDC @ E).max() < 1e-8
        K = null_space_basis(IDC)
        assert numerical_rank(np.hstack([K, E])) == r
