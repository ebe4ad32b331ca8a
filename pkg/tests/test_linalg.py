import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from fsbench import linalg
from fsbench.linalg import SparseVector


def test_norm_examples():
    assert linalg.norm_l1(np.zeros(3)) == 0.0
    assert linalg.norm_l1(np.array([3.0, -4.0])) == 7.0
    assert linalg.norm_l1(np.eye(5)[1]) == 1.0
    assert linalg.norm_l2(np.array([3.0, 4.0])) == 5.0
    assert linalg.norm_l2(np.zeros(4)) == 0.0
    assert linalg.norm_l2(np.eye(3)[0]) == 1.0
    assert linalg.norm_l21(np.eye(3)) == 3.0
    assert linalg.norm_l21(np.array([[3.0, 4.0], [0.0, 0.0]])) == 5.0
    assert linalg.norm_l21(np.zeros((2, 3))) == 0.0


def test_soft_threshold_examples():
    assert linalg.soft_threshold(3.0, 1.0) == 2.0
    assert linalg.soft_threshold(-0.5, 1.0) == 0.0
    assert linalg.soft_threshold(-2.75, 0.0) == -2.75
    with pytest.raises(ValueError):
        linalg.soft_threshold(1.0, -0.1)
    np.testing.assert_array_equal(linalg.soft_threshold(np.array([3.0, -0.5, -4.0]), 1.0),
                                  [2.0, 0.0, -3.0])


def test_soft_threshold_is_prox_grid_search():
    rng = np.random.default_rng(0)
    grid = np.linspace(-10.0, 10.0, 200_001)  # step 1e-4
    for _ in range(100):
        z = rng.uniform(-8, 8)
        t = rng.uniform(0, 4)
        best = grid[np.argmin(0.5 * (grid - z) ** 2 + t * np.abs(grid))]
        assert abs(linalg.soft_threshold(z, t) - best) <= 1e-4


def test_sparsity_examples():
    m = np.zeros((10, 10))
    m[3, 4] = 1.5
    assert linalg.sparsity(m) == 0.99
    assert linalg.sparsity(sp.csr_matrix(m)) == 0.99
    assert linalg.sparsity(np.ones((3, 4))) == 0.0
    with pytest.raises(ValueError):
        linalg.sparsity(np.zeros((0, 3)))


def test_correlation_examples():
    rng = np.random.default_rng(1)
    a = rng.standard_normal(50)
    assert linalg.mean_abs_pairwise_correlation(np.column_stack([a, a])) == pytest.approx(1.0)
    assert linalg.mean_abs_pairwise_correlation(np.column_stack([a, -a])) == pytest.approx(1.0)
    big = rng.standard_normal((10_000, 2))
    assert linalg.mean_abs_pairwise_correlation(big) < 0.05
    # zero-variance feature contributes 0
    m = np.column_stack([a, a, np.full(50, 2.0)])
    assert linalg.mean_abs_pairwise_correlation(m) == pytest.approx(1.0 / 3.0)
    with pytest.raises(ValueError):
        linalg.mean_abs_pairwise_correlation(a[:, None])


def test_correlation_sampling_is_seeded_and_close_to_exact():
    rng = np.random.default_rng(2)
    m = rng.standard_normal((40, 60)) + rng.standard_normal((40, 1))
    exact = linalg.mean_abs_pairwise_correlation(m)
    s1 = linalg.mean_abs_pairwise_correlation(m, sample_pairs=500, seed=3)
    s2 = linalg.mean_abs_pairwise_correlation(m, sample_pairs=500, seed=3)
    assert s1 == s2
    assert abs(s1 - exact) < 0.05


def test_pair_enumeration_covers_upper_triangle():
    d = 37
    i, j = linalg._pair_from_linear(np.arange(d * (d - 1) // 2), d)
    ii, jj = np.triu_indices(d, 1)
    np.testing.assert_array_equal(i, ii)
    np.testing.assert_array_equal(j, jj)


def test_sparse_vector_validation():
    v = SparseVector(5, [1, 3], [2.0, -1.0])
    np.testing.assert_array_equal(v.to_dense(), [0, 2, 0, -1, 0])
    assert v == SparseVector.from_dense(v.to_dense())
    with pytest.raises(ValueError):
        SparseVector(5, [3, 1], [1.0, 1.0])
    with pytest.raises(ValueError):
        SparseVector(5, [1, 1], [1.0, 1.0])
    with pytest.raises(ValueError):
        SparseVector(5, [1], [0.0])
    with pytest.raises(ValueError):
        SparseVector(5, [5], [1.0])


def test_column_moments_sparse_matches_dense():
    rng = np.random.default_rng(4)
    m = rng.standard_normal((30, 8)) * (rng.random((30, 8)) < 0.3)
    md, sd = linalg.column_moments(m)
    ms, ss = linalg.column_moments(sp.csr_matrix(m))
    np.testing.assert_allclose(ms, md, atol=1e-12)
    np.testing.assert_allclose(ss, sd, atol=1e-12)


finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)


@settings(max_examples=100, deadline=None)
@given(arrays(np.float64, st.integers(1, 30), elements=finite))
def test_dense_and_sparse_vectors_agree(v):
    v = np.where(np.abs(v) < 1e-3, 0.0, v)
    s = SparseVector.from_dense(v)
    assert abs(linalg.norm_l1(s) - linalg.norm_l1(v)) <= 1e-12 * max(1.0, linalg.norm_l1(v))
    assert abs(linalg.norm_l2(s) - linalg.norm_l2(v)) <= 1e-12 * max(1.0, linalg.norm_l2(v))
    np.testing.assert_array_equal(s.to_dense(), v)


@settings(max_examples=60, deadline=None)
@given(arrays(np.float64, st.tuples(st.integers(1, 12), st.integers(1, 12)), elements=finite))
def test_dense_and_sparse_matrices_agree(m):
    m = np.where(np.abs(m) < 100, 0.0, m)
    s = sp.csr_matrix(m)
    assert abs(linalg.norm_l21(s) - linalg.norm_l21(m)) <= 1e-12 * max(1.0, linalg.norm_l21(m))
    np.testing.assert_allclose(linalg.row_norms(s), linalg.row_norms(m), rtol=1e-12, atol=0)
    assert linalg.sparsity(s) == linalg.sparsity(m)
    # l21 is the l1 norm of the row norms
    assert linalg.norm_l21(m) == pytest.approx(linalg.norm_l1(linalg.row_norms(m)), rel=1e-12)


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 10), st.integers(1, 10), st.integers(0, 2**32 - 1))
def test_l21_rotational_invariance(n, d, seed):
    rng = np.random.default_rng(seed)
    M = rng.standard_normal((n, d))
    R, _ = np.linalg.qr(rng.standard_normal((d, d)))
    base = linalg.norm_l21(M)
    assert abs(linalg.norm_l21(M @ R) - base) <= 1e-9 * base
