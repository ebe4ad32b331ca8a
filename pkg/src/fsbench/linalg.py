"""Vector and matrix primitives shared by the solvers.

Matrices are either dense ``numpy.ndarray`` objects (row-major) or
``scipy.sparse`` CSR matrices. Vectors are 1-d arrays or :class:`SparseVector`.
Every function here gives the same answer for the dense and sparse form of
the same value.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np
import scipy.sparse as sp

__all__ = [
    "SparseVector",
    "Vector",
    "Matrix",
    "as_dense",
    "is_sparse",
    "norm_l1",
    "norm_l2",
    "row_norms",
    "norm_l21",
    "soft_threshold",
    "sparsity",
    "column_moments",
    "mean_abs_pairwise_correlation",
    "take_columns",
    "vstack_rows",
]


@dataclass(frozen=True, eq=False)
class SparseVector:
    """Length-``dim`` vector stored as strictly increasing (index, value) pairs.

    Explicit zeros and duplicate indices are rejected rather than dropped or
    summed.
    """

    dim: int
    indices: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        idx = np.asarray(self.indices, dtype=np.int64).ravel()
        val = np.asarray(self.values, dtype=np.float64).ravel()
        if idx.shape != val.shape:
            raise ValueError("indices and values differ in length")
        if self.dim < 0:
            raise ValueError("dim must be non-negative")
        if idx.size:
            if np.any(np.diff(idx) <= 0):
                raise ValueError("sparse indices must be strictly increasing (no duplicates)")
            if idx[0] < 0 or idx[-1] >= self.dim:
                raise ValueError("sparse index out of range [0, %d)" % self.dim)
            if np.any(val == 0):
                raise ValueError("stored sparse values must be nonzero")
        idx.setflags(write=False)
        val.setflags(write=False)
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "values", val)

    @classmethod
    def from_dense(cls, v) -> "SparseVector":
        v = np.asarray(v, dtype=np.float64).ravel()
        nz = np.flatnonzero(v)
        return cls(v.size, nz, v[nz])

    def to_dense(self) -> np.ndarray:
        out = np.zeros(self.dim)
        out[self.indices] = self.values
        return out

    def __len__(self):
        return self.dim

    def __eq__(self, other):
        if isinstance(other, (SparseVector, np.ndarray, list, tuple)):
            a = self.to_dense()
            b = as_dense(other)
            return a.shape == b.shape and bool(np.all(a == b))
        return NotImplemented

    __hash__ = None


Vector = Union[np.ndarray, SparseVector]
Matrix = Union[np.ndarray, sp.spmatrix]


def is_sparse(m) -> bool:
    return sp.issparse(m) or isinstance(m, SparseVector)


def as_dense(x) -> np.ndarray:
    """Dense float64 copy-free view where possible."""
    if isinstance(x, SparseVector):
        return x.to_dense()
    if sp.issparse(x):
        return x.toarray()
    return np.asarray(x, dtype=np.float64)


def _stored_values(v) -> np.ndarray:
    if isinstance(v, SparseVector):
        return v.values
    if sp.issparse(v):
        return v.tocsr().data
    return np.asarray(v, dtype=np.float64).ravel()


def norm_l1(v: Vector) -> float:
    return float(np.sum(np.abs(_stored_values(v))))


def norm_l2(v: Vector) -> float:
    vals = _stored_values(v)
    # np.linalg.norm rescales internally, so tiny/huge entries do not under/overflow
    return float(np.linalg.norm(vals)) if vals.size else 0.0


def row_norms(m: Matrix) -> np.ndarray:
    """Euclidean norm of every row."""
    if sp.issparse(m):
        m = m.tocsr()
        sq = np.asarray(m.multiply(m).sum(axis=1)).ravel()
        return np.sqrt(sq)
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2:
        raise ValueError("expected a 2-d matrix")
    return np.sqrt(np.einsum("ij,ij->i", m, m))


def norm_l21(m: Matrix) -> float:
    """Sum over rows of the row's Euclidean norm."""
    return float(np.sum(row_norms(m)))


def soft_threshold(z, t):
    """``sign(z) * max(|z| - t, 0)``, elementwise for arrays."""
    if np.any(np.asarray(t) < 0):
        raise ValueError("threshold must be non-negative")
    if np.ndim(z) == 0 and np.ndim(t) == 0:
        z = float(z)
        if z > t:
            return z - t
        if z < -t:
            return z + t
        return 0.0
    z = np.asarray(z, dtype=np.float64)
    return np.sign(z) * np.maximum(np.abs(z) - t, 0.0)


def sparsity(m: Matrix) -> float:
    """Fraction of exactly-zero entries."""
    rows, cols = m.shape
    total = rows * cols
    if total == 0:
        raise ValueError("sparsity of an empty matrix is undefined")
    if sp.issparse(m):
        nnz = int(np.count_nonzero(m.tocsr().data))
    else:
        nnz = int(np.count_nonzero(m))
    return (total - nnz) / total


def column_moments(m: Matrix) -> tuple[np.ndarray, np.ndarray]:
    """Per-column mean and population standard deviation."""
    n = m.shape[0]
    if sp.issparse(m):
        m = m.tocsc()
        mean = np.asarray(m.sum(axis=0)).ravel() / n
        # two-pass variance; implicit zeros each contribute mean**2
        counts = np.diff(m.indptr)
        dev = m.data - np.repeat(mean, counts)
        ss = np.bincount(np.repeat(np.arange(m.shape[1]), counts), weights=dev * dev,
                         minlength=m.shape[1])
        var = (ss + (n - counts) * mean**2) / n
    else:
        m = np.asarray(m, dtype=np.float64)
        mean = m.mean(axis=0)
        var = m.var(axis=0)
    return mean, np.sqrt(var)


def take_columns(m: Matrix, idx) -> Matrix:
    idx = np.asarray(idx, dtype=np.int64)
    if sp.issparse(m):
        return m.tocsc()[:, idx].tocsr()
    return np.ascontiguousarray(np.asarray(m)[:, idx])


def vstack_rows(blocks) -> Matrix:
    if any(sp.issparse(b) for b in blocks):
        return sp.vstack([sp.csr_matrix(b) for b in blocks], format="csr")
    return np.vstack(blocks)


def _pair_from_linear(p: np.ndarray, d: int) -> tuple[np.ndarray, np.ndarray]:
    # row-major enumeration of the strict upper triangle
    p = p.astype(np.int64)
    start = lambda i: i * (2 * d - i - 1) // 2  # noqa: E731
    i = np.floor((2 * d - 1 - np.sqrt((2 * d - 1) ** 2 - 8.0 * p)) / 2).astype(np.int64)
    i = np.clip(i, 0, d - 2)
    # float rounding can put i off by one in either direction
    for _ in range(2):
        i = np.where(start(i) > p, i - 1, i)
        i = np.where(start(i + 1) <= p, i + 1, i)
    j = p - start(i) + i + 1
    return i, j


def _dense_columns(m: Matrix, idx: np.ndarray) -> np.ndarray:
    if sp.issparse(m):
        return m[:, idx].toarray()
    return m[:, idx]


def mean_abs_pairwise_correlation(m: Matrix, sample_pairs: int = 100_000, seed: int = 0,
                                  chunk: int = 2048) -> float:
    """Mean of |Pearson r| over feature pairs.

    All pairs are used when there are at most ``sample_pairs`` of them;
    otherwise that many distinct pairs are drawn uniformly with ``seed``.
    Zero-variance features contribute ``|r| = 0``.
    """
    n, d = m.shape
    if d < 2 or n < 2:
        raise ValueError("need at least 2 features and 2 examples")
    if sp.issparse(m):
        m = m.tocsc()
    else:
        m = np.asarray(m, dtype=np.float64)
    mean, std = column_moments(m)
    total = d * (d - 1) // 2
    if total <= sample_pairs:
        pairs = np.arange(total, dtype=np.int64)
    else:
        rng = np.random.default_rng(seed)
        pairs = np.sort(rng.choice(total, size=sample_pairs, replace=False))
    left, right = _pair_from_linear(pairs, d)

    acc = 0.0
    for s in range(0, pairs.size, chunk):
        a = left[s:s + chunk]
        b = right[s:s + chunk]
        xa = _dense_columns(m, a) - mean[a]
        xb = _dense_columns(m, b) - mean[b]
        cov = np.einsum("ij,ij->j", xa, xb) / n
        denom = std[a] * std[b]
        ok = denom > 0
        r = np.zeros_like(cov)
        r[ok] = cov[ok] / denom[ok]
        acc += float(np.sum(np.minimum(np.abs(r), 1.0)))
    return acc / pairs.size
