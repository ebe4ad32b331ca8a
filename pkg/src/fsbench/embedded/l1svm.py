"""1-norm SVM: C * sum hinge + lam * ||w||_1 with an unpenalized bias.

Solved with a primal-dual proximal splitting (Chambolle-Pock) on the exact
hinge. The primal step is a soft-threshold, which is where exact zeros come from.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numba
import numpy as np
import scipy.sparse as sp

from ..dataset import LabeledDataset
from ..svm import ConvergenceWarning, _check_binary, _csr_arrays
from .ranking import FeatureRanking, SelectorConfig


@dataclass(frozen=True, eq=False)
class L1SvmResult:
    w: np.ndarray
    b: float
    n_iter: int
    converged: bool
    screened: bool = False


def l1_svm_objective(w, b, X, y, C, lam) -> float:
    margins = np.asarray(y) * (np.asarray(X @ w).ravel() + b)
    return C * float(np.sum(np.maximum(1.0 - margins, 0.0))) + lam * float(np.sum(np.abs(w)))


def _class_sums(X, y):
    pos = np.asarray(X[y > 0].sum(axis=0)).ravel()
    neg = np.asarray(X[y < 0].sum(axis=0)).ravel()
    return pos, neg, int(np.sum(y > 0)), int(np.sum(y < 0))


def l1_svm_lambda_max(X, y, C) -> float:
    """Penalty at and above which w = 0 is certified optimal.

    Built from the subgradient of the hinge term at w = 0 with the best
    constant bias, spreading the slack of the majority class uniformly. For
    balanced classes the subgradient is forced and the value is tight.
    """
    y = np.asarray(y, dtype=np.float64)
    pos, neg, n_pos, n_neg = _class_sums(X, y)
    a = min(1.0, n_neg / n_pos)
    c = min(1.0, n_pos / n_neg)
    return float(C * np.max(np.abs(a * pos - c * neg))) if pos.size else 0.0


def _best_constant_bias(y) -> float:
    n_pos, n_neg = int(np.sum(y > 0)), int(np.sum(y < 0))
    return 1.0 if n_pos > n_neg else (-1.0 if n_neg > n_pos else 0.0)


@numba.njit(cache=True)
def _spectral_norm_sq(indptr, indices, data, d, iters):
    # power iteration on [X 1]^T [X 1]
    n = indptr.shape[0] - 1
    v = np.ones(d + 1) / np.sqrt(d + 1.0)
    u = np.zeros(n)
    est = 0.0
    for _ in range(iters):
        for i in range(n):
            s = v[d]
            for p in range(indptr[i], indptr[i + 1]):
                s += data[p] * v[indices[p]]
            u[i] = s
        v[:] = 0.0
        for i in range(n):
            for p in range(indptr[i], indptr[i + 1]):
                v[indices[p]] += data[p] * u[i]
            v[d] += u[i]
        nv = np.sqrt(np.sum(v * v))
        if nv == 0.0:
            return 0.0
        est = nv
        v /= nv
    return est


@numba.njit(cache=True, nogil=True)
def _pdhg(indptr, indices, data, d, y, C, lam, tau, sigma, tol, max_iter):
    n = y.shape[0]
    w = np.zeros(d)
    b = 0.0
    wbar = np.zeros(d)
    bbar = 0.0
    v = np.zeros(n)
    g = np.zeros(d)
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        dv = 0.0
        for i in range(n):
            s = bbar
            for p in range(indptr[i], indptr[i + 1]):
                s += data[p] * wbar[indices[p]]
            z = v[i] + sigma * (y[i] * s - 1.0)
            z = min(max(z, -C), 0.0)
            dv = max(dv, abs(z - v[i]))
            v[i] = z
        g[:] = 0.0
        gb = 0.0
        for i in range(n):
            yv = y[i] * v[i]
            if yv != 0.0:
                for p in range(indptr[i], indptr[i + 1]):
                    g[indices[p]] += data[p] * yv
                gb += yv
        dx = 0.0
        thr = tau * lam
        for j in range(d):
            z = w[j] - tau * g[j]
            if z > thr:
                z -= thr
            elif z < -thr:
                z += thr
            else:
                z = 0.0
            dx = max(dx, abs(z - w[j]))
            wbar[j] = 2.0 * z - w[j]
            w[j] = z
        nb = b - tau * gb
        dx = max(dx, abs(nb - b))
        bbar = 2.0 * nb - b
        b = nb
        if dx <= tol and dv <= tol * max(C, 1.0):
            converged = True
            break
    return w, b, it, converged


def l1_svm_fit(X, y, C: float = 1.0, lam: float = 1.0, tol: float = 1e-6,
               max_iter: int = 100_000) -> L1SvmResult:
    """Minimize ``C * sum_i hinge(y_i (w.x_i + b)) + lam * ||w||_1``.

    For ``lam >= l1_svm_lambda_max`` the all-zero weight vector is returned
    directly (it is provably optimal there). Otherwise the iteration stops when
    both the primal and the dual iterates move by at most ``tol``.
    """
    y = np.asarray(y, dtype=np.float64)
    _check_binary(y)
    d = X.shape[1]
    if lam >= l1_svm_lambda_max(X, y, C):
        return L1SvmResult(np.zeros(d), _best_constant_bias(y), 0, True, screened=True)
    indptr, indices, data, _ = _csr_arrays(X)
    L = np.sqrt(_spectral_norm_sq(indptr, indices, data, d, 200)) * 1.02
    L = max(L, 1e-12)
    # balance the primal and dual step: the dual box has width C
    ratio = max(C, 1e-12)
    tau = ratio / L
    sigma = 0.99 / (L * ratio)
    w, b, it, ok = _pdhg(indptr, indices, data, d, y, float(C), float(lam), tau, sigma,
                         float(tol), int(max_iter))
    if not ok:
        warnings.warn("L1-SVM did not converge in %d iterations" % it, ConvergenceWarning)
    return L1SvmResult(w, float(b), int(it), bool(ok))


def l1_svm_rank(data: LabeledDataset, cfg: SelectorConfig) -> FeatureRanking:
    """Rank by |w_j| of the 1-norm SVM fitted with ``cfg.C`` and ``cfg.lam``."""
    res = l1_svm_fit(data.X, data.y, cfg.C, cfg.lam, tol=cfg.tol, max_iter=cfg.max_iter * 100)
    return FeatureRanking(np.abs(res.w))
