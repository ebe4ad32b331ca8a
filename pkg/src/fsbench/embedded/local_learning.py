"""Local-learning feature weighting.

Each example's margin is measured against its nearest hit (same class) and
nearest miss (other class) under a feature-weighted Manhattan distance. The
neighbors are latent: the E-step turns distances into kernel probabilities
exp(-dist / width) and averages the per-feature differences, the M-step fits an
l1-penalized logistic loss on those expected margin vectors with w >= 0.

Distances in the E-step use the weights rescaled to a maximum of 1, so the
kernel width is measured in units of the strongest feature and does not
harden as the penalty shrinks.
"""

from __future__ import annotations

import warnings

import numba
import numpy as np

from .. import linalg
from ..dataset import LabeledDataset
from ..svm import ConvergenceWarning
from .ranking import FeatureRanking, SelectorConfig


def ll_margin_vector(x, hit, miss) -> np.ndarray:
    """|x - miss| - |x - hit|, elementwise."""
    x, hit, miss = (linalg.as_dense(v) for v in (x, hit, miss))
    if not x.shape == hit.shape == miss.shape:
        raise ValueError("vectors must have equal length")
    return np.abs(x - miss) - np.abs(x - hit)


@numba.njit(cache=True, nogil=True)
def _expected_margins(X, y, w, width):
    n, d = X.shape
    active = np.flatnonzero(w > 0.0)
    Z = np.zeros((n, d))
    dist = np.empty(n)
    prob = np.empty(n)
    for a in range(n):
        for i in range(n):
            s = 0.0
            for j in active:
                s += w[j] * abs(X[a, j] - X[i, j])
            dist[i] = s
        # hits and misses are normalized separately, shifted by the nearest distance
        for same in (True, False):
            dmin = np.inf
            for i in range(n):
                if i != a and (y[i] == y[a]) == same and dist[i] < dmin:
                    dmin = dist[i]
            total = 0.0
            for i in range(n):
                prob[i] = 0.0
                if i != a and (y[i] == y[a]) == same:
                    if np.isinf(width):
                        prob[i] = 1.0
                    else:
                        prob[i] = np.exp(-(dist[i] - dmin) / width)
                    total += prob[i]
            sign = -1.0 if same else 1.0
            for i in range(n):
                # the nearest neighbor has probability >= 1/n, so this cut is relative
                if prob[i] > 1e-12:
                    c = sign * prob[i] / total
                    for j in range(d):
                        Z[a, j] += c * abs(X[a, j] - X[i, j])
    return Z


def expected_margins(X, y, w, width: float) -> np.ndarray:
    """E-step: row n is E[|x_n - NM(x_n)|] - E[|x_n - NH(x_n)|] under the current weights.

    ``width=np.inf`` gives uniform neighbor probabilities within each class.
    """
    X = np.ascontiguousarray(linalg.as_dense(X))
    y = np.asarray(y, dtype=np.int64)
    for c in (1, -1):
        if np.sum(y == c) < 2:
            raise ValueError("each class needs at least 2 examples (a nearest hit must exist)")
    return _expected_margins(X, y, np.asarray(w, dtype=np.float64), float(width))


def _logistic_objective(Z, w, lam):
    m = Z @ w
    return float(np.sum(np.logaddexp(0.0, -m)) + lam * np.sum(w))


def fit_nonneg_l1_logistic(Z, lam: float, w0=None, tol: float = 1e-6, max_iter: int = 1000):
    """M-step: min_{w >= 0} sum_n log(1 + exp(-w.z_n)) + lam * sum(w).

    Accelerated projected gradient with a fixed 1/L step and adaptive restart.
    """
    n, d = Z.shape
    L = 0.25 * np.linalg.norm(Z, 2) ** 2 if Z.size else 0.0
    if L == 0.0:
        return np.zeros(d)
    step = 1.0 / L
    w = np.zeros(d) if w0 is None else np.maximum(np.asarray(w0, dtype=np.float64), 0.0)
    v = w.copy()
    t = 1.0
    for _ in range(max_iter):
        m = Z @ v
        grad = -Z.T @ (0.5 * (1.0 - np.tanh(0.5 * m)))  # -Z^T sigmoid(-m)
        w_new = np.maximum(v - step * (grad + lam), 0.0)
        change = np.linalg.norm(w_new - w)
        t_new = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
        if np.dot(v - w_new, w_new - w) > 0:
            # momentum points uphill; restart
            t_new = 1.0
            v = w_new
        else:
            v = w_new + ((t - 1.0) / t_new) * (w_new - w)
        w, t = w_new, t_new
        if change <= tol * max(1.0, np.linalg.norm(w)):
            break
    return w


def ll_fit(X, y, lam: float, width: float = 5.0, em_iter: int = 25, tol: float = 1e-4,
           max_iter: int = 1000):
    """Alternate E- and M-steps from uniform weights until the weights settle.

    Returns ``(w, n_em_iterations, converged)``.
    """
    X = np.ascontiguousarray(linalg.as_dense(X))
    y = np.asarray(y)
    w = np.ones(X.shape[1])
    converged = False
    it = 0
    for it in range(1, em_iter + 1):
        Z = expected_margins(X, y, w / w.max(), width)
        w_new = fit_nonneg_l1_logistic(Z, lam, w0=w, tol=tol * 0.1, max_iter=max_iter)
        delta = np.linalg.norm(w_new - w)
        scale = max(np.linalg.norm(w), 1e-12)
        w = w_new
        if delta <= tol * scale or not np.any(w):
            converged = True
            break
    if not converged:
        warnings.warn("local learning did not settle in %d EM iterations" % it, ConvergenceWarning)
    return w, it, converged


def ll_rank(data: LabeledDataset, cfg: SelectorConfig) -> FeatureRanking:
    """Rank by the learned nonnegative feature weights."""
    w, _, _ = ll_fit(data.X, data.y, cfg.lam, cfg.ll_kernel_width, cfg.ll_em_iter, cfg.tol,
                     cfg.max_iter)
    return FeatureRanking(w)
