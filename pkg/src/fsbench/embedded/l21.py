"""Joint L2,1 feature selection with the robust (unsquared) loss.

Minimizes sum_i ||W^T x_i + b - y_i||_2 + lam * ||W||_{2,1} over W (d x c) and
b (c) by iterative reweighting. Each norm ||u|| is smoothed to
sqrt(||u||^2 + eps^2); the reweighted least-squares problem is then a
majorizer of the smoothed objective, so the smoothed objective never increases.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from .. import linalg
from ..dataset import LabeledDataset
from ..svm import ConvergenceWarning
from .ranking import FeatureRanking, SelectorConfig


@dataclass(frozen=True, eq=False)
class L21Result:
    W: np.ndarray
    b: np.ndarray
    n_iter: int
    converged: bool
    objective_history: np.ndarray  # smoothed objective after each solve


def one_hot(y) -> np.ndarray:
    """+1 -> column 0, -1 -> column 1."""
    y = np.asarray(y)
    return np.column_stack([(y == 1), (y == -1)]).astype(np.float64)


def l21_objective(W, b, X, Y, lam, eps: float = 0.0) -> float:
    R = np.asarray(X @ W) + b - Y
    if eps == 0.0:
        return linalg.norm_l21(R) + lam * linalg.norm_l21(W)
    return float(np.sum(np.sqrt(np.sum(R * R, axis=1) + eps * eps))
                 + lam * np.sum(np.sqrt(np.sum(W * W, axis=1) + eps * eps)))


def _solve_psd(M, B):
    try:
        return sla.solve(M, B, assume_a="pos")
    except (sla.LinAlgError, ValueError):
        # singular when lam = 0 and the design is rank deficient
        return sla.lstsq(M, B)[0]


def _weighted_ridge(X, Y, s, dinv, lam):
    """argmin_{W,b} sum_i s_i ||W^T x_i + b - y_i||^2 + lam * sum_j ||W^j||^2 / dinv_j."""
    n, d = X.shape
    sw = s / s.sum()
    xbar = np.asarray(X.T @ sw).ravel()
    ybar = Y.T @ sw
    Yc = Y - ybar
    rs = np.sqrt(s)
    if n <= d:
        # n x n system: M = S^1/2 Xc D^-1 Xc^T S^1/2 + lam I
        XD = X @ sp.diags(dinv) if sp.issparse(X) else X * dinv
        K0 = XD @ X.T
        K0 = K0.toarray() if sp.issparse(K0) else np.asarray(K0)
        q = np.asarray(XD @ xbar).ravel()
        c0 = float(xbar @ (dinv * xbar))
        Kc = K0 - q[:, None] - q[None, :] + c0
        M = rs[:, None] * Kc * rs[None, :]
        M[np.diag_indices(n)] += lam
        Z = _solve_psd(M, rs[:, None] * Yc)
        V = rs[:, None] * Z
        W = dinv[:, None] * (np.asarray(X.T @ V) - np.outer(xbar, V.sum(axis=0)))
    else:
        # d x d system in the scaled variable U = D^1/2 W
        Xd = linalg.as_dense(X) - xbar
        g = np.sqrt(dinv)
        A = (Xd * rs[:, None]) * g
        M = A.T @ A
        M[np.diag_indices(d)] += lam
        U = _solve_psd(M, A.T @ (rs[:, None] * Yc))
        W = g[:, None] * U
    b = ybar - W.T @ xbar
    return W, b


def l21_fit(X, Y, lam: float, eps: float = 1e-8, tol: float = 1e-6,
            max_iter: int = 1000) -> L21Result:
    """Iteratively reweighted solve; stops when the smoothed objective's relative decrease is below ``tol``.

    The first solve uses unit weights (a plain ridge fit) so the iteration does
    not start at W = 0, where every row weight would be 1/(2 eps).
    """
    if lam < 0:
        raise ValueError("lam must be non-negative")
    if not eps > 0:
        raise ValueError("eps must be > 0")
    Y = np.asarray(Y, dtype=np.float64)
    if Y.ndim == 1:
        Y = Y[:, None]
    n, d = X.shape
    s = np.ones(n)
    dinv = np.ones(d)
    hist = []
    converged = False
    it = 0
    W = np.zeros((d, Y.shape[1]))
    b = np.zeros(Y.shape[1])
    for it in range(1, max_iter + 1):
        W, b = _weighted_ridge(X, Y, s, dinv, lam)
        R = np.asarray(X @ W) + b - Y
        rnorm = np.sqrt(np.sum(R * R, axis=1) + eps * eps)
        wnorm = np.sqrt(np.sum(W * W, axis=1) + eps * eps)
        obj = float(rnorm.sum() + lam * wnorm.sum())
        hist.append(obj)
        if len(hist) > 1 and hist[-2] - obj <= tol * max(1.0, abs(obj)):
            converged = True
            break
        s = 1.0 / (2.0 * rnorm)
        dinv = 2.0 * wnorm
    if not converged:
        warnings.warn("L2,1 reweighting did not converge in %d iterations" % it, ConvergenceWarning)
    return L21Result(W, b, it, converged, np.array(hist))


def l21_rank(data: LabeledDataset, cfg: SelectorConfig) -> FeatureRanking:
    """Rank by the row norms of W fitted against one-hot class targets."""
    res = l21_fit(data.X, one_hot(data.y), cfg.lam, eps=cfg.l21_eps, tol=cfg.tol,
                  max_iter=cfg.max_iter)
    return FeatureRanking(linalg.row_norms(res.W))
