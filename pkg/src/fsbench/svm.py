"""L2-regularized hinge-loss SVMs.

The linear solver is dual coordinate descent over the examples with the bias
folded in as a constant feature, so it minimizes

    0.5 * (||w||^2 + b^2) + C * sum_i max(0, 1 - y_i (w.x_i + b)).

The kernel solver works on a precomputed Gram matrix, keeps the equality
constraint sum_i alpha_i y_i = 0 and therefore carries an unregularized bias.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Optional, Union

import numba
import numpy as np
import scipy.sparse as sp

from .dataset import LabeledDataset
from . import linalg

__all__ = [
    "ConvergenceWarning",
    "KernelSpec",
    "SvmConfig",
    "LinearModel",
    "KernelModel",
    "hinge_loss",
    "linear_primal_objective",
    "linear_dual_objective",
    "train_linear_svm",
    "train_kernel_svm",
    "solve_kernel_dual",
    "predict",
    "decision_function",
]

BIAS_FEATURE = 1.0


class ConvergenceWarning(UserWarning):
    pass


@dataclass(frozen=True)
class KernelSpec:
    """``linear`` or ``rbf``; ``squared=False`` selects exp(-gamma * ||a - b||) instead of the
    usual squared distance."""

    kind: str = "linear"
    gamma: Optional[float] = None
    squared: bool = True

    def __post_init__(self):
        if self.kind == "linear":
            if self.gamma is not None:
                raise ValueError("gamma is only meaningful for the rbf kernel")
        elif self.kind == "rbf":
            if self.gamma is None or not self.gamma > 0:
                raise ValueError("rbf kernel needs gamma > 0")
        else:
            raise ValueError("kernel kind must be 'linear' or 'rbf'")

    def __str__(self):
        return "linear" if self.kind == "linear" else "rbf(gamma=%g)" % self.gamma

    def from_sqdist(self, d2: np.ndarray) -> np.ndarray:
        if self.kind != "rbf":
            raise ValueError("only the rbf kernel is a function of distances")
        if self.squared:
            return np.exp(-self.gamma * d2)
        return np.exp(-self.gamma * np.sqrt(d2))

    def matrix(self, A, B=None) -> np.ndarray:
        """Gram matrix K[i, j] = k(A_i, B_j); B defaults to A."""
        if self.kind == "linear":
            G = A @ (A if B is None else B).T
            return np.asarray(G.toarray() if sp.issparse(G) else G, dtype=np.float64)
        return self.from_sqdist(squared_distances(A, B))


def squared_distances(A, B=None) -> np.ndarray:
    same = B is None
    B = A if same else B
    a2 = linalg.row_norms(A) ** 2
    b2 = a2 if same else linalg.row_norms(B) ** 2
    G = A @ B.T
    G = G.toarray() if sp.issparse(G) else np.asarray(G)
    d2 = a2[:, None] + b2[None, :] - 2.0 * G
    np.maximum(d2, 0.0, out=d2)
    if same:
        np.fill_diagonal(d2, 0.0)
    return d2


@dataclass(frozen=True)
class SvmConfig:
    C: float = 1.0
    kernel: KernelSpec = field(default_factory=KernelSpec)
    tol: float = 1e-3
    max_iter: int = 1000

    def __post_init__(self):
        if not self.C > 0:
            raise ValueError("C must be > 0")
        if not self.tol > 0:
            raise ValueError("tol must be > 0")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")


@dataclass(frozen=True, eq=False)
class LinearModel:
    w: np.ndarray
    b: float = 0.0
    converged: bool = True
    n_iter: int = 0
    dual_history: Optional[np.ndarray] = None

    def __post_init__(self):
        w = np.asarray(self.w, dtype=np.float64).ravel()
        if not (np.all(np.isfinite(w)) and np.isfinite(self.b)):
            raise ValueError("model parameters must be finite")
        object.__setattr__(self, "w", w)

    def decision_function(self, X) -> np.ndarray:
        return np.asarray(X @ self.w).ravel() + self.b


@dataclass(frozen=True, eq=False)
class KernelModel:
    support_vectors: linalg.Matrix
    dual_coef: np.ndarray  # alpha_i * y_i of the support vectors
    b: float
    kernel: KernelSpec
    converged: bool = True
    n_iter: int = 0

    def decision_function(self, X) -> np.ndarray:
        if self.dual_coef.size == 0:
            return np.full(X.shape[0], self.b)
        K = self.kernel.matrix(X, self.support_vectors)
        return K @ self.dual_coef + self.b


Model = Union[LinearModel, KernelModel]


def hinge_loss(model: LinearModel, x, y: int) -> float:
    margin = y * (float(np.dot(linalg.as_dense(x), model.w)) + model.b)
    return max(1.0 - margin, 0.0)


def _xy(data):
    if isinstance(data, LabeledDataset):
        return data.X, data.y.astype(np.float64)
    X, y = data
    return X, np.asarray(y, dtype=np.float64)


def linear_primal_objective(w, b, X, y, C) -> float:
    """0.5 (||w||^2 + b^2) + C * sum hinge, the objective the linear solver minimizes."""
    margins = np.asarray(y) * (np.asarray(X @ w).ravel() + b)
    return 0.5 * (float(w @ w) + b * b) + C * float(np.sum(np.maximum(1.0 - margins, 0.0)))


def linear_dual_objective(alpha, X, y) -> float:
    v = alpha * y
    w = np.asarray(X.T @ v).ravel()
    b = BIAS_FEATURE * float(np.sum(v))
    return float(np.sum(alpha)) - 0.5 * (float(w @ w) + b * b)


def _csr_arrays(X):
    X = sp.csr_matrix(X, dtype=np.float64)
    X.sort_indices()
    return X.indptr.astype(np.int64), X.indices.astype(np.int64), X.data, X.shape[1]


@numba.njit(cache=True, nogil=True)
def _dual_cd(indptr, indices, data, d, y, C, bias, tol, max_iter, order):
    n = y.shape[0]
    w = np.zeros(d)
    wb = 0.0
    alpha = np.zeros(n)
    qd = np.empty(n)
    for i in range(n):
        s = bias * bias
        for p in range(indptr[i], indptr[i + 1]):
            s += data[p] * data[p]
        qd[i] = s
    dual_hist = np.zeros(max_iter)
    best_w = w.copy()
    best_b = 0.0
    best_alpha = alpha.copy()
    best_primal = np.inf
    converged = False
    sweeps = 0
    for it in range(max_iter):
        for oi in range(n):
            i = order[oi]
            if qd[i] <= 0.0:
                continue
            f = wb * bias
            for p in range(indptr[i], indptr[i + 1]):
                f += w[indices[p]] * data[p]
            G = y[i] * f - 1.0
            if alpha[i] == 0.0:
                pg = min(G, 0.0)
            elif alpha[i] == C:
                pg = max(G, 0.0)
            else:
                pg = G
            if pg != 0.0:
                old = alpha[i]
                new = min(max(old - G / qd[i], 0.0), C)
                delta = (new - old) * y[i]
                if delta != 0.0:
                    alpha[i] = new
                    for p in range(indptr[i], indptr[i + 1]):
                        w[indices[p]] += delta * data[p]
                    wb += delta * bias
        sweeps = it + 1
        # full KKT check at the final iterate of this sweep
        wsq = wb * wb
        for j in range(d):
            wsq += w[j] * w[j]
        loss = 0.0
        pg_max = 0.0
        asum = 0.0
        for i in range(n):
            f = wb * bias
            for p in range(indptr[i], indptr[i + 1]):
                f += w[indices[p]] * data[p]
            G = y[i] * f - 1.0
            if G < 0.0:
                loss -= G
            if alpha[i] == 0.0:
                pg = min(G, 0.0)
            elif alpha[i] == C:
                pg = max(G, 0.0)
            else:
                pg = G
            pg_max = max(pg_max, abs(pg))
            asum += alpha[i]
        primal = 0.5 * wsq + C * loss
        dual = asum - 0.5 * wsq
        dual_hist[it] = dual
        if primal < best_primal:
            best_primal = primal
            best_w[:] = w
            best_b = wb
            best_alpha[:] = alpha
        if pg_max <= tol and primal - dual <= tol * max(1.0, abs(primal)):
            converged = True
            break
    if converged:
        return w, wb * bias, alpha, sweeps, True, dual_hist[:sweeps]
    return best_w, best_b * bias, best_alpha, sweeps, False, dual_hist[:sweeps]


def _check_binary(y):
    if not (np.any(y == 1) and np.any(y == -1)):
        raise ValueError("both classes required for SVM training")


def train_linear_svm(data, cfg: SvmConfig = SvmConfig(), order=None,
                     return_alpha: bool = False):
    """Fit a linear SVM by cyclic dual coordinate descent.

    Stops once every example's projected dual gradient is at most ``cfg.tol``
    in absolute value and the duality gap is at most ``cfg.tol`` relative to
    the primal objective. Otherwise the lowest-objective sweep is returned
    with ``converged=False`` and a :class:`ConvergenceWarning`.

    ``data`` is a :class:`LabeledDataset` or an ``(X, y)`` pair.
    """
    if cfg.kernel.kind != "linear":
        raise ValueError("train_linear_svm needs a linear kernel config")
    X, y = _xy(data)
    _check_binary(y)
    indptr, indices, vals, d = _csr_arrays(X)
    if order is None:
        order = np.arange(len(y), dtype=np.int64)
    w, b, alpha, sweeps, ok, hist = _dual_cd(indptr, indices, vals, d, y, float(cfg.C),
                                             BIAS_FEATURE, float(cfg.tol), int(cfg.max_iter),
                                             np.asarray(order, dtype=np.int64))
    if not ok:
        warnings.warn("linear SVM did not converge in %d sweeps" % sweeps, ConvergenceWarning)
    model = LinearModel(w, float(b), bool(ok), int(sweeps), hist)
    return (model, alpha) if return_alpha else model


@numba.njit(cache=True, nogil=True)
def _smo(K, y, C, tol, max_steps):
    n = y.shape[0]
    alpha = np.zeros(n)
    G = -np.ones(n)
    converged = False
    steps = 0
    while steps < max_steps:
        # most violating pair
        i = -1
        j = -1
        gmax = -np.inf
        gmin = np.inf
        for t in range(n):
            v = -y[t] * G[t]
            up = (y[t] > 0 and alpha[t] < C) or (y[t] < 0 and alpha[t] > 0)
            low = (y[t] > 0 and alpha[t] > 0) or (y[t] < 0 and alpha[t] < C)
            if up and v > gmax:
                gmax = v
                i = t
            if low and v < gmin:
                gmin = v
                j = t
        if i < 0 or j < 0 or gmax - gmin <= tol:
            converged = True
            break
        a = K[i, i] + K[j, j] - 2.0 * K[i, j]
        if a <= 1e-12:
            a = 1e-12
        t_star = (gmax - gmin) / a
        lim_i = C - alpha[i] if y[i] > 0 else alpha[i]
        lim_j = alpha[j] if y[j] > 0 else C - alpha[j]
        step = min(t_star, lim_i, lim_j)
        alpha[i] += y[i] * step
        alpha[j] -= y[j] * step
        # land exactly on the box when clipped
        if step == lim_i:
            alpha[i] = C if y[i] > 0 else 0.0
        if step == lim_j:
            alpha[j] = 0.0 if y[j] > 0 else C
        for k in range(n):
            G[k] += y[k] * step * (K[k, i] - K[k, j])
        steps += 1
    # bias from free vectors, else the midpoint of the feasible interval
    ub = np.inf
    lb = -np.inf
    acc = 0.0
    nfree = 0
    for t in range(n):
        yg = y[t] * G[t]
        if alpha[t] >= C:
            if y[t] < 0:
                ub = min(ub, yg)
            else:
                lb = max(lb, yg)
        elif alpha[t] <= 0.0:
            if y[t] > 0:
                ub = min(ub, yg)
            else:
                lb = max(lb, yg)
        else:
            acc += yg
            nfree += 1
    if nfree > 0:
        rho = acc / nfree
    else:
        rho = 0.5 * (ub + lb)
    return alpha, -rho, steps, converged


def solve_kernel_dual(K: np.ndarray, y, C: float, tol: float = 1e-3, max_iter: int = 1000):
    """SMO on a precomputed Gram matrix.

    Returns ``(alpha, b, steps, converged)``; converged means the maximal
    KKT violation over pairs is at most ``tol``.
    """
    y = np.asarray(y, dtype=np.float64)
    _check_binary(y)
    K = np.ascontiguousarray(K, dtype=np.float64)
    max_steps = int(max_iter) * max(len(y), 1)
    alpha, b, steps, ok = _smo(K, y, float(C), float(tol), max_steps)
    return alpha, float(b), int(steps), bool(ok)


def train_kernel_svm(data, cfg: SvmConfig) -> KernelModel:
    """Fit a kernel SVM with the config's kernel; the Gram matrix must fit in memory."""
    X, y = _xy(data)
    K = cfg.kernel.matrix(X)
    alpha, b, steps, ok = solve_kernel_dual(K, y, cfg.C, cfg.tol, cfg.max_iter)
    if not ok:
        warnings.warn("kernel SVM did not converge in %d steps" % steps, ConvergenceWarning)
    sv = np.flatnonzero(alpha > 0)
    Xs = X[sv] if sp.issparse(X) else np.asarray(X)[sv]
    return KernelModel(Xs, alpha[sv] * y[sv], b, cfg.kernel, ok, steps)


def decision_function(model: Model, data) -> np.ndarray:
    X = data.X if isinstance(data, LabeledDataset) else data
    return model.decision_function(X)


def predict(model: Model, data) -> np.ndarray:
    """Labels in {+1, -1}; a decision value of exactly 0 maps to +1."""
    return np.where(decision_function(model, data) >= 0, 1, -1).astype(np.int8)
