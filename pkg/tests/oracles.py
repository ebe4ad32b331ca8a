"""Independent reference solutions built on cvxpy for small instances."""

import cvxpy as cp
import numpy as np


def _solve(prob):
    prob.solve(solver=cp.CLARABEL)
    return float(prob.value)


def linear_svm_objective(X, y, C):
    """min 0.5 (||w||^2 + b^2) + C sum hinge; the bias is regularized like a weight."""
    n, d = X.shape
    w = cp.Variable(d)
    b = cp.Variable()
    loss = cp.sum(cp.pos(1 - cp.multiply(y, X @ w + b)))
    return _solve(cp.Problem(cp.Minimize(0.5 * cp.sum_squares(w) + 0.5 * cp.square(b) + C * loss)))


def l1_svm_objective(X, y, C, lam):
    n, d = X.shape
    w = cp.Variable(d)
    b = cp.Variable()
    loss = cp.sum(cp.pos(1 - cp.multiply(y, X @ w + b)))
    return _solve(cp.Problem(cp.Minimize(C * loss + lam * cp.norm1(w))))


def elastic_net_objective(X, y, l1, l2):
    n, d = X.shape
    w = cp.Variable(d)
    b = cp.Variable()
    obj = 0.5 * cp.sum_squares(X @ w + b - y) + l1 * cp.norm1(w) + 0.5 * l2 * cp.sum_squares(w)
    return _solve(cp.Problem(cp.Minimize(obj)))


def l21_objective(X, Y, lam):
    n, d = X.shape
    W = cp.Variable((d, Y.shape[1]))
    b = cp.Variable(Y.shape[1])
    R = X @ W + np.ones((n, 1)) @ cp.reshape(b, (1, Y.shape[1]), order="C") - Y
    obj = cp.sum(cp.norm(R, 2, axis=1)) + lam * cp.sum(cp.norm(W, 2, axis=1))
    return _solve(cp.Problem(cp.Minimize(obj)))


def random_instance(rng, max_n=10, max_d=5):
    n = int(rng.integers(4, max_n + 1))
    d = int(rng.integers(1, max_d + 1))
    X = rng.standard_normal((n, d))
    y = np.where(rng.random(n) < 0.5, 1, -1)
    y[0], y[1] = 1, -1
    return X, y
