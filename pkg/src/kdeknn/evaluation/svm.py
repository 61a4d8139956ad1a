"""Soft-margin SVM trained in the dual by SMO."""

import logging

import numpy as np

from kdeknn._backend import kernels
from kdeknn._linalg import inner_products, matvec, sq_distances
from kdeknn.errors import DimensionMismatchError

log = logging.getLogger(__name__)


def kernel_matrix(A, B, kernel, gamma):
    if kernel == "linear":
        return inner_products(A, B)
    if kernel == "rbf":
        return np.exp(-gamma * sq_distances(A, B))
    raise ValueError(f"unknown kernel {kernel!r}")


def scale_gamma(X):
    """1 / (d * mean per-feature variance)."""
    var = float(np.mean(np.var(X, axis=0)))
    return 1.0 / (X.shape[1] * var) if var > 0 else 1.0


def intercept(alpha, G, y, C):
    """Offset ``rho`` from the KKT conditions; decision is ``sum a_i y_i K - rho``."""
    yG = y * G
    upper = alpha >= C
    lower = alpha <= 0
    free = ~(upper | lower)
    if free.any():
        return float(yG[free].mean())
    ub_mask = (upper & (y < 0)) | (lower & (y > 0))
    lb_mask = (upper & (y > 0)) | (lower & (y < 0))
    ub = yG[ub_mask].min() if ub_mask.any() else np.inf
    lb = yG[lb_mask].max() if lb_mask.any() else -np.inf
    return float((ub + lb) / 2.0)


class SVC:
    """Binary SVM with linear or RBF kernel; ``decision_function`` is the signed margin.

    The dual is solved with second-order working-set SMO until the maximal
    KKT violation falls below ``tol`` or ``max_passes * n`` pair updates.
    """

    def __init__(self, kernel="rbf", C=1.0, gamma=None, tol=1e-3, max_passes=10_000):
        self.kernel = kernel
        self.C = C
        self.gamma = gamma
        self.tol = tol
        self.max_passes = max_passes

    def fit(self, X, y):
        X = np.ascontiguousarray(X, dtype=np.float64)
        y = np.asarray(y)
        ys = np.where(y == 1, 1.0, -1.0)
        n = X.shape[0]
        self.gamma_ = scale_gamma(X) if self.gamma is None else float(self.gamma)
        K = np.ascontiguousarray(kernel_matrix(X, X, self.kernel, self.gamma_))
        alpha = np.zeros(n)
        G = -np.ones(n)
        max_iter = self.max_passes * n
        self.n_iter_ = int(kernels.smo_solve(K, ys, float(self.C), float(self.tol), max_iter, alpha, G))
        if self.n_iter_ >= max_iter:
            log.warning("SMO reached %d iterations without meeting tol=%g", max_iter, self.tol)
        self.rho_ = intercept(alpha, G, ys, self.C)
        sv = alpha > 0
        self.support_ = np.flatnonzero(sv)
        self.support_vectors_ = X[sv]
        self.dual_coef_ = alpha[sv] * ys[sv]
        self.n_features_ = X.shape[1]
        if self.kernel == "linear":
            self.coef_ = matvec(self.support_vectors_.T, self.dual_coef_)
        return self

    def decision_function(self, X):
        X = np.ascontiguousarray(X, dtype=np.float64)
        if X.ndim == 1:
            X = X[None, :]
        if X.shape[1] != self.n_features_:
            raise DimensionMismatchError(self.n_features_, X.shape[1])
        if self.kernel == "linear":
            return matvec(X, self.coef_) - self.rho_
        K = kernel_matrix(X, self.support_vectors_, self.kernel, self.gamma_)
        return matvec(K, self.dual_coef_) - self.rho_
