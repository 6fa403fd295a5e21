"""Radiomics-only classical regressors and feature selection.

All fitting code here is self-contained: closed-form ridge, brute-force KNN,
least-squares gradient boosting over exhaustive-split regression trees, and
cyclic coordinate-descent LASSO.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin

from .types import ValidationError


class SelectionMethod(Enum):
    LASSO = "lasso"
    RFE = "rfe"


@dataclass(frozen=True)
class SelectedFeatures:
    method: SelectionMethod
    kept_indices: tuple[int, ...]
    hyperparams: dict

    def __post_init__(self):
        if not self.kept_indices:
            raise ValidationError("no features kept")


# ---------------------------------------------------------------------------
# Ridge

def ridge_fit(X: np.ndarray, y: np.ndarray, lam: float) -> np.ndarray:
    """Closed-form ridge on centered data; returns (w..., intercept)."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if len(X) < 1 or lam < 0:
        raise ValidationError("ridge needs n >= 1 and lambda >= 0")
    xm = X.mean(axis=0)
    ym = y.mean()
    Xc = X - xm
    yc = y - ym
    p = X.shape[1]
    if lam == 0:
        w = np.linalg.pinv(Xc) @ yc  # pseudo-inverse path for singular systems
    else:
        w = np.linalg.solve(Xc.T @ Xc + lam * np.eye(p), Xc.T @ yc)
    intercept = ym - w @ xm
    return np.concatenate([w, [intercept]])


def ridge_predict(w: np.ndarray, X: np.ndarray) -> np.ndarray:
    return np.asarray(X, dtype=np.float64) @ w[:-1] + w[-1]


class RidgeRegressor(BaseEstimator, RegressorMixin):
    def __init__(self, lam: float = 1.0):
        self.lam = lam

    def fit(self, X, y):
        self.coef_ = ridge_fit(X, y, self.lam)
        return self

    def predict(self, X):
        return ridge_predict(self.coef_, X)


# ---------------------------------------------------------------------------
# KNN

def knn_predict(X_train, y_train, query, k: int) -> float:
    """Mean of the k nearest neighbors; distance ties break by lower index."""
    if k <= 0:
        raise ValidationError("k must be positive")
    X_train = np.asarray(X_train, dtype=np.float64)
    y_train = np.asarray(y_train, dtype=np.float64)
    if k > len(X_train):
        raise ValidationError(f"k={k} exceeds n={len(X_train)}")
    dist = np.sqrt(((X_train - np.asarray(query)) ** 2).sum(axis=1))
    order = np.lexsort((np.arange(len(dist)), dist))
    return float(y_train[order[:k]].mean())


class KNNRegressor(BaseEstimator, RegressorMixin):
    def __init__(self, k: int = 5):
        self.k = k

    def fit(self, X, y):
        self.X_ = np.asarray(X, dtype=np.float64)
        self.y_ = np.asarray(y, dtype=np.float64)
        return self

    def predict(self, X):
        return np.array([knn_predict(self.X_, self.y_, q, self.k) for q in X])


# ---------------------------------------------------------------------------
# Gradient boosting with exhaustive-split regression trees

@dataclass
class _TreeNode:
    value: float
    feature: int = -1
    threshold: float = 0.0
    left: "_TreeNode | None" = None
    right: "_TreeNode | None" = None


def _fit_tree(X, y, depth):
    node = _TreeNode(value=float(y.mean()))
    if depth == 0 or len(y) < 2:
        return node
    n, p = X.shape
    base = ((y - y.mean()) ** 2).sum()
    best = (0.0, -1, 0.0)  # (gain, feature, threshold)
    for j in range(p):
        order = np.argsort(X[:, j], kind="stable")
        xs, ys = X[order, j], y[order]
        csum = np.cumsum(ys)
        csq = np.cumsum(ys ** 2)
        total, total_sq = csum[-1], csq[-1]
        for i in range(n - 1):
            if xs[i] == xs[i + 1]:
                continue
            nl = i + 1
            nr = n - nl
            sse = (csq[i] - csum[i] ** 2 / nl) \
                + ((total_sq - csq[i]) - (total - csum[i]) ** 2 / nr)
            gain = base - sse
            if gain > best[0] + 1e-12:
                best = (gain, j, (xs[i] + xs[i + 1]) / 2.0)
    if best[1] < 0:
        return node
    _, j, thr = best
    left = X[:, j] <= thr
    node.feature, node.threshold = j, thr
    node.left = _fit_tree(X[left], y[left], depth - 1)
    node.right = _fit_tree(X[~left], y[~left], depth - 1)
    return node


def _tree_predict(node, X):
    out = np.empty(len(X))
    for i, row in enumerate(X):
        cur = node
        while cur.left is not None:
            cur = cur.left if row[cur.feature] <= cur.threshold else cur.right
        out[i] = cur.value
    return out


class GradientBoostingRegressor(BaseEstimator, RegressorMixin):
    """Least-squares stagewise boosting: each tree fits the residuals."""

    def __init__(self, n_trees: int = 200, depth: int = 3,
                 shrinkage: float = 0.1, subsample: float = 1.0,
                 seed: int = 0):
        self.n_trees = n_trees
        self.depth = depth
        self.shrinkage = shrinkage
        self.subsample = subsample
        self.seed = seed

    def fit(self, X, y):
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        if len(y) < 2:
            raise ValidationError("GBR needs n >= 2")
        rng = np.random.default_rng(self.seed)
        self.base_ = float(y.mean())
        self.trees_ = []
        self.train_mse_ = []
        pred = np.full(len(y), self.base_)
        if np.allclose(y, y[0]):
            self.train_mse_.append(0.0)
            return self  # constant target: stage 0 is exact
        for _ in range(self.n_trees):
            resid = y - pred
            if self.subsample < 1.0:
                idx = rng.choice(len(y), max(2, int(self.subsample * len(y))),
                                 replace=False)
            else:
                idx = np.arange(len(y))
            tree = _fit_tree(X[idx], resid[idx], self.depth)
            self.trees_.append(tree)
            pred = pred + self.shrinkage * _tree_predict(tree, X)
            self.train_mse_.append(float(((y - pred) ** 2).mean()))
        return self

    def predict(self, X):
        X = np.asarray(X, dtype=np.float64)
        pred = np.full(len(X), self.base_)
        for tree in self.trees_:
            pred = pred + self.shrinkage * _tree_predict(tree, X)
        return pred


# ---------------------------------------------------------------------------
# LASSO coordinate descent

def lasso_coordinate_descent(X, y, lam: float, tol: float = 1e-8,
                             max_sweeps: int = 10_000):
    """Minimize (1/2n)||y - Xw||^2 + lam*||w||_1 by cyclic soft-thresholding."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n, p = X.shape
    w = np.zeros(p)
    col_sq = (X ** 2).sum(axis=0) / n
    resid = y.copy()
    for _ in range(max_sweeps):
        max_delta = 0.0
        for j in range(p):
            if col_sq[j] == 0:
                continue
            rho = X[:, j] @ resid / n + col_sq[j] * w[j]
            new_w = np.sign(rho) * max(abs(rho) - lam, 0.0) / col_sq[j]
            if new_w != w[j]:
                resid -= X[:, j] * (new_w - w[j])
                max_delta = max(max_delta, abs(new_w - w[j]))
                w[j] = new_w
        if max_delta < tol:
            return w
    raise ValidationError(
        f"LASSO did not converge in {max_sweeps} sweeps "
        f"(last residual norm {np.linalg.norm(resid):.3g})")


def lasso_select(X, y, lam: float) -> SelectedFeatures:
    w = lasso_coordinate_descent(X, y, lam)
    kept = tuple(int(i) for i in np.nonzero(w)[0])
    if not kept:
        raise ValidationError("no features kept (lambda too large)")
    return SelectedFeatures(SelectionMethod.LASSO, kept, {"lambda": lam})


def rfe_select(X, y, target_count: int, lam: float = 1.0) -> SelectedFeatures:
    """Fit ridge, drop the smallest-|coefficient| feature, repeat."""
    X = np.asarray(X, dtype=np.float64)
    p = X.shape[1]
    if not (1 <= target_count <= p):
        raise ValidationError(f"target_count {target_count} outside [1, {p}]")
    kept = list(range(p))
    while len(kept) > target_count:
        w = ridge_fit(X[:, kept], y, lam)[:-1]
        drop = int(np.argmin(np.abs(w)))
        kept.pop(drop)
    return SelectedFeatures(SelectionMethod.RFE, tuple(kept),
                            {"target_count": target_count, "lambda": lam})


def make_regressor(name: str, **kw):
    if name == "ridge":
        return RidgeRegressor(**kw)
    if name == "knn":
        return KNNRegressor(**kw)
    if name == "gbr":
        return GradientBoostingRegressor(**kw)
    raise ValidationError(f"unknown model {name!r}")
