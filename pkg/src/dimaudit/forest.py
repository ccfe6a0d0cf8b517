"""Random-forest regression benchmark (bagged CART trees, per-node feature sampling).

Trees are grown by a numba kernel: at each node ``mtry`` features are drawn
without replacement, every midpoint between consecutive distinct values is a
candidate threshold, and the split with the largest SSE reduction wins. A
node becomes a leaf when it is too small to give both children ``min_leaf``
rows, hits ``max_depth``, has zero SSE, or no candidate reduces SSE.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .errors import DataError
from .ingest import AttributeMatrix
from .predict import FoldAssignment, PredictionReport, r_squared, rmse
from .seeding import ordered_map, sub_rng, sub_seed32

LEAF = -1


@dataclass(frozen=True)
class ForestParams:
    n_trees: int = 200
    mtry: int | None = None  # None -> ceil(p / 3)
    min_leaf: int = 5
    max_depth: int | None = None  # None -> unlimited
    bootstrap: bool = True
    seed: int = 0

    def resolved_mtry(self, p: int) -> int:
        m = math.ceil(p / 3) if self.mtry is None else int(self.mtry)
        return max(1, min(m, p))


@dataclass(frozen=True, eq=False)
class Tree:
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    count: np.ndarray

    @property
    def node_count(self) -> int:
        return self.feature.size

    def predict(self, X: np.ndarray) -> np.ndarray:
        return _predict_tree(self.feature, self.threshold, self.left, self.right, self.value, X)


@dataclass(frozen=True, eq=False)
class ForestModel:
    trees: list[Tree]
    params: ForestParams
    n_features: int
    mtry: int
    tree_sse_gains: list[np.ndarray] = field(default_factory=list, repr=False)

    @property
    def trees_count(self) -> int:
        return len(self.trees)


@njit(cache=True, nogil=True)
def _grow(X, y, rows, mtry, min_leaf, max_depth, seed):
    np.random.seed(seed)
    n_rows = rows.size
    p = X.shape[1]
    cap = 2 * n_rows + 1
    feature = np.full(cap, -1, dtype=np.int32)
    threshold = np.zeros(cap)
    left = np.full(cap, -1, dtype=np.int32)
    right = np.full(cap, -1, dtype=np.int32)
    value = np.zeros(cap)
    count = np.zeros(cap, dtype=np.int32)
    gain_out = np.zeros(cap)

    idx = rows.copy()
    feats = np.arange(p)
    st_node = np.empty(cap, dtype=np.int64)
    st_lo = np.empty(cap, dtype=np.int64)
    st_hi = np.empty(cap, dtype=np.int64)
    st_depth = np.empty(cap, dtype=np.int64)
    top = 0
    st_node[0] = 0
    st_lo[0] = 0
    st_hi[0] = n_rows
    st_depth[0] = 0
    top = 1
    n_nodes = 1
    vals = np.empty(n_rows)
    ys = np.empty(n_rows)

    while top > 0:
        top -= 1
        node = st_node[top]
        lo = st_lo[top]
        hi = st_hi[top]
        depth = st_depth[top]
        m = hi - lo
        mean = 0.0
        for i in range(lo, hi):
            mean += y[idx[i]]
        mean /= m
        sse = 0.0
        for i in range(lo, hi):
            d = y[idx[i]] - mean
            sse += d * d
        value[node] = mean
        count[node] = m
        if m < 2 * min_leaf or (max_depth >= 0 and depth >= max_depth) or sse <= 0.0:
            continue

        # partial Fisher-Yates: the first mtry entries of feats are this node's draw
        for j in range(mtry):
            r = j + int(np.random.random() * (p - j))
            if r >= p:
                r = p - 1
            tmp = feats[j]
            feats[j] = feats[r]
            feats[r] = tmp

        best_gain = 0.0
        best_f = -1
        best_t = 0.0
        for j in range(mtry):
            f = feats[j]
            for i in range(m):
                vals[i] = X[idx[lo + i], f]
            order = np.argsort(vals[:m], kind="mergesort")
            for i in range(m):
                ys[i] = y[idx[lo + order[i]]] - mean
            # children SSE relative to the parent reduce to sL^2/nL + sR^2/nR (total sum is 0)
            s_left = 0.0
            for i in range(m - min_leaf):
                s_left += ys[i]
                n_left = i + 1
                if n_left < min_leaf:
                    continue
                a = vals[order[i]]
                b = vals[order[i + 1]]
                if a == b:
                    continue
                gain = s_left * s_left / n_left + s_left * s_left / (m - n_left)
                if gain > best_gain:
                    best_gain = gain
                    best_f = f
                    t = 0.5 * (a + b)
                    if t >= b:
                        t = a
                    best_t = t
        if best_f < 0 or best_gain <= 1e-12 * sse:
            continue

        # stable partition of idx[lo:hi] on the chosen split
        k = lo
        buf = np.empty(m, dtype=idx.dtype)
        nb = 0
        for i in range(lo, hi):
            if X[idx[i], best_f] <= best_t:
                idx[k] = idx[i]
                k += 1
            else:
                buf[nb] = idx[i]
                nb += 1
        for i in range(nb):
            idx[k + i] = buf[i]

        feature[node] = best_f
        threshold[node] = best_t
        gain_out[node] = best_gain
        left[node] = n_nodes
        right[node] = n_nodes + 1
        st_node[top] = n_nodes
        st_lo[top] = lo
        st_hi[top] = k
        st_depth[top] = depth + 1
        top += 1
        st_node[top] = n_nodes + 1
        st_lo[top] = k
        st_hi[top] = hi
        st_depth[top] = depth + 1
        top += 1
        n_nodes += 2

    return (
        feature[:n_nodes].copy(),
        threshold[:n_nodes].copy(),
        left[:n_nodes].copy(),
        right[:n_nodes].copy(),
        value[:n_nodes].copy(),
        count[:n_nodes].copy(),
        gain_out[:n_nodes].copy(),
    )


@njit(cache=True, nogil=True)
def _predict_tree(feature, threshold, left, right, value, X):
    out = np.empty(X.shape[0])
    for i in range(X.shape[0]):
        node = 0
        while feature[node] >= 0:
            if X[i, feature[node]] <= threshold[node]:
                node = left[node]
            else:
                node = right[node]
        out[i] = value[node]
    return out


def _check_xy(X, y):
    X = np.ascontiguousarray(X, dtype=float)
    y = np.ascontiguousarray(y, dtype=float)
    if X.ndim != 2 or y.shape != (X.shape[0],):
        raise DataError("forest needs a 2-D X and a matching 1-D y")
    return X, y


def forest_fit(X, y, params: ForestParams = ForestParams(), workers: int = 1) -> ForestModel:
    """Grow ``params.n_trees`` trees; tree ``t`` uses sub-seeds of (seed, t) only."""
    X, y = _check_xy(X, y)
    n, p = X.shape
    if n < 2 * params.min_leaf:
        raise DataError(f"need at least 2*min_leaf={2 * params.min_leaf} rows, got {n}")
    if params.n_trees < 1 or params.min_leaf < 1:
        raise DataError("n_trees and min_leaf must be positive")
    mtry = params.resolved_mtry(p)
    max_depth = -1 if params.max_depth is None else int(params.max_depth)

    def grow(t: int):
        if params.bootstrap:
            rows = sub_rng(params.seed, t, 0).integers(0, n, n)
        else:
            rows = np.arange(n)
        return _grow(X, y, rows.astype(np.int64), mtry, params.min_leaf, max_depth,
                     sub_seed32(params.seed, t, 1))

    grown = ordered_map(grow, list(range(params.n_trees)), workers)
    trees = [Tree(*g[:6]) for g in grown]
    return ForestModel(trees, params, p, mtry, [g[6] for g in grown])


def forest_predict(model: ForestModel, X) -> np.ndarray:
    """Mean of the per-tree leaf values."""
    X = np.ascontiguousarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != model.n_features:
        raise DataError(f"expected {model.n_features} columns, got shape {X.shape}")
    total = np.zeros(X.shape[0])
    for tree in model.trees:
        total += tree.predict(X)
    return total / len(model.trees)


def forest_cv(
    matrix: AttributeMatrix,
    folds: FoldAssignment,
    params: ForestParams = ForestParams(),
    workers: int = 1,
    r2_reference: str = "fold",
) -> PredictionReport:
    """Same outer folds as the ridge/PC1 comparison; labeled as a benchmark."""
    X, y = matrix.values, matrix.overall
    if folds.fold_of_row.shape != (len(y),):
        raise DataError("fold assignment does not match the data")
    predictions = np.empty_like(y)
    r2s, rmses = [], []
    for f in range(folds.k):
        tr, te = folds.split(f)
        fold_params = ForestParams(
            params.n_trees, params.mtry, params.min_leaf, params.max_depth, params.bootstrap,
            sub_seed32(params.seed, 2, f),
        )
        model = forest_fit(X[tr], y[tr], fold_params, workers)
        yhat = forest_predict(model, X[te])
        predictions[te] = yhat
        ref = None if r2_reference == "fold" else float(y[tr].mean())
        r2s.append(r_squared(y[te], yhat, ref))
        rmses.append(rmse(y[te], yhat))
    return PredictionReport(
        model_name="random_forest",
        per_fold_r2=np.array(r2s),
        per_fold_rmse=np.array(rmses),
        predictions=predictions,
        observed=y.copy(),
        benchmark=True,
    )
