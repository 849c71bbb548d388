"""Greedy binary regression trees, the weak learner of each boosting stage."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class TreeParams:
    max_depth: int
    min_samples_leaf: int = 1

    def __post_init__(self):
        if self.max_depth < 0:
            raise ValueError("max_depth must be >= 0")
        if self.min_samples_leaf < 1:
            raise ValueError("min_samples_leaf must be >= 1")


class RegressionTree:
    """Fitted tree stored as parallel node arrays.

    Node 0 is the root; nodes are numbered in pre-order. Internal nodes
    carry (feature, threshold, left, right); leaves have feature -1 and
    a value. Prediction routes left when x[feature] <= threshold.
    """

    def __init__(self, feature, threshold, left, right, value, params, n_features):
        self.feature = np.asarray(feature, dtype=np.int64)
        self.threshold = np.asarray(threshold, dtype=float)
        self.left = np.asarray(left, dtype=np.int64)
        self.right = np.asarray(right, dtype=np.int64)
        self.value = np.asarray(value, dtype=float)
        self.params = params
        self.n_features = int(n_features)

    @property
    def n_nodes(self) -> int:
        return self.feature.size

    @property
    def n_leaves(self) -> int:
        return int((self.feature < 0).sum())

    def predict(self, X) -> np.ndarray:
        """Evaluate the tree on every row of X."""
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != self.n_features:
            raise ValueError(
                f"expected shape (n, {self.n_features}), got {X.shape}"
            )
        idx = np.zeros(X.shape[0], dtype=np.int64)
        while True:
            f = self.feature[idx]
            live = np.nonzero(f >= 0)[0]
            if live.size == 0:
                break
            at = idx[live]
            go_left = X[live, f[live]] <= self.threshold[at]
            idx[live] = np.where(go_left, self.left[at], self.right[at])
        return self.value[idx]

    def predict_one(self, x) -> float:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.n_features,):
            raise ValueError(f"expected {self.n_features} coordinates, got shape {x.shape}")
        i = 0
        while self.feature[i] >= 0:
            i = self.left[i] if x[self.feature[i]] <= self.threshold[i] else self.right[i]
        return float(self.value[i])

    def to_dict(self) -> dict:
        nodes = []
        for i in range(self.n_nodes):
            if self.feature[i] < 0:
                nodes.append({"value": float(self.value[i])})
            else:
                nodes.append(
                    {
                        "feature": int(self.feature[i]),
                        "threshold": float(self.threshold[i]),
                        "left": int(self.left[i]),
                        "right": int(self.right[i]),
                    }
                )
        return {
            "max_depth": self.params.max_depth,
            "min_samples_leaf": self.params.min_samples_leaf,
            "n_features": self.n_features,
            "nodes": nodes,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RegressionTree":
        params = TreeParams(d["max_depth"], d["min_samples_leaf"])
        feature, threshold, left, right, value = [], [], [], [], []
        for node in d["nodes"]:
            if "value" in node:
                feature.append(-1)
                threshold.append(0.0)
                left.append(-1)
                right.append(-1)
                value.append(node["value"])
            else:
                feature.append(node["feature"])
                threshold.append(node["threshold"])
                left.append(node["left"])
                right.append(node["right"])
                value.append(0.0)
        return cls(feature, threshold, left, right, value, params, d["n_features"])


def _best_split(X, targets, rows, min_samples_leaf):
    """Scan all features for the split minimizing summed child SSE.

    Returns (feature, threshold) or None when no split satisfies
    min_samples_leaf on both sides. Ties go to the lowest feature index,
    then the lowest threshold, so the choice is order-free.
    """
    m = rows.size
    t = targets[rows]
    best_cost = np.inf
    best = None
    for j in range(X.shape[1]):
        v = X[rows, j]
        order = np.argsort(v, kind="stable")
        vs = v[order]
        ts = t[order]
        cum = np.cumsum(ts)
        cum2 = np.cumsum(ts * ts)
        k = np.arange(1, m)  # rows on the left side
        valid = vs[1:] > vs[:-1]
        if min_samples_leaf > 1:
            valid &= (k >= min_samples_leaf) & (m - k >= min_samples_leaf)
        if not valid.any():
            continue
        sl, sl2 = cum[:-1], cum2[:-1]
        sr, sr2 = cum[-1] - sl, cum2[-1] - sl2
        cost = (sl2 - sl * sl / k) + (sr2 - sr * sr / (m - k))
        cost[~valid] = np.inf
        i = int(np.argmin(cost))  # first minimum, lowest threshold wins
        if cost[i] < best_cost:
            best_cost = cost[i]
            best = (j, 0.5 * (vs[i] + vs[i + 1]))
    return best


def fit_tree(features, targets, params: TreeParams) -> RegressionTree:
    """Fit a regression tree to real-valued targets.

    Greedy recursive partitioning: at each node the (feature, threshold)
    pair with the lowest weighted child variance is chosen among
    midpoints of consecutive distinct sorted feature values. A node
    becomes a leaf when the depth cap is reached, its targets are all
    equal, or no candidate split leaves min_samples_leaf rows on both
    sides. Leaf value is the mean of its training targets.
    """
    X = np.asarray(features, dtype=float)
    t = np.asarray(targets, dtype=float)
    if X.ndim != 2:
        raise ValueError("features must be a 2-D matrix")
    n, p = X.shape
    if n < 1:
        raise ValueError("cannot fit a tree on an empty dataset")
    if t.shape != (n,):
        raise ValueError(f"targets shape {t.shape} does not match {n} rows")
    if not np.isfinite(t).all():
        raise ValueError("targets contain non-finite values")

    feature, threshold, left, right, value = [], [], [], [], []

    def leaf(rows) -> int:
        node = len(feature)
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        value.append(float(t[rows].mean()))
        return node

    def build(rows, depth) -> int:
        pure = rows.size == 1 or np.ptp(t[rows]) == 0.0
        if depth >= params.max_depth or pure or rows.size < 2 * params.min_samples_leaf:
            return leaf(rows)
        split = _best_split(X, t, rows, params.min_samples_leaf)
        if split is None:
            return leaf(rows)
        j, thr = split
        node = len(feature)
        feature.append(j)
        threshold.append(thr)
        left.append(-1)
        right.append(-1)
        value.append(0.0)
        mask = X[rows, j] <= thr
        left[node] = build(rows[mask], depth + 1)
        right[node] = build(rows[~mask], depth + 1)
        return node

    build(np.arange(n), 0)
    return RegressionTree(feature, threshold, left, right, value, params, p)
