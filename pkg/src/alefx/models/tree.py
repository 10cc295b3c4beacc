"""Greedy least-squares regression trees grown best-first to a leaf budget."""
from __future__ import annotations

import heapq
from dataclasses import dataclass

import numpy as np

from .. import _kernels
from ..data import DataError, Dataset
from ..predictor import EvalLedger, PredictionError, Predictor

# relative gain below which a split is treated as no improvement
GAIN_TOL = 1e-12


class TreeModel(Predictor):
    """Binary tree stored as parallel node arrays.

    ``feature[i] < 0`` marks a leaf; rows with ``x[feature] <= threshold``
    go left.
    """

    label = "tree"

    def __init__(self, feature, threshold, left, right, value, n_features: int,
                 ledger: EvalLedger | None = None):
        super().__init__(ledger)
        self.feature = np.asarray(feature, dtype=np.int64)
        self.threshold = np.asarray(threshold, dtype=np.float64)
        self.left = np.asarray(left, dtype=np.int64)
        self.right = np.asarray(right, dtype=np.int64)
        self.value = np.asarray(value, dtype=np.float64)
        self.n_features = int(n_features)

    @classmethod
    def leaf(cls, value: float, n_features: int) -> "TreeModel":
        return cls([-1], [0.0], [-1], [-1], [value], n_features)

    @property
    def n_leaves(self) -> int:
        return int((self.feature < 0).sum())

    def _predict(self, rows):
        if rows.shape[1] < self.n_features:
            raise PredictionError(f"tree needs {self.n_features} columns, rows have {rows.shape[1]}")
        return _kernels.tree_predict(self.feature, self.threshold, self.left, self.right, self.value, rows)

    def apply(self, rows) -> np.ndarray:
        """Leaf node id reached by each row."""
        rows = np.asarray(rows, dtype=float)
        leaf_ids = np.arange(self.feature.shape[0], dtype=np.float64)
        return _kernels.tree_predict(self.feature, self.threshold, self.left, self.right,
                                     leaf_ids, rows).astype(np.int64)


@dataclass
class _Candidate:
    rows: np.ndarray
    gain: float
    feature: int
    threshold: float
    left_rows: np.ndarray | None
    right_rows: np.ndarray | None


def _find_split(X: np.ndarray, y: np.ndarray, rows: np.ndarray, min_leaf: int) -> _Candidate:
    best = _Candidate(rows, -np.inf, -1, 0.0, None, None)
    if rows.shape[0] < 2 * min_leaf:
        return best
    yr = y[rows]
    scale = float(np.dot(yr, yr))
    for f in range(X.shape[1]):
        order = np.argsort(X[rows, f], kind="stable")
        xs = X[rows[order], f]
        gain, pos, _ = _kernels.best_split(xs, yr[order], min_leaf)
        if pos < 0 or gain <= GAIN_TOL * scale:
            continue
        # a later feature must beat the incumbent by more than roundoff
        if gain > best.gain + GAIN_TOL * scale:
            best = _Candidate(rows, gain, f, 0.5 * (xs[pos - 1] + xs[pos]),
                              rows[order[:pos]], rows[order[pos:]])
    return best


def fit_regression_tree(data: Dataset, max_leaves: int = 100, min_leaf: int = 1) -> TreeModel:
    """Grow a regression tree on ``data.response``.

    At each step the leaf whose best split most reduces the squared error
    is split (earliest-created leaf on ties). Candidate thresholds are
    midpoints between consecutive distinct feature values; within a leaf,
    ties go to the lowest feature index, then the lowest threshold.
    Growth stops at ``max_leaves`` leaves or when no split helps.
    """
    if data.response is None:
        raise DataError("tree fitting needs a dataset with a response")
    if max_leaves < 1 or min_leaf < 1:
        raise ValueError("max_leaves and min_leaf must be >= 1")
    if data.n < 2 * min_leaf:
        raise DataError(f"n={data.n} is below 2 * min_leaf={2 * min_leaf}")
    X, y = data.values, data.response

    feature, threshold, left, right, value = [], [], [], [], []

    def new_node(rows):
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        value.append(float(np.mean(y[rows])))
        return len(value) - 1

    root_rows = np.arange(data.n)
    heap = []
    root = new_node(root_rows)
    cand = _find_split(X, y, root_rows, min_leaf)
    if cand.feature >= 0:
        heap.append((-cand.gain, root, cand))
    n_leaves = 1
    while heap and n_leaves < max_leaves:
        _, node, cand = heapq.heappop(heap)
        feature[node] = cand.feature
        threshold[node] = cand.threshold
        for side, rows in ((left, cand.left_rows), (right, cand.right_rows)):
            child = new_node(rows)
            side[node] = child
            sub = _find_split(X, y, rows, min_leaf)
            if sub.feature >= 0:
                heapq.heappush(heap, (-sub.gain, child, sub))
        n_leaves += 1
    return TreeModel(feature, threshold, left, right, value, data.d)
