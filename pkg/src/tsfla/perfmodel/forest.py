"""Regression random forest built from CART trees with variance-reduction splits."""

from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np

N_TREES = 500
MIN_NODE = 5


@numba.njit(cache=True)
def _grow_tree(X, y, idx, mtry, min_node, feat, thr, left, right, value, size, rss, importance, base):
    """Grow one tree over the rows ``idx`` into node slots starting at ``base``.

    Returns the number of nodes written.
    """
    n_features = X.shape[1]
    perm = np.arange(n_features)
    stack_node = np.empty(2 * len(idx) + 1, dtype=np.int64)
    stack_lo = np.empty(2 * len(idx) + 1, dtype=np.int64)
    stack_hi = np.empty(2 * len(idx) + 1, dtype=np.int64)
    top = 0
    n_nodes = 1
    stack_node[0] = 0
    stack_lo[0] = 0
    stack_hi[0] = len(idx)
    top = 1
    vals = np.empty(len(idx))
    while top > 0:
        top -= 1
        node = stack_node[top]
        lo = stack_lo[top]
        hi = stack_hi[top]
        nn = hi - lo
        total = 0.0
        for r in range(lo, hi):
            total += y[idx[r]]
        mean = total / nn
        node_rss = 0.0
        for r in range(lo, hi):
            dev = y[idx[r]] - mean
            node_rss += dev * dev
        slot = base + node
        value[slot] = mean
        size[slot] = nn
        rss[slot] = node_rss
        feat[slot] = -1
        left[slot] = -1
        right[slot] = -1
        if nn < min_node or node_rss <= 0.0:
            continue
        # partial Fisher-Yates draw of mtry candidate features
        for j in range(mtry):
            pick = j + np.random.randint(n_features - j)
            tmp = perm[j]
            perm[j] = perm[pick]
            perm[pick] = tmp
        best_dec = 0.0
        best_f = -1
        best_thr = 0.0
        for j in range(mtry):
            f = perm[j]
            for r in range(nn):
                vals[r] = X[idx[lo + r], f]
            order = np.argsort(vals[:nn], kind="mergesort")
            s_left = 0.0
            for r in range(nn - 1):
                row = idx[lo + order[r]]
                s_left += y[row]
                v_here = vals[order[r]]
                v_next = vals[order[r + 1]]
                if v_here == v_next:
                    continue
                n_left = r + 1
                s_right = total - s_left
                dec = s_left * s_left / n_left + s_right * s_right / (nn - n_left) - total * total / nn
                if dec > best_dec:
                    best_dec = dec
                    best_f = f
                    mid = 0.5 * (v_here + v_next)
                    best_thr = mid if mid < v_next else v_here
        if best_f < 0:
            continue
        # partition rows in place: <= threshold to the left
        i = lo
        j = hi - 1
        while i <= j:
            if X[idx[i], best_f] <= best_thr:
                i += 1
            else:
                tmp = idx[i]
                idx[i] = idx[j]
                idx[j] = tmp
                j -= 1
        mid_row = i
        left_rss = 0.0
        right_rss = 0.0
        s = 0.0
        for r in range(lo, mid_row):
            s += y[idx[r]]
        m_left = s / (mid_row - lo)
        for r in range(lo, mid_row):
            dev = y[idx[r]] - m_left
            left_rss += dev * dev
        s = 0.0
        for r in range(mid_row, hi):
            s += y[idx[r]]
        m_right = s / (hi - mid_row)
        for r in range(mid_row, hi):
            dev = y[idx[r]] - m_right
            right_rss += dev * dev
        feat[slot] = best_f
        thr[slot] = best_thr
        importance[best_f] += node_rss - left_rss - right_rss
        left_id = n_nodes
        right_id = n_nodes + 1
        n_nodes += 2
        left[slot] = left_id
        right[slot] = right_id
        stack_node[top] = right_id
        stack_lo[top] = mid_row
        stack_hi[top] = hi
        top += 1
        stack_node[top] = left_id
        stack_lo[top] = lo
        stack_hi[top] = mid_row
        top += 1
    return n_nodes


@numba.njit(cache=True)
def _grow_forest(X, y, n_trees, mtry, min_node, seed):
    np.random.seed(seed)
    n = X.shape[0]
    cap = n_trees * (2 * n + 1)
    feat = np.empty(cap, dtype=np.int64)
    thr = np.empty(cap)
    left = np.empty(cap, dtype=np.int64)
    right = np.empty(cap, dtype=np.int64)
    value = np.empty(cap)
    size = np.empty(cap, dtype=np.int64)
    rss = np.empty(cap)
    starts = np.empty(n_trees + 1, dtype=np.int64)
    importance = np.zeros((n_trees, X.shape[1]))
    boot = np.empty((n_trees, n), dtype=np.int64)
    base = 0
    for t in range(n_trees):
        idx = np.empty(n, dtype=np.int64)
        for r in range(n):
            idx[r] = np.random.randint(n)
        boot[t] = idx
        starts[t] = base
        base += _grow_tree(X, y, idx.copy(), mtry, min_node, feat, thr, left, right, value, size, rss,
                           importance[t], base)
    starts[n_trees] = base
    return feat[:base], thr[:base], left[:base], right[:base], value[:base], size[:base], rss[:base], starts, importance, boot


@numba.njit(cache=True)
def _predict(X, feat, thr, left, right, value, starts):
    n_trees = starts.shape[0] - 1
    out = np.zeros((X.shape[0], n_trees))
    for t in range(n_trees):
        base = starts[t]
        for r in range(X.shape[0]):
            node = 0
            while feat[base + node] >= 0:
                if X[r, feat[base + node]] <= thr[base + node]:
                    node = left[base + node]
                else:
                    node = right[base + node]
            out[r, t] = value[base + node]
    return out


@dataclass(frozen=True)
class ForestModel:
    """Trained forest; node arrays of all trees are concatenated, tree t spanning
    ``starts[t]:starts[t + 1]``."""

    feature_names: tuple[str, ...]
    n_trees: int
    mtry: int
    min_node: int
    seed: int
    feat: np.ndarray
    thr: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    size: np.ndarray
    rss: np.ndarray
    starts: np.ndarray
    tree_importances: np.ndarray  # (n_trees, n_features) RSS decrease per tree
    bootstrap_rows: np.ndarray  # (n_trees, n) rows drawn for every tree

    @property
    def importances(self) -> np.ndarray:
        """Total RSS decrease per feature, averaged over trees."""
        return self.tree_importances.mean(axis=0)

    def importance_dict(self) -> dict[str, float]:
        return dict(zip(self.feature_names, self.importances.tolist()))

    def predict_trees(self, X) -> np.ndarray:
        """(n, n_trees) per-tree predictions."""
        X = np.ascontiguousarray(X, dtype=float)
        return _predict(X, self.feat, self.thr, self.left, self.right, self.value, self.starts)

    def predict(self, X) -> np.ndarray:
        return self.predict_trees(X).mean(axis=1)

    def tree_nodes(self, t: int) -> slice:
        return slice(int(self.starts[t]), int(self.starts[t + 1]))


def default_mtry(n_features: int) -> int:
    return max(1, n_features // 3)


def fit_forest_arrays(X, y, seed: int, n_trees: int = N_TREES, mtry: int | None = None,
                      min_node: int = MIN_NODE, feature_names=None) -> ForestModel:
    """Fit a regression forest on raw arrays.

    Every tree sees a with-replacement bootstrap of all rows and considers
    ``mtry`` randomly drawn features at each split. Nodes smaller than
    ``min_node`` are not split; depth is unlimited.
    """
    X = np.ascontiguousarray(X, dtype=float)
    y = np.ascontiguousarray(y, dtype=float)
    n, p = X.shape
    if len(y) != n:
        raise ValueError("X and y disagree on the number of rows")
    if n == 0 or p == 0:
        raise ValueError("cannot fit a forest without rows and features")
    mtry = default_mtry(p) if mtry is None else min(max(1, mtry), p)
    names = tuple(feature_names) if feature_names is not None else tuple(f"x{i}" for i in range(p))
    seed32 = int(seed) % (2**32)
    arrays = _grow_forest(X, y, n_trees, mtry, min_node, seed32)
    return ForestModel(names, n_trees, mtry, min_node, int(seed), *arrays)
