"""Pareto dominance utilities for two minimised objectives."""

import numba
import numpy as np


@numba.njit(cache=True)
def _rank_sorted(f1, f2, order):
    m = order.shape[0]
    ranks = np.empty(m, dtype=np.int64)
    tail1 = np.empty(m)
    tail2 = np.empty(m)
    n_fronts = 0
    for idx in range(m):
        p = order[idx]
        p1 = f1[p]
        p2 = f2[p]
        # first front whose latest member does not dominate p; fronts are
        # ordered so that "dominated by front k" is monotone in k
        lo = 0
        hi = n_fronts
        while lo < hi:
            mid = (lo + hi) // 2
            t1 = tail1[mid]
            t2 = tail2[mid]
            if t2 <= p2 and not (t1 == p1 and t2 == p2):
                lo = mid + 1
            else:
                hi = mid
        ranks[p] = lo + 1
        tail1[lo] = p1
        tail2[lo] = p2
        if lo == n_fronts:
            n_fronts += 1
    return ranks


def nondominated_sort(points) -> np.ndarray:
    """Return the 1-based non-dominated sorting rank of every point.

    Rank 1 is the non-dominated set; rank r + 1 is the non-dominated set
    after removing ranks 1..r. Identical points share a rank.

    Args:
        points: (m, 2) objective values, minimised.

    Returns:
        (m,) integer ranks.
    """
    f = np.asarray(points, dtype=float)
    if f.size == 0:
        return np.zeros(0, dtype=np.int64)
    f = f.reshape(-1, 2)
    if not np.all(np.isfinite(f)):
        raise ValueError("objective values must be finite")
    f1 = np.ascontiguousarray(f[:, 0])
    f2 = np.ascontiguousarray(f[:, 1])
    order = np.lexsort((f2, f1)).astype(np.int64)
    return _rank_sorted(f1, f2, order)


def nondominated_mask(points) -> np.ndarray:
    return nondominated_sort(points) == 1


def dominates(a, b) -> bool:
    """True if objective pair ``a`` Pareto-dominates ``b`` (minimisation)."""
    a = np.asarray(a)
    b = np.asarray(b)
    return bool(np.all(a <= b) and np.any(a < b))


def dominance_matrix(fa, fb) -> np.ndarray:
    """Boolean matrix ``D[i, j]`` = row i of ``fa`` dominates row j of ``fb``."""
    fa = np.asarray(fa, dtype=float)
    fb = np.asarray(fb, dtype=float)
    le = (fa[:, None, :] <= fb[None, :, :]).all(axis=2)
    lt = (fa[:, None, :] < fb[None, :, :]).any(axis=2)
    return le & lt
