"""Rank-based tests, correlations and multiple-testing correction."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.special import stdtr

EXACT_WILCOXON_MAX_N = 25


@dataclass(frozen=True)
class TestResult:
    statistic: float
    p_value: float
    n: tuple[int, ...]
    significant_after_correction: bool | None = None

    __test__ = False  # not a pytest class

    def flagged(self, threshold: float) -> "TestResult":
        return replace(self, significant_after_correction=bool(self.p_value <= threshold))


def rankdata(values) -> np.ndarray:
    """1-based ranks with ties replaced by their average rank."""
    values = np.asarray(values, dtype=float)
    order = np.argsort(values, kind="mergesort")
    sorted_vals = values[order]
    boundaries = np.flatnonzero(np.diff(sorted_vals) != 0) + 1
    starts = np.concatenate([[0], boundaries])
    ends = np.concatenate([boundaries, [len(values)]])
    avg = (starts + ends + 1) / 2.0
    ranks = np.empty(len(values))
    ranks[order] = np.repeat(avg, ends - starts)
    return ranks


def _tie_sizes(values) -> np.ndarray:
    _, counts = np.unique(np.asarray(values, dtype=float), return_counts=True)
    return counts[counts > 1].astype(float)


def _two_sided_normal(z: float) -> float:
    return min(1.0, math.erfc(abs(z) / math.sqrt(2.0)))


def pearson(a, b) -> float:
    """Pearson correlation; ``nan`` when either input has zero variance."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if len(a) != len(b):
        raise ValueError("inputs must have equal length")
    if len(a) < 2:
        return math.nan
    da = a - a.mean()
    db = b - b.mean()
    denom = math.sqrt(float(da @ da) * float(db @ db))
    if denom == 0.0 or not math.isfinite(denom):
        return math.nan
    return float(min(1.0, max(-1.0, float(da @ db) / denom)))


def spearman(a, b) -> float:
    """Spearman rank correlation (Pearson on average ranks)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if len(a) != len(b):
        raise ValueError("inputs must have equal length")
    if len(a) < 3:
        return math.nan
    return pearson(rankdata(a), rankdata(b))


def spearman_test(a, b) -> TestResult:
    """Spearman correlation with a two-sided p-value from Student's t on n - 2 degrees of freedom."""
    rho = spearman(a, b)
    n = len(a)
    if math.isnan(rho):
        return TestResult(math.nan, math.nan, (n,))
    if abs(rho) >= 1.0:
        return TestResult(rho, 0.0, (n,))
    dof = n - 2
    t = rho * math.sqrt(dof / ((1.0 - rho) * (1.0 + rho)))
    return TestResult(rho, float(min(1.0, 2.0 * stdtr(dof, -abs(t)))), (n,))


def _signed_rank_null_counts(n: int) -> np.ndarray:
    """Number of sign assignments giving each positive-rank sum 0..n(n+1)/2."""
    total = n * (n + 1) // 2
    counts = np.zeros(total + 1)
    counts[0] = 1.0
    for r in range(1, n + 1):
        counts[r:] = counts[r:] + counts[:-r].copy()
    return counts


def wilcoxon_signed_rank(a, b) -> TestResult:
    """Two-sided Wilcoxon signed-rank test on paired samples.

    Zero differences are dropped and tied magnitudes get average ranks. The
    reported statistic is min(W+, W-). Up to 25 pairs without tied
    magnitudes the null distribution is enumerated exactly; otherwise a
    tie-corrected normal approximation with continuity correction is used.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValueError("paired samples must have equal length")
    d = a - b
    d = d[d != 0]
    n = len(d)
    if n == 0:
        return TestResult(0.0, 1.0, (len(a),))
    ranks = rankdata(np.abs(d))
    w_plus = float(ranks[d > 0].sum())
    w_minus = float(ranks[d < 0].sum())
    stat = min(w_plus, w_minus)
    ties = _tie_sizes(np.abs(d))
    if n <= EXACT_WILCOXON_MAX_N and len(ties) == 0:
        counts = _signed_rank_null_counts(n)
        cdf = counts[: int(stat) + 1].sum() / 2.0**n
        return TestResult(stat, float(min(1.0, 2.0 * cdf)), (len(a),))
    mean = n * (n + 1) / 4.0
    var = n * (n + 1) * (2 * n + 1) / 24.0 - float((ties**3 - ties).sum()) / 48.0
    if var <= 0:
        return TestResult(stat, 1.0, (len(a),))
    diff = stat - mean
    z = (diff - 0.5 * np.sign(diff)) / math.sqrt(var)
    return TestResult(stat, _two_sided_normal(z), (len(a),))


def mann_whitney_u(a, b) -> TestResult:
    """Two-sided Mann-Whitney U test, tie-corrected normal approximation with continuity correction.

    The statistic is U for the first sample: the number of pairs (a_i, b_j)
    with a_i > b_j, ties counting one half.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    n1, n2 = len(a), len(b)
    if n1 == 0 or n2 == 0:
        raise ValueError("both samples must be non-empty")
    pooled = np.concatenate([a, b])
    ranks = rankdata(pooled)
    u1 = float(ranks[:n1].sum() - n1 * (n1 + 1) / 2.0)
    n = n1 + n2
    ties = _tie_sizes(pooled)
    tie_term = float((ties**3 - ties).sum()) / (n * (n - 1)) if n > 1 else 0.0
    var = n1 * n2 / 12.0 * ((n + 1) - tie_term)
    if var <= 0:
        return TestResult(u1, 1.0, (n1, n2))
    u = max(u1, n1 * n2 - u1)
    # the continuity correction never moves the statistic past the null mean
    z = max(0.0, u - n1 * n2 / 2.0 - 0.5) / math.sqrt(var)
    return TestResult(u1, _two_sided_normal(z), (n1, n2))


def bonferroni(p_values, alpha: float = 0.05) -> np.ndarray:
    """Flag ``p_i <= alpha / count`` for every p-value."""
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    p = np.asarray(p_values, dtype=float)
    if p.size == 0:
        return np.zeros(0, dtype=bool)
    return p <= alpha / p.size


def bonferroni_threshold(count: int, alpha: float = 0.05) -> float:
    return alpha / count


def median_difference_normalized(true_col, surr_col) -> float:
    """median(true) - median(surrogate) after min-max scaling of the pooled values."""
    t = np.asarray(true_col, dtype=float)
    s = np.asarray(surr_col, dtype=float)
    if len(t) == 0 or len(s) == 0:
        raise ValueError("both columns must be non-empty")
    pooled = np.concatenate([t, s])
    lo, hi = pooled.min(), pooled.max()
    if hi == lo:
        return 0.0
    return float(np.median((t - lo) / (hi - lo)) - np.median((s - lo) / (hi - lo)))
