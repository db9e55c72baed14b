"""Multi-objective landscape features of a sample of solutions.

Features are computed on a decision matrix ``x`` (m, D) and an objective
matrix ``f`` (m, 2), minimised, under one fixed k-nearest-neighbour index in
decision space. Missing values are ``nan``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numba
import numpy as np
from scipy.spatial.distance import pdist

from ._seeding import make_rng
from .errors import ConfigurationError, DegenerateDatasetError, SnapshotTooSmallError
from .pareto import nondominated_sort
from .stats import pearson, spearman

FEATURE_NAMES = (
    "f_cor",
    "dist_x_avg",
    "dist_x_max",
    "dist_f_avg",
    "dist_f_max",
    "nd_n",
    "supp_n",
    "rank_avg",
    "rank_max",
    "rank_ent",
    "slo_n",
    "plo_n",
    "plo_dist_max",
    "sup_avg_neig",
    "inf_avg_neig",
    "inc_avg_neig",
    "lnd_avg_neig",
    "lsupp_avg_neig",
    "dist_x_avg_neig",
    "dist_f_avg_neig",
    "diff_f_avg_neig",
    "sup_cor_neig",
    "inf_cor_neig",
    "dist_x_cor_neig",
    "dist_f_cor_neig",
    "diff_f_cor_neig",
    "length_aws",
    "eval_aws",
)

# features that read decision vectors only
X_ONLY_FEATURES = ("dist_x_avg", "dist_x_max", "dist_x_avg_neig", "dist_x_cor_neig")

PROPORTIONS = (
    "nd_n", "supp_n", "slo_n", "plo_n", "sup_avg_neig", "inf_avg_neig",
    "inc_avg_neig", "lnd_avg_neig", "lsupp_avg_neig",
)
CORRELATIONS = (
    "f_cor", "sup_cor_neig", "inf_cor_neig", "dist_x_cor_neig", "dist_f_cor_neig", "diff_f_cor_neig",
)

EXACT_PAIR_LIMIT = 4000
PAIR_SUBSAMPLE = 1_000_000


@dataclass(frozen=True)
class FeatureParams:
    k_neig: int | None = None  # default min(2 * D, m - 1)
    n_walks: int = 30
    corr_kind: str = "spearman"
    walk_mode: str = "sampled"  # or "exact": expected walk statistics
    plo_dist: str = "max"  # or "avg"

    def __post_init__(self):
        if self.corr_kind not in ("spearman", "pearson"):
            raise ConfigurationError(f"unknown correlation kind {self.corr_kind!r}")
        if self.walk_mode not in ("sampled", "exact"):
            raise ConfigurationError(f"unknown walk mode {self.walk_mode!r}")
        if self.plo_dist not in ("max", "avg"):
            raise ConfigurationError(f"unknown plo_dist statistic {self.plo_dist!r}")
        if self.n_walks < 1:
            raise ConfigurationError("n_walks must be positive")


@numba.njit(cache=True)
def _knn_kernel(x, k):
    m, d = x.shape
    out = np.empty((m, k), dtype=np.int64)
    best = np.empty(k)
    for i in range(m):
        count = 0
        for j in range(m):
            if j == i:
                continue
            s = 0.0
            for c in range(d):
                diff = x[i, c] - x[j, c]
                s += diff * diff
            if count < k or s < best[count - 1]:
                pos = count if count < k else k - 1
                while pos > 0 and best[pos - 1] > s:
                    if pos < k:
                        best[pos] = best[pos - 1]
                        out[i, pos] = out[i, pos - 1]
                    pos -= 1
                best[pos] = s
                out[i, pos] = j
                if count < k:
                    count += 1
    return out


def neighbour_index(x, k: int) -> np.ndarray:
    """(m, k) indices of each point's k nearest other points; ties go to the lower index."""
    x = np.ascontiguousarray(x, dtype=float)
    if not 1 <= k <= len(x) - 1:
        raise SnapshotTooSmallError(f"need more than k={k} points, got {len(x)}")
    return _knn_kernel(x, k)


@numba.njit(cache=True)
def _lower_hull(f1, f2, order):
    m = order.shape[0]
    stack = np.empty(m, dtype=np.int64)
    top = 0
    for a in range(m):
        p = order[a]
        while top >= 2:
            o = stack[top - 2]
            q = stack[top - 1]
            cross = (f1[q] - f1[o]) * (f2[p] - f2[o]) - (f2[q] - f2[o]) * (f1[p] - f1[o])
            # strict test keeps points lying on a hull edge
            if cross < 0.0:
                top -= 1
            else:
                break
        stack[top] = p
        top += 1
    return stack[:top]


def supported_mask(front) -> np.ndarray:
    """Which points of a mutually non-dominated set are optimal for some positive weighted sum.

    Points on the lower-left convex hull of the front are supported,
    including points lying on a hull edge. Copies of a point share its status.
    """
    front = np.asarray(front, dtype=float).reshape(-1, 2)
    if len(front) == 0:
        return np.zeros(0, dtype=bool)
    unique, inverse = np.unique(front, axis=0, return_inverse=True)
    f1 = np.ascontiguousarray(unique[:, 0])
    f2 = np.ascontiguousarray(unique[:, 1])
    hull = _lower_hull(f1, f2, np.lexsort((f2, f1)).astype(np.int64))
    on_hull = np.zeros(len(unique), dtype=bool)
    on_hull[hull] = True
    return on_hull[inverse.ravel()]


def _corr(a, b, kind):
    return spearman(a, b) if kind == "spearman" else pearson(a, b)


def _pair_distances(points, rng_parts):
    """All pairwise distances, or a seeded subsample of pairs above the exact limit."""
    m = len(points)
    if m <= EXACT_PAIR_LIMIT:
        return pdist(points)
    rng = make_rng("pairs", *rng_parts, m)
    i = rng.integers(m, size=PAIR_SUBSAMPLE)
    j = rng.integers(m - 1, size=PAIR_SUBSAMPLE)
    j = j + (j >= i)
    return np.linalg.norm(points[i] - points[j], axis=1)


def _dominance(fi, fj):
    """(dominating, dominated) masks for neighbours ``fj`` (m, k, 2) of points ``fi`` (m, 2)."""
    fi = fi[:, None, :]
    dominating = np.all(fj <= fi, axis=2) & np.any(fj < fi, axis=2)
    dominated = np.all(fi <= fj, axis=2) & np.any(fi < fj, axis=2)
    return dominating, dominated


def _local_fronts(fn):
    """Per point: fraction of neighbours non-dominated within the neighbour set, and
    fraction supported within that local front."""
    m, k, _ = fn.shape
    a = fn[:, :, None, :]
    b = fn[:, None, :, :]
    dom = np.all(a <= b, axis=3) & np.any(a < b, axis=3)  # dom[i, p, q]: p dominates q
    local_nd = ~dom.any(axis=1)
    lnd = local_nd.mean(axis=1)
    lsupp = _local_supported(np.ascontiguousarray(fn), local_nd) / k
    return lnd, lsupp


@numba.njit(cache=True)
def _local_supported(fn, local_nd):
    """Per point: how many local front members are supported (same rule as ``supported_mask``)."""
    m, k, _ = fn.shape
    out = np.zeros(m)
    order = np.empty(k, dtype=np.int64)
    u1 = np.empty(k)
    u2 = np.empty(k)
    count = np.empty(k, dtype=np.int64)
    for i in range(m):
        n = 0
        for j in range(k):
            if local_nd[i, j]:
                # insertion sort by (f1, f2)
                pos = n
                while pos > 0 and (fn[i, order[pos - 1], 0] > fn[i, j, 0] or (
                        fn[i, order[pos - 1], 0] == fn[i, j, 0] and fn[i, order[pos - 1], 1] > fn[i, j, 1])):
                    order[pos] = order[pos - 1]
                    pos -= 1
                order[pos] = j
                n += 1
        u = 0
        for a in range(n):
            f1, f2 = fn[i, order[a], 0], fn[i, order[a], 1]
            if u > 0 and u1[u - 1] == f1 and u2[u - 1] == f2:
                count[u - 1] += 1
            else:
                u1[u], u2[u], count[u] = f1, f2, 1
                u += 1
        hull = _lower_hull(u1[:u], u2[:u], np.arange(u))
        total = 0
        for h in hull:
            total += count[h]
        out[i] = total
    return out


def _walks_sampled(dominating, nbrs, n_walks, rng):
    m, k = nbrs.shape
    lengths = np.empty(n_walks)
    evals = np.empty(n_walks)
    for w in range(n_walks):
        p = int(rng.integers(m))
        length = 0
        inspected = 0
        while True:
            # inspect neighbours in random order, move to the first dominating one
            for slot in rng.permutation(k):
                inspected += 1
                if dominating[p, slot]:
                    p = int(nbrs[p, slot])
                    length += 1
                    break
            else:
                break
        lengths[w] = length
        evals[w] = inspected
    return float(lengths.mean()), float(evals.mean())


def _walks_exact(dominating, nbrs, f):
    """Expected walk length and inspections, averaged over uniform starts."""
    m, k = nbrs.shape
    order = np.lexsort((f[:, 1], f[:, 0]))
    exp_len = np.zeros(m)
    exp_eval = np.zeros(m)
    # a dominating neighbour precedes its target in lexicographic order
    for p in order:
        dom = nbrs[p][dominating[p]]
        if len(dom) == 0:
            exp_eval[p] = k
        else:
            d = len(dom)
            exp_len[p] = 1.0 + exp_len[dom].mean()
            exp_eval[p] = (k + 1) / (d + 1) + exp_eval[dom].mean()
    return float(exp_len.mean()), float(exp_eval.mean())


def extract_features(x, f, params: FeatureParams | None = None, rng=None) -> dict[str, float]:
    """Compute all landscape features of one sample.

    Args:
        x: (m, D) decision vectors.
        f: (m, 2) objective values for the fitness kind being analysed.
        params: neighbourhood, walk and correlation settings.
        rng: generator for the adaptive walks (sampled mode only).

    Returns:
        Mapping from every name in ``FEATURE_NAMES`` to a float (``nan`` if missing).
    """
    params = params or FeatureParams()
    x = np.asarray(x, dtype=float)
    f = np.asarray(f, dtype=float)
    m, dim = x.shape
    if f.shape != (m, 2):
        raise ConfigurationError(f"objective matrix must be ({m}, 2), got {f.shape}")
    if not np.all(np.isfinite(f)):
        raise ConfigurationError("objective values must be finite")
    k = params.k_neig if params.k_neig is not None else min(2 * dim, m - 1)
    if k < 1 or m < k + 1:
        raise SnapshotTooSmallError(f"sample of {m} points is too small for k_neig={k}")
    if rng is None:
        rng = make_rng("walks", 0)
    kind = params.corr_kind
    out: dict[str, float] = {}

    out["f_cor"] = _corr(f[:, 0], f[:, 1], kind)
    dx = _pair_distances(x, ("x",))
    df = _pair_distances(f, ("f",))
    out["dist_x_avg"] = float(dx.mean())
    out["dist_x_max"] = float(dx.max())
    out["dist_f_avg"] = float(df.mean())
    out["dist_f_max"] = float(df.max())

    ranks = nondominated_sort(f)
    nd = ranks == 1
    out["nd_n"] = float(nd.mean())
    front = f[nd]
    if len(np.unique(front, axis=0)) < 2:
        out["supp_n"] = math.nan
    else:
        out["supp_n"] = float(supported_mask(front).mean())
    out["rank_avg"] = float(ranks.mean())
    out["rank_max"] = float(ranks.max())
    share = np.bincount(ranks)[1:] / m
    share = share[share > 0]
    out["rank_ent"] = float(-(share * np.log(share)).sum()) + 0.0

    nbrs = neighbour_index(x, k)
    fn = f[nbrs]
    xn = x[nbrs]
    out["slo_n"] = float(np.mean([(f[:, o] <= fn[:, :, o].min(axis=1)).mean() for o in range(2)]))
    dominating, dominated = _dominance(f, fn)
    sup = dominating.mean(axis=1)
    inf = dominated.mean(axis=1)
    plo = ~dominating.any(axis=1)
    out["plo_n"] = float(plo.mean())
    if plo.sum() < 2:
        out["plo_dist_max"] = math.nan
    else:
        d_plo = _pair_distances(x[plo], ("plo",))
        out["plo_dist_max"] = float(d_plo.max() if params.plo_dist == "max" else d_plo.mean())
    out["sup_avg_neig"] = float(sup.mean())
    out["inf_avg_neig"] = float(inf.mean())
    out["inc_avg_neig"] = float(1.0 - sup.mean() - inf.mean())
    lnd, lsupp = _local_fronts(fn)
    out["lnd_avg_neig"] = float(lnd.mean())
    out["lsupp_avg_neig"] = float(lsupp.mean())

    dist_x_pt = np.linalg.norm(xn - x[:, None, :], axis=2).mean(axis=1)
    dist_f_pt = np.linalg.norm(fn - f[:, None, :], axis=2).mean(axis=1)
    diff_f_pt = np.abs(fn - f[:, None, :]).mean(axis=(1, 2))
    out["dist_x_avg_neig"] = float(dist_x_pt.mean())
    out["dist_f_avg_neig"] = float(dist_f_pt.mean())
    out["diff_f_avg_neig"] = float(diff_f_pt.mean())
    for name, base in (
        ("sup_cor_neig", sup),
        ("inf_cor_neig", inf),
        ("dist_x_cor_neig", dist_x_pt),
        ("dist_f_cor_neig", dist_f_pt),
        ("diff_f_cor_neig", diff_f_pt),
    ):
        out[name] = _corr(base, base[nbrs].mean(axis=1), kind)

    if params.walk_mode == "exact":
        out["length_aws"], out["eval_aws"] = _walks_exact(dominating, nbrs, f)
    else:
        out["length_aws"], out["eval_aws"] = _walks_sampled(dominating, nbrs, params.n_walks, rng)

    _check_ranges(out)
    return {name: out[name] for name in FEATURE_NAMES}


def _check_ranges(features):
    for name in PROPORTIONS:
        v = features[name]
        if not (math.isnan(v) or -1e-12 <= v <= 1 + 1e-12):
            raise RuntimeError(f"{name}={v} is not a proportion")
    for name in CORRELATIONS:
        v = features[name]
        if not (math.isnan(v) or -1.0 <= v <= 1.0):
            raise RuntimeError(f"{name}={v} is not a correlation")
    if features["rank_ent"] < 0:
        raise RuntimeError("negative rank entropy")


def extract_snapshot_features(snapshot, fitness_kind: str, params: FeatureParams | None = None, rng=None):
    """Features of a sample snapshot under its true or surrogate fitness."""
    return extract_features(snapshot.x, snapshot.fitness(fitness_kind), params, rng)


def filter_features(matrix, names=FEATURE_NAMES):
    """Drop every feature column that has a missing value in any row.

    Args:
        matrix: a pandas DataFrame or a list of feature mappings.
        names: feature columns to screen; other columns pass through.

    Returns:
        (reduced DataFrame, list of dropped feature names in canonical order)
    """
    import pandas as pd

    frame = matrix if isinstance(matrix, pd.DataFrame) else pd.DataFrame(list(matrix))
    if len(frame) == 0:
        raise DegenerateDatasetError("no rows to filter")
    present = [n for n in names if n in frame.columns]
    dropped = [n for n in present if frame[n].isna().any()]
    if len(dropped) == len(present):
        raise DegenerateDatasetError("every feature column has missing values")
    others = [c for c in frame.columns if c not in present]
    kept = [n for n in present if n not in dropped]
    return frame[others + kept].copy(), dropped
