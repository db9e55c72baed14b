"""Cheap fitness models built on the archive of truly evaluated solutions.

All predictors accept a single decision vector of shape (D,) and return an
objective pair of shape (2,), or a batch of shape (q, D) returning (q, 2).
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numba
import numpy as np
from scipy.spatial.distance import cdist

from .errors import ConfigurationError, ModelUnbuiltError

DEDUP_TOL = 1e-12
RIDGE = 1e-8
IDWR_SINGULAR_REL = 1e-12


class SurrogateKind(str, Enum):
    IDW = "idw"
    IDWR = "idwr"
    LR_KNN = "lr_knn"
    KNN = "knn"
    NO_STRUCTURE = "no_structure"

    @classmethod
    def parse(cls, value) -> "SurrogateKind":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("-", "_").replace(" ", "_")
        aliases = {"lrknn": "lr_knn", "nostructure": "no_structure", "none": "no_structure"}
        key = aliases.get(key, key)
        try:
            return cls(key)
        except ValueError:
            raise ConfigurationError(f"unknown surrogate kind: {value!r}") from None


class Archive:
    """Append-only store of truly evaluated solutions, in insertion order."""

    def __init__(self, dim: int, capacity: int = 64):
        self.dim = dim
        self._x = np.empty((max(capacity, 1), dim))
        self._y = np.empty((max(capacity, 1), 2))
        self._n = 0

    def __len__(self):
        return self._n

    @property
    def x(self) -> np.ndarray:
        return self._x[: self._n]

    @property
    def y(self) -> np.ndarray:
        return self._y[: self._n]

    def contains(self, x, tol: float = DEDUP_TOL) -> bool:
        if self._n == 0:
            return False
        return bool(np.any(np.all(np.abs(self.x - np.asarray(x)) <= tol, axis=1)))

    def add(self, x, y) -> None:
        x = np.asarray(x, dtype=float).reshape(self.dim)
        y = np.asarray(y, dtype=float).reshape(2)
        if not np.all(np.isfinite(y)):
            raise ValueError("archive entries need finite objective values")
        if self.contains(x):
            raise ValueError("decision vector already present in the archive")
        if self._n == len(self._x):
            # reallocate rather than resize so views handed out earlier stay valid
            grow = 2 * len(self._x)
            self._x = np.concatenate([self._x, np.empty((grow - len(self._x), self.dim))])
            self._y = np.concatenate([self._y, np.empty((grow - len(self._y), 2))])
        self._x[self._n] = x
        self._y[self._n] = y
        self._n += 1

    def extend(self, xs, ys) -> None:
        for x, y in zip(xs, ys):
            self.add(x, y)


def _as_batch(x):
    x = np.asarray(x, dtype=float)
    return np.atleast_2d(x), x.ndim == 1


def _check(archive_x, minimum=1, what="surrogate"):
    if len(archive_x) < minimum:
        raise ModelUnbuiltError(f"{what} needs at least {minimum} archived solution(s)")


def _idw(ax, ay, q):
    d = cdist(q, ax)
    out = np.empty((len(q), 2))
    zero = d == 0.0
    hit = zero.any(axis=1)
    if hit.any():
        out[hit] = ay[np.argmax(zero[hit], axis=1)]
    miss = ~hit
    if miss.any():
        inv = 1.0 / d[miss]
        w = inv / inv.sum(axis=1, keepdims=True)
        # row-wise reductions keep every prediction independent of the batch it arrives in
        out[miss] = np.column_stack([(w * ay[:, 0]).sum(axis=1), (w * ay[:, 1]).sum(axis=1)])
    return out, d, hit


def predict_idw(archive, x) -> np.ndarray:
    """Inverse distance weighted average of the archived objective values."""
    ax, ay = _arrays(archive)
    _check(ax, 1, "IDW")
    q, single = _as_batch(x)
    out = _idw(ax, ay, q)[0]
    return out[0] if single else out


def predict_idwr(archive, x) -> np.ndarray:
    """IDW plus a global trend correction that extrapolates beyond the archive hull.

    Falls back to plain IDW when the query coincides with an archived point
    or the correction's denominator vanishes (equidistant configurations).
    """
    ax, ay = _arrays(archive)
    _check(ax, 2, "IDWR")
    q, single = _as_batch(x)
    n = len(ax)
    idw, d, hit = _idw(ax, ay, q)
    out = idw.copy()
    miss = ~hit
    if miss.any():
        dm = d[miss]
        denom = n * n - dm.sum(axis=1) * (1.0 / dm).sum(axis=1)
        ok = np.abs(denom) >= IDWR_SINGULAR_REL * n * n
        rows = np.flatnonzero(miss)[ok]
        numer = ay.sum(axis=0) - n * idw[rows]
        out[rows] = idw[rows] + n * numer / denom[ok, None]
    return out[0] if single else out


@numba.njit(cache=True)
def _lr_knn_kernel(ax, ay, q, k, ridge):
    n, d = ax.shape
    out = np.empty((q.shape[0], 2))
    x_mean = np.empty(d)
    xc = np.empty(d)
    gram = np.empty((d, d))
    rhs = np.empty((d, 2))
    best = np.empty(k)
    idx = np.empty(k, dtype=np.int64)
    for r in range(q.shape[0]):
        # k nearest by insertion into a sorted buffer; strict comparison keeps
        # earlier archive entries first among equal distances
        count = 0
        for i in range(n):
            s = 0.0
            for j in range(d):
                diff = q[r, j] - ax[i, j]
                s += diff * diff
            if count < k or s < best[count - 1]:
                pos = count if count < k else k - 1
                while pos > 0 and best[pos - 1] > s:
                    if pos < k:
                        best[pos] = best[pos - 1]
                        idx[pos] = idx[pos - 1]
                    pos -= 1
                best[pos] = s
                idx[pos] = i
                if count < k:
                    count += 1
        if best[0] == 0.0:
            out[r, 0] = ay[idx[0], 0]
            out[r, 1] = ay[idx[0], 1]
            continue
        x_mean[:] = 0.0
        y0 = 0.0
        y1 = 0.0
        for i in idx:
            for j in range(d):
                x_mean[j] += ax[i, j]
            y0 += ay[i, 0]
            y1 += ay[i, 1]
        x_mean /= k
        y0 /= k
        y1 /= k
        gram[:, :] = 0.0
        rhs[:, :] = 0.0
        for i in idx:
            for j in range(d):
                xc[j] = ax[i, j] - x_mean[j]
            for j in range(d):
                rhs[j, 0] += xc[j] * (ay[i, 0] - y0)
                rhs[j, 1] += xc[j] * (ay[i, 1] - y1)
                for l in range(j + 1):
                    gram[j, l] += xc[j] * xc[l]
        # Cholesky factorisation in place (lower triangle); the ridge keeps it SPD
        for j in range(d):
            gram[j, j] += ridge
            for l in range(j):
                gram[j, j] -= gram[j, l] * gram[j, l]
            gram[j, j] = np.sqrt(gram[j, j])
            for i2 in range(j + 1, d):
                for l in range(j):
                    gram[i2, j] -= gram[i2, l] * gram[j, l]
                gram[i2, j] /= gram[j, j]
        for c in range(2):
            for j in range(d):
                for l in range(j):
                    rhs[j, c] -= gram[j, l] * rhs[l, c]
                rhs[j, c] /= gram[j, j]
            for j in range(d - 1, -1, -1):
                for l in range(j + 1, d):
                    rhs[j, c] -= gram[l, j] * rhs[l, c]
                rhs[j, c] /= gram[j, j]
        p0 = y0
        p1 = y1
        for j in range(d):
            p0 += (q[r, j] - x_mean[j]) * rhs[j, 0]
            p1 += (q[r, j] - x_mean[j]) * rhs[j, 1]
        out[r, 0] = p0
        out[r, 1] = p1
    return out


def predict_lr_knn(archive, x, k: int = 32) -> np.ndarray:
    """Local linear regression on the ``k`` nearest archived solutions.

    Each objective gets its own least-squares fit. Slopes are estimated on
    centred neighbours with a tiny ridge term, so rank-deficient
    neighbourhoods (including k = 1) degrade to flat local models. A query
    that coincides with an archived point returns that point's values.
    """
    ax, ay = _arrays(archive)
    _check(ax, 1, "LR-KNN")
    if k < 1:
        raise ConfigurationError("LR-KNN needs k >= 1")
    q, single = _as_batch(x)
    out = _lr_knn_kernel(
        np.ascontiguousarray(ax), np.ascontiguousarray(ay), np.ascontiguousarray(q),
        min(k, len(ax)), RIDGE,
    )
    return out[0] if single else out


def predict_knn(archive, x) -> np.ndarray:
    """Objective values of the nearest archived solution."""
    ax, ay = _arrays(archive)
    _check(ax, 1, "KNN")
    q, single = _as_batch(x)
    out = ay[np.argmin(cdist(q, ax), axis=1)]
    return out[0] if single else out


def predict_no_structure(archive, rng, x=None) -> np.ndarray:
    """Objective pair of a uniformly drawn archived solution, ignoring ``x``.

    With ``x`` given as a (q, D) batch, one independent draw is made per row.
    """
    ax, ay = _arrays(archive)
    _check(ax, 1, "No-structure")
    if x is None or np.ndim(x) == 1:
        return ay[rng.integers(len(ay))].copy()
    return ay[rng.integers(len(ay), size=len(x))].copy()


def _arrays(archive):
    if isinstance(archive, (Archive, SurrogateModel)):
        return archive.x, archive.y
    ax, ay = archive
    return np.asarray(ax, dtype=float), np.asarray(ay, dtype=float)


@dataclass(frozen=True)
class SurrogateModel:
    """Immutable surrogate over a fixed archive snapshot."""

    kind: SurrogateKind
    x: np.ndarray
    y: np.ndarray
    k: int = 32
    rng: np.random.Generator | None = None

    @classmethod
    def build(cls, kind, archive: Archive, k: int = 32, rng=None) -> "SurrogateModel":
        kind = SurrogateKind.parse(kind)
        minimum = 2 if kind is SurrogateKind.IDWR else 1
        _check(archive.x, minimum, kind.value)
        if kind is SurrogateKind.NO_STRUCTURE and rng is None:
            raise ConfigurationError("the no-structure surrogate needs an rng stream")
        return cls(kind, archive.x.copy(), archive.y.copy(), k, rng)

    def predict(self, x) -> np.ndarray:
        arrays = (self.x, self.y)
        if self.kind is SurrogateKind.IDW:
            return predict_idw(arrays, x)
        if self.kind is SurrogateKind.IDWR:
            return predict_idwr(arrays, x)
        if self.kind is SurrogateKind.LR_KNN:
            return predict_lr_knn(arrays, x, self.k)
        if self.kind is SurrogateKind.KNN:
            return predict_knn(arrays, x)
        return predict_no_structure(arrays, self.rng, x)
