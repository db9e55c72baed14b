"""Pseudo R², bootstrapped recursive feature elimination and bootstrapped model evaluation."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .._seeding import derive_seed, make_rng
from ..errors import ConfigurationError, SampleTooSmallError, UndefinedMetricError
from .dataset import Dataset
from .forest import N_TREES, ForestModel, fit_forest_arrays

MIN_ROWS = 10
MAX_FEATURES = 5


def pseudo_r2(y, y_hat) -> float:
    """1 - MSE / var(y), negative values replaced by zero."""
    y = np.asarray(y, dtype=float)
    y_hat = np.asarray(y_hat, dtype=float)
    if y.shape != y_hat.shape:
        raise ValueError("y and y_hat must have equal length")
    if len(y) < 2:
        raise UndefinedMetricError("pseudo R² needs at least two observations")
    if np.ptp(y) == 0.0:
        raise UndefinedMetricError("pseudo R² is undefined for a constant response")
    var = float(np.var(y))
    mse = float(np.mean((y - y_hat) ** 2))
    return float(min(1.0, max(0.0, 1.0 - mse / var)))


def fit_forest(dataset: Dataset, seed: int, n_trees: int = N_TREES, columns=None) -> ForestModel:
    """Fit a forest on the dataset, optionally on a subset of columns given by name or index."""
    cols = list(range(dataset.n_features)) if columns is None else [
        dataset.column(c) if isinstance(c, str) else int(c) for c in columns
    ]
    return fit_forest_arrays(
        dataset.X[:, cols], dataset.y, seed, n_trees=n_trees,
        feature_names=[dataset.feature_names[c] for c in cols],
    )


def _ranked(importances: np.ndarray) -> np.ndarray:
    """Positions ordered by decreasing importance, ties by position."""
    return np.lexsort((np.arange(len(importances)), -importances))


@dataclass(frozen=True)
class RfeResult:
    selected: tuple[str, ...]
    frequency: dict[str, int]
    iterations: int


def rfe_select(
    dataset: Dataset,
    max_features: int = MAX_FEATURES,
    iterations: int = 1000,
    seed: int = 0,
    n_trees: int = N_TREES,
) -> RfeResult:
    """Bootstrapped recursive feature elimination.

    Each iteration fits a forest on a bootstrap resample, keeps the
    ``max_features`` most important columns, and then walks the nested
    subsets down to a single column, refitting and re-ranking at every size.
    Every subset is scored by RMSE on the out-of-bag rows; the best (smallest
    on ties) is the iteration's winner. As in caret's ``rfe``, the final
    subset size is the one with the lowest mean out-of-bag RMSE across
    iterations (smaller on ties), and the final selection is that many of the
    winners' most frequent columns, ordered by frequency.
    """
    if max_features < 1:
        raise ConfigurationError("max_features must be at least 1")
    if iterations < 1:
        raise ConfigurationError("iterations must be positive")
    dataset.require_rows(MIN_ROWS)
    names = dataset.feature_names
    p = len(names)
    if p <= max_features:
        return RfeResult(tuple(names), {n: iterations for n in names}, 0)
    n = dataset.n_rows
    counts = np.zeros(p, dtype=int)
    rmse_by_size = np.zeros(max_features + 1)
    done = 0
    attempt = 0
    while done < iterations:
        rng = make_rng("rfe", seed, attempt)
        attempt += 1
        boot = rng.integers(n, size=n)
        oob = np.setdiff1d(np.arange(n), boot)
        if len(oob) == 0:
            continue
        Xb, yb = dataset.X[boot], dataset.y[boot]
        Xo, yo = dataset.X[oob], dataset.y[oob]
        forest_seed = derive_seed("rfe-forest", seed, attempt)
        full = fit_forest_arrays(Xb, yb, forest_seed, n_trees=n_trees)
        current = _ranked(full.importances)[:max_features]
        best_rmse, best_subset = np.inf, current
        for size in range(max_features, 0, -1):
            model = fit_forest_arrays(Xb[:, current], yb, derive_seed(forest_seed, size), n_trees=n_trees)
            rmse = float(np.sqrt(np.mean((model.predict(Xo[:, current]) - yo) ** 2)))
            rmse_by_size[size] += rmse
            if rmse <= best_rmse:
                best_rmse, best_subset = rmse, current
            current = current[_ranked(model.importances)[: size - 1]]
        counts[best_subset] += 1
        done += 1
    size = 1 + int(np.argmin(rmse_by_size[1:]))  # argmin keeps the first, i.e. smallest, size on ties
    order = _ranked(counts.astype(float))
    chosen = [int(i) for i in order[:size] if counts[i] > 0]
    return RfeResult(
        tuple(names[i] for i in chosen),
        {names[i]: int(counts[i]) for i in range(p) if counts[i] > 0},
        iterations,
    )


@dataclass(frozen=True)
class EvalReport:
    mean: float
    median: float
    se: float
    iterations: int
    selected: tuple[str, ...]
    provenance: tuple[str, ...]
    importance_medians: dict[str, float] = field(default_factory=dict)
    skipped: int = 0

    def formatted(self) -> str:
        """``mean | median (se)`` with three decimals."""
        return f"{self.mean:.3f} | {self.median:.3f} ({self.se:.3f})"


def bootstrap_evaluate(
    dataset: Dataset,
    selected,
    iterations: int = 1000,
    seed: int = 0,
    n_trees: int = N_TREES,
    train_fraction: float = 0.8,
) -> EvalReport:
    """Repeated random train/validation splits scored by clamped pseudo R².

    Splits whose validation response is constant have no defined R²; they
    are redrawn and counted in ``skipped``.
    """
    selected = tuple(selected)
    if not selected:
        raise ConfigurationError("at least one selected feature is required")
    dataset.require_rows(MIN_ROWS)
    cols = [dataset.column(name) for name in selected]
    X, y = dataset.X[:, cols], dataset.y
    n = dataset.n_rows
    n_train = int(round(train_fraction * n))
    if not 2 <= n_train <= n - 2:
        raise SampleTooSmallError(f"{n} rows cannot be split {train_fraction:.0%}/{1 - train_fraction:.0%}")
    scores = np.empty(iterations)
    importances = np.empty((iterations, len(cols)))
    done = 0
    attempt = 0
    skipped = 0
    while done < iterations:
        rng = make_rng("evaluate", seed, attempt)
        attempt += 1
        perm = rng.permutation(n)
        train, valid = perm[:n_train], perm[n_train:]
        if np.ptp(y[valid]) == 0.0:
            skipped += 1
            if skipped > 10 * iterations:
                raise SampleTooSmallError("validation splits keep producing a constant response")
            continue
        model = fit_forest_arrays(X[train], y[train], derive_seed("evaluate-forest", seed, attempt), n_trees=n_trees)
        scores[done] = pseudo_r2(y[valid], model.predict(X[valid]))
        importances[done] = model.importances
        done += 1
    return EvalReport(
        float(scores.mean()),
        float(np.median(scores)),
        float(scores.std(ddof=1)) if iterations > 1 else 0.0,
        iterations,
        selected,
        tuple(dataset.provenance_of(name) for name in selected),
        dict(zip(selected, np.median(importances, axis=0).tolist())),
        skipped,
    )
