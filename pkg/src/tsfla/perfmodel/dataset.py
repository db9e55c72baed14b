"""Per-problem modelling tables joining landscape features with final hypervolume."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from ..errors import ConfigurationError, DegenerateDatasetError, SampleTooSmallError
from ..features import FEATURE_NAMES

MODES = ("both", "surrogate_only", "true_only")
PREFIX = {"true": "true_", "surrogate": "surr_"}
STATIC = "static"


class JoinError(DegenerateDatasetError):
    """Some problems lack feature rows or hypervolume values."""

    def __init__(self, missing: dict[str, list[str]]):
        self.missing = missing
        lines = [f"{what}: {', '.join(ids)}" for what, ids in missing.items() if ids]
        super().__init__("incomplete join; missing " + "; ".join(lines))


@dataclass(frozen=True)
class Dataset:
    """One row per problem: candidate feature columns and the median final hypervolume."""

    X: np.ndarray
    y: np.ndarray
    feature_names: tuple[str, ...]
    row_ids: tuple[str, ...]
    dropped: tuple[str, ...] = field(default_factory=tuple)

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        y = np.asarray(self.y, dtype=float)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "feature_names", tuple(self.feature_names))
        object.__setattr__(self, "row_ids", tuple(self.row_ids))
        if X.ndim != 2 or X.shape != (len(y), len(self.feature_names)):
            raise ConfigurationError("X, y and feature names disagree in shape")
        if not np.all(np.isfinite(X)):
            raise DegenerateDatasetError("feature matrix contains missing values")
        if np.any((y < 0) | (y > 1)) or not np.all(np.isfinite(y)):
            raise DegenerateDatasetError("target must lie in [0, 1]")

    @property
    def n_rows(self) -> int:
        return len(self.y)

    @property
    def n_features(self) -> int:
        return len(self.feature_names)

    def column(self, name: str) -> int:
        try:
            return self.feature_names.index(name)
        except ValueError:
            raise ConfigurationError(f"unknown feature column {name!r}") from None

    def require_rows(self, minimum: int):
        if self.n_rows < minimum:
            raise SampleTooSmallError(f"{self.n_rows} rows; at least {minimum} are required")

    @staticmethod
    def provenance_of(name: str) -> str:
        for kind, prefix in PREFIX.items():
            if name.startswith(prefix):
                return kind
        return "true"


def _feature_block(features: pd.DataFrame, surrogate: str, checkpoint, kind: str) -> pd.DataFrame:
    if checkpoint == STATIC:
        rows = features[(features["surrogate"] == STATIC) & (features["fitness"] == "true")]
    else:
        rows = features[
            (features["surrogate"] == surrogate)
            & (pd.to_numeric(features["checkpoint"], errors="coerce") == int(checkpoint))
            & (features["fitness"] == kind)
        ]
    if rows["problem"].duplicated().any():
        raise DegenerateDatasetError("feature table has duplicate rows per problem")
    block = rows.set_index("problem")[list(FEATURE_NAMES)]
    return block.rename(columns={n: PREFIX[kind] + n for n in FEATURE_NAMES})


def build_datasets(features: pd.DataFrame, hypervolumes: pd.DataFrame, surrogate: str, mode: str = "both",
                   checkpoint=256, problems=None) -> Dataset:
    """Join median features with the median final hypervolume of one surrogate's runs.

    Args:
        features: median feature table with columns problem, surrogate,
            checkpoint, fitness and the 28 feature names. Static rows carry
            surrogate ``"static"``, checkpoint 0 and fitness ``"true"``.
        hypervolumes: per-run table with columns problem, surrogate, repeat, final_hv.
        surrogate: surrogate whose runs provide features and targets.
        mode: ``both`` (56 candidates), ``surrogate_only`` or ``true_only`` (28).
        checkpoint: a checkpoint evaluation count, or ``"static"``.
        problems: expected problem ids; defaults to every problem with runs.
    """
    if mode not in MODES:
        raise ConfigurationError(f"mode must be one of {MODES}")
    if checkpoint == STATIC:
        if mode == "surrogate_only":
            raise ConfigurationError("the static sample has no surrogate features")
        kinds = ["true"]
    else:
        kinds = {"both": ["true", "surrogate"], "surrogate_only": ["surrogate"], "true_only": ["true"]}[mode]
    runs = hypervolumes[hypervolumes["surrogate"] == surrogate]
    target = runs.groupby("problem")["final_hv"].median()
    expected = sorted(problems) if problems is not None else sorted(target.index)
    blocks = [_feature_block(features, surrogate, checkpoint, k) for k in kinds]
    missing = {
        "hypervolume": [p for p in expected if p not in target.index],
        "features": [p for p in expected if any(p not in b.index for b in blocks)],
    }
    if any(missing.values()):
        raise JoinError(missing)
    table = pd.concat([b.loc[expected] for b in blocks], axis=1)
    names = [c for c in table.columns]
    dropped = [c for c in names if table[c].isna().any()]
    kept = [c for c in names if c not in dropped]
    if not kept:
        raise DegenerateDatasetError("every candidate feature has missing values")
    y = target.loc[expected].to_numpy(dtype=float)
    if np.ptp(y) == 0.0:
        raise DegenerateDatasetError(f"{surrogate}: final hypervolume is identical for every problem")
    return Dataset(table[kept].to_numpy(dtype=float), y, kept, expected, tuple(dropped))
