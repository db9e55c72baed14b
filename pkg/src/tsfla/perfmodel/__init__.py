"""Random-forest performance models over landscape features."""

from .dataset import MODES, STATIC, Dataset, JoinError, build_datasets
from .evaluation import EvalReport, RfeResult, bootstrap_evaluate, fit_forest, pseudo_r2, rfe_select
from .forest import MIN_NODE, N_TREES, ForestModel, default_mtry, fit_forest_arrays

__all__ = [
    "MIN_NODE",
    "MODES",
    "N_TREES",
    "STATIC",
    "Dataset",
    "EvalReport",
    "ForestModel",
    "JoinError",
    "RfeResult",
    "bootstrap_evaluate",
    "build_datasets",
    "default_mtry",
    "fit_forest",
    "fit_forest_arrays",
    "pseudo_r2",
    "rfe_select",
]
