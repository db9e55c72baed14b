"""Experiment configuration, orchestration, persistence and CLI."""

from .config import ALL_SURROGATES, ExperimentConfig, ModellingParams
from .pipeline import (
    cmd_features,
    cmd_predict,
    cmd_report,
    cmd_run,
    cmd_stats,
    collect_final_hv,
    median_features,
    stats_table,
)
from .store import ResultStore, read_csv, write_csv

__all__ = [
    "ALL_SURROGATES",
    "ExperimentConfig",
    "ModellingParams",
    "ResultStore",
    "cmd_features",
    "cmd_predict",
    "cmd_report",
    "cmd_run",
    "cmd_stats",
    "collect_final_hv",
    "median_features",
    "read_csv",
    "stats_table",
    "write_csv",
]
