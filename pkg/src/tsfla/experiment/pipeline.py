"""End-to-end pipeline steps: optimisation runs, feature extraction, statistics and prediction models."""

from __future__ import annotations

import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np
import pandas as pd

from .._seeding import derive_seed, make_rng
from ..errors import ConfigurationError, DegenerateDatasetError, SampleTooSmallError
from ..features import FEATURE_NAMES, extract_features
from ..perfmodel import STATIC, bootstrap_evaluate, build_datasets, rfe_select
from ..problems import estimate_anchors
from ..saea import run_saea, run_static_sample
from ..stats import (
    bonferroni_threshold,
    mann_whitney_u,
    median_difference_normalized,
    spearman,
    spearman_test,
    wilcoxon_signed_rank,
)
from .config import ExperimentConfig
from .store import ResultStore, read_csv, write_frame

log = logging.getLogger(__name__)

KEY = ["problem", "surrogate", "repeat", "checkpoint", "fitness"]
MEDIAN_KEY = ["problem", "surrogate", "checkpoint", "fitness"]
FITNESS_KINDS = ("true", "surrogate")
PREDICT_MODES = {"both": "both", "surrogate": "surrogate_only", "true": "true_only"}


def _map(fn, items, workers: int):
    """Apply ``fn`` to every item, in a process pool when ``workers > 1``; results keep input order."""
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items, chunksize=1))


# runs


@dataclass(frozen=True)
class RunUnit:
    root: str
    config: dict
    problem_id: str
    surrogate: str | None  # None for the static sample
    repeat: int


def _problem(config: ExperimentConfig, store: ResultStore, problem_id: str):
    problem = next(p for p in config.problems() if p.id == problem_id)
    return problem.with_anchors(store.load_anchors(problem_id))


def _execute_unit(unit: RunUnit) -> str:
    config = ExperimentConfig.from_dict(unit.config)
    store = ResultStore(unit.root)
    problem = _problem(config, store, unit.problem_id)
    if unit.surrogate is None:
        seed = derive_seed("static", config.seed, unit.problem_id)
        snap = run_static_sample(problem, config.static_size, seed)
        store.save_static(snap, seed)
        return f"static {unit.problem_id}"
    result = run_saea(problem, unit.surrogate, config.saea, unit.repeat)
    store.save_run(result, {"master_seed": config.seed})
    return f"{unit.problem_id}/{unit.surrogate}/{unit.repeat} hv={result.final_hypervolume:.4f} ({result.wall_time:.1f}s)"


def plan_units(config: ExperimentConfig, store: ResultStore) -> list[RunUnit]:
    data = config.to_dict()
    units = []
    for problem in config.problems():
        units.append(RunUnit(str(store.root), data, problem.id, None, 0))
        for kind in config.surrogates:
            for repeat in range(config.repeats):
                units.append(RunUnit(str(store.root), data, problem.id, kind, repeat))
    return units


def _unit_dir(store: ResultStore, unit: RunUnit):
    if unit.surrogate is None:
        return store.static_dir(unit.problem_id)
    return store.run_dir(unit.problem_id, unit.surrogate, unit.repeat)


def cmd_run(config: ExperimentConfig, resume: bool = False, workers: int | None = None) -> ResultStore:
    """Execute every (problem, surrogate, repeat) run plus one static sample per problem.

    Completed units (those with a manifest) are skipped on resume; partially
    written units are discarded and re-executed.
    """
    store = ResultStore(config.output)
    store.initialise(config, resume)
    workers = workers or config.workers
    for problem in config.problems():
        if not store.problem_path(problem.id).exists():
            store.save_anchors(estimate_anchors(problem, config.anchor_samples, config.seed))
    units = plan_units(config, store)
    pending = []
    for unit in units:
        d = _unit_dir(store, unit)
        if store.is_complete(d):
            continue
        store.clear(d)
        pending.append(unit)
    log.info("%d of %d units pending", len(pending), len(units))
    started = time.perf_counter()
    for line in _map(_execute_unit, pending, workers):
        log.info("done %s", line)
    log.info("runs finished in %.1fs", time.perf_counter() - started)
    collect_final_hv(store, config)
    return store


def collect_final_hv(store: ResultStore, config: ExperimentConfig | None = None) -> pd.DataFrame:
    config = config or store.load_config()
    rows = []
    for problem in config.problems():
        for kind in config.surrogates:
            for repeat in range(config.repeats):
                d = store.run_dir(problem.id, kind, repeat)
                if not store.is_complete(d):
                    continue
                hv = store.load_hv(problem.id, kind, repeat)
                rows.append((problem.id, kind, repeat, float(hv["hv"].iloc[-1]) if len(hv) else 0.0))
    frame = pd.DataFrame(rows, columns=["problem", "surrogate", "repeat", "final_hv"])
    write_frame(store.table("final_hv.csv"), frame)
    return frame


# features


@dataclass(frozen=True)
class FeatureJob:
    root: str
    config: dict
    problem_id: str
    surrogate: str
    repeat: int
    checkpoint: int


def _extract_job(job: FeatureJob) -> list[tuple]:
    config = ExperimentConfig.from_dict(job.config)
    store = ResultStore(job.root)
    if job.surrogate == STATIC:
        path = store.static_dir(job.problem_id) / "snapshot_0.csv"
        kinds = ("true",)
    else:
        path = store.run_dir(job.problem_id, job.surrogate, job.repeat) / f"snapshot_{job.checkpoint}.csv"
        kinds = FITNESS_KINDS
    snap = store.load_snapshot(path)
    rows = []
    for kind in kinds:
        rng = make_rng("features", config.seed, job.problem_id, job.surrogate, job.repeat, job.checkpoint, kind)
        values = extract_features(snap.x, snap.fitness(kind), config.features, rng)
        rows.append((job.problem_id, job.surrogate, job.repeat, job.checkpoint, kind,
                     *[values[n] for n in FEATURE_NAMES]))
    return rows


def feature_jobs(store: ResultStore, config: ExperimentConfig) -> tuple[list[FeatureJob], list[str]]:
    data = config.to_dict()
    jobs, missing = [], []
    for problem in config.problems():
        if store.is_complete(store.static_dir(problem.id)):
            jobs.append(FeatureJob(str(store.root), data, problem.id, STATIC, 0, 0))
        else:
            missing.append(f"static/{problem.id}")
        for kind in config.surrogates:
            for repeat in range(config.repeats):
                d = store.run_dir(problem.id, kind, repeat)
                for c in config.checkpoints:
                    if store.is_complete(d) and (d / f"snapshot_{c}.csv").exists():
                        jobs.append(FeatureJob(str(store.root), data, problem.id, kind, repeat, c))
                    else:
                        missing.append(f"{problem.id}/{kind}/{repeat}/snapshot_{c}")
    return jobs, missing


def median_features(per_repeat: pd.DataFrame) -> pd.DataFrame:
    """Per-(problem, surrogate, checkpoint, fitness) medians over repeats, ignoring missing values."""
    grouped = per_repeat.groupby(MEDIAN_KEY, sort=True)[list(FEATURE_NAMES)].median()
    return grouped.reset_index()[MEDIAN_KEY + list(FEATURE_NAMES)]


def cmd_features(store: ResultStore, workers: int | None = None) -> pd.DataFrame:
    """Extract features of every snapshot and write per-repeat rows and medians over repeats."""
    config = store.load_config()
    jobs, missing = feature_jobs(store, config)
    for item in missing:
        log.warning("missing snapshot: %s", item)
    rows = [row for chunk in _map(_extract_job, jobs, workers or config.workers) for row in chunk]
    per_repeat = pd.DataFrame(rows, columns=KEY + list(FEATURE_NAMES))
    per_repeat = per_repeat.sort_values(KEY, kind="mergesort").reset_index(drop=True)
    write_frame(store.table("features_repeats.csv"), per_repeat)
    medians = median_features(per_repeat)
    write_frame(store.table("features.csv"), medians)
    return medians


# statistics

STATS_HEADER = ["test", "surrogate", "checkpoint", "feature", "statistic", "p_value", "n",
                "threshold", "significant"]


def _paired(features: pd.DataFrame, surrogate: str, checkpoint: int, name: str):
    sel = features[(features["surrogate"] == surrogate) & (features["checkpoint"] == checkpoint)]
    t = sel[sel["fitness"] == "true"].set_index("problem")[name]
    s = sel[sel["fitness"] == "surrogate"].set_index("problem")[name]
    both = pd.concat([t, s], axis=1, keys=["t", "s"], join="inner").dropna()
    return both["t"].to_numpy(), both["s"].to_numpy()


def _finish(cells: list[list], test: str, alpha: float) -> list[list]:
    """Attach the Bonferroni threshold over the non-missing cells of one test family."""
    valid = [c for c in cells if c[5] is not None]
    threshold = bonferroni_threshold(len(valid), alpha) if valid else None
    for c in cells:
        if c[5] is None:
            c.extend([threshold, None])
        else:
            c.extend([threshold, bool(c[5] <= threshold)])
    return cells


def stats_table(features: pd.DataFrame, config: ExperimentConfig, alpha: float = 0.05) -> pd.DataFrame:
    """Wilcoxon, Spearman and median-difference grids (true vs surrogate) plus the
    static-vs-temporal Mann-Whitney grid."""
    grids: dict[str, list[list]] = {"wilcoxon": [], "spearman": [], "median_diff": [], "mann_whitney": []}
    for kind in config.surrogates:
        for c in config.checkpoints:
            for name in FEATURE_NAMES:
                t, s = _paired(features, kind, c, name)
                n = len(t)
                if n >= 2:
                    w = wilcoxon_signed_rank(t, s)
                    grids["wilcoxon"].append(["wilcoxon", kind, c, name, w.statistic, w.p_value, n])
                else:
                    grids["wilcoxon"].append(["wilcoxon", kind, c, name, None, None, n])
                if n >= 3 and not np.isnan(rho := spearman(t, s)):
                    grids["spearman"].append(["spearman", kind, c, name, rho, spearman_test(t, s).p_value, n])
                else:
                    grids["spearman"].append(["spearman", kind, c, name, None, None, n])
                diff = median_difference_normalized(t, s) if n else None
                grids["median_diff"].append(["median_diff", kind, c, name, diff, None, n])
    static = features[features["surrogate"] == STATIC]
    temporal = features[(features["surrogate"] != STATIC) & (features["fitness"] == "true")]
    for c in config.checkpoints:
        at_c = temporal[temporal["checkpoint"] == c]
        for name in FEATURE_NAMES:
            a = static[name].dropna().to_numpy()
            b = at_c[name].dropna().to_numpy()
            if len(a) and len(b):
                u = mann_whitney_u(a, b)
                grids["mann_whitney"].append(["mann_whitney", STATIC, c, name, u.statistic, u.p_value,
                                              len(a) + len(b)])
            else:
                grids["mann_whitney"].append(["mann_whitney", STATIC, c, name, None, None, len(a) + len(b)])
    rows = []
    for test, cells in grids.items():
        if test == "median_diff":
            rows.extend(c + [None, None] for c in cells)
        else:
            rows.extend(_finish(cells, test, alpha))
    return pd.DataFrame(rows, columns=STATS_HEADER)


def cmd_stats(store: ResultStore, alpha: float = 0.05) -> pd.DataFrame:
    config = store.load_config()
    features = read_csv(store.table("features.csv"))
    table = stats_table(features, config, alpha)
    write_frame(store.table("stats.csv"), table)
    return table


# prediction models

MODELS_HEADER = ["surrogate", "sampling", "mode", "status", "n_rows", "n_candidates", "selected",
                 "provenance", "mean", "median", "se", "report"]
IMPORTANCE_HEADER = ["surrogate", "sampling", "mode", "rank", "feature", "provenance", "median_importance"]


def cmd_predict(store: ResultStore, mode: str = "both") -> tuple[pd.DataFrame, pd.DataFrame]:
    """Fit selection and evaluation for every surrogate and sampling (checkpoints and static)."""
    if mode not in PREDICT_MODES:
        raise ConfigurationError(f"mode must be one of {sorted(PREDICT_MODES)}")
    config = store.load_config()
    features = read_csv(store.table("features.csv"))
    hv_path = store.table("final_hv.csv")
    hv = read_csv(hv_path) if hv_path.exists() else collect_final_hv(store, config)
    problems = [p.id for p in config.problems()]
    mp = config.modelling
    models, importances = [], []
    samplings: list = list(config.checkpoints) + [STATIC]
    for kind in config.surrogates:
        for sampling in samplings:
            ds_mode = PREDICT_MODES[mode]
            if sampling == STATIC:
                if ds_mode == "surrogate_only":
                    continue
                ds_mode = "true_only"
            label = str(sampling)
            try:
                ds = build_datasets(features, hv, kind, ds_mode, sampling, problems)
                seed = derive_seed("predict", config.seed, kind, label, mode)
                rfe = rfe_select(ds, mp.max_features, mp.rfe_iterations, seed, mp.n_trees)
                report = bootstrap_evaluate(ds, rfe.selected, mp.iterations, seed, mp.n_trees)
            except (DegenerateDatasetError, SampleTooSmallError) as exc:
                log.warning("%s/%s excluded: %s", kind, label, exc)
                models.append([kind, label, mode, f"excluded: {exc}", None, None, None, None,
                               None, None, None, None])
                continue
            models.append([kind, label, mode, "ok", ds.n_rows, ds.n_features, ";".join(report.selected),
                           ";".join(report.provenance), report.mean, report.median, report.se,
                           report.formatted()])
            ranked = sorted(report.importance_medians.items(), key=lambda kv: -kv[1])
            for rank, (name, value) in enumerate(ranked, 1):
                importances.append([kind, label, mode, rank, name, ds.provenance_of(name), value])
    models_frame = pd.DataFrame(models, columns=MODELS_HEADER)
    imp_frame = pd.DataFrame(importances, columns=IMPORTANCE_HEADER)
    suffix = "" if mode == "both" else f"_{mode}"
    write_frame(store.table(f"models{suffix}.csv"), models_frame)
    write_frame(store.table(f"importances{suffix}.csv"), imp_frame)
    return models_frame, imp_frame


# report


def cmd_report(store: ResultStore) -> str:
    """Plain-text summary of whatever result tables exist."""
    config = store.load_config()
    lines = [f"problems: {len(config.problems())}  surrogates: "
             f"{', '.join(config.surrogates)}  repeats: {config.repeats}  D: {config.dim}"]
    hv_path = store.table("final_hv.csv")
    if hv_path.exists():
        hv = read_csv(hv_path)
        lines.append("\nmedian final normalised hypervolume")
        table = hv.groupby(["problem", "surrogate"])["final_hv"].median().unstack()
        lines.append(table.to_string(float_format=lambda v: f"{v:.3f}"))
    stats_path = store.table("stats.csv")
    if stats_path.exists():
        stats = read_csv(stats_path)
        lines.append("\nsignificant cells after Bonferroni")
        for test in ("wilcoxon", "spearman", "mann_whitney"):
            sub = stats[stats["test"] == test]
            sig = (sub["significant"].astype(str).str.lower() == "true").sum()
            lines.append(f"  {test}: {sig} of {len(sub)}")
    for suffix in ("", "_surrogate", "_true"):
        path = store.table(f"models{suffix}.csv")
        if path.exists():
            models = read_csv(path)
            ok = models[models["status"] == "ok"]
            lines.append(f"\nprediction models{suffix or ' (both)'}: mean | median (se)")
            if len(ok):
                lines.append(ok.pivot(index="surrogate", columns="sampling", values="report").to_string())
            for _, row in models[models["status"] != "ok"].iterrows():
                lines.append(f"  {row['surrogate']}/{row['sampling']}: {row['status']}")
    text = "\n".join(lines) + "\n"
    store.table("report.txt").write_text(text)
    return text


__all__ = [
    "cmd_features",
    "cmd_predict",
    "cmd_report",
    "cmd_run",
    "cmd_stats",
    "collect_final_hv",
    "median_features",
    "stats_table",
]
