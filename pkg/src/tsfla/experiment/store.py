"""On-disk result store.

Layout under the store root::

    manifest.json                    config echo and code version
    problems/<problem>.json          ideal/nadir anchors
    runs/<problem>/<surrogate>/<repeat>/
        archive.csv  hv.csv  snapshot_<fe>.csv  manifest.json
    static/<problem>/
        snapshot_0.csv  manifest.json
    final_hv.csv  features_repeats.csv  features.csv  stats.csv
    models.csv  importances.csv  report.txt

A unit directory counts as complete once its ``manifest.json`` exists; it is
written last. All CSV files are comma-separated with one header row, floats
written with ``%.17g`` and missing values as empty cells.
"""

from __future__ import annotations

import csv
import json
import math
import shutil
from pathlib import Path

import numpy as np
import pandas as pd

from .. import __version__
from ..errors import ConfigurationError
from ..problems import ProblemManifest
from ..saea import RunLog, SampleSnapshot
from .config import ExperimentConfig

STATIC = "static"


def format_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        v = float(value)
        return "" if math.isnan(v) else "%.17g" % v
    return str(value)


def write_csv(path, header, rows) -> None:
    """Write rows with the store's cell encoding; replaces the file atomically."""
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    with tmp.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_cell(v) for v in row])
    tmp.replace(path)


def write_frame(path, frame: pd.DataFrame) -> None:
    write_csv(path, list(frame.columns), frame.itertuples(index=False, name=None))


def read_csv(path) -> pd.DataFrame:
    """Load a result table; empty cells become NaN and floats round-trip exactly."""
    return pd.read_csv(path, keep_default_na=False, na_values=[""], float_precision="round_trip",
                       dtype={"problem": str, "surrogate": str})


def _write_json(path, data) -> None:
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")
    tmp.replace(path)


def _comparable(config: dict) -> dict:
    # worker count and output path do not affect results
    return {k: v for k, v in config.items() if k not in ("workers", "output")}


class ResultStore:
    def __init__(self, root):
        self.root = Path(root)

    # paths

    @property
    def manifest_path(self) -> Path:
        return self.root / "manifest.json"

    def problem_path(self, problem_id: str) -> Path:
        return self.root / "problems" / f"{problem_id}.json"

    def run_dir(self, problem_id: str, surrogate: str, repeat: int) -> Path:
        return self.root / "runs" / problem_id / surrogate / str(repeat)

    def static_dir(self, problem_id: str) -> Path:
        return self.root / STATIC / problem_id

    def table(self, name: str) -> Path:
        return self.root / name

    # store-level manifest

    def initialise(self, config: ExperimentConfig, resume: bool) -> None:
        """Create the store, or check that an existing one matches ``config``."""
        try:
            self.root.mkdir(parents=True, exist_ok=True)
            probe = self.root / ".write-test"
            probe.write_text("")
            probe.unlink()
        except OSError as exc:
            raise ConfigurationError(f"output directory {self.root} is not writable: {exc}") from exc
        # only settings that affect results are recorded, so stores are byte-comparable
        wanted = {"config": _comparable(config.to_dict()), "version": __version__}
        if self.manifest_path.exists():
            existing = json.loads(self.manifest_path.read_text())
            if not resume:
                raise ConfigurationError(f"{self.root} already holds results; pass --resume to continue")
            if _comparable(existing.get("config", {})) != _comparable(wanted["config"]):
                raise ConfigurationError(f"{self.root} was created with a different configuration")
        elif any(self.root.iterdir()):
            raise ConfigurationError(f"{self.root} is not empty and has no manifest")
        _write_json(self.manifest_path, wanted)

    def load_config(self) -> ExperimentConfig:
        if not self.manifest_path.exists():
            raise ConfigurationError(f"{self.root} has no manifest.json; run the experiment first")
        return ExperimentConfig.from_dict(json.loads(self.manifest_path.read_text())["config"])

    # units

    @staticmethod
    def is_complete(unit_dir: Path) -> bool:
        return (unit_dir / "manifest.json").exists()

    @staticmethod
    def clear(unit_dir: Path) -> None:
        if unit_dir.exists():
            shutil.rmtree(unit_dir)

    def save_anchors(self, manifest: ProblemManifest) -> None:
        path = self.problem_path(manifest.problem_id)
        path.parent.mkdir(parents=True, exist_ok=True)
        manifest.save(path)

    def load_anchors(self, problem_id: str) -> ProblemManifest:
        return ProblemManifest.load(self.problem_path(problem_id))

    def save_run(self, log: RunLog, extra: dict) -> Path:
        d = self.run_dir(log.problem_id, log.surrogate_kind, log.repeat)
        self.clear(d)
        d.mkdir(parents=True)
        key = (log.problem_id, log.surrogate_kind, log.repeat)
        dim = log.archive_x.shape[1]
        write_csv(
            d / "archive.csv",
            ["problem", "surrogate", "repeat", "fe"] + [f"x{i + 1}" for i in range(dim)] + ["f1", "f2"],
            (key + (i + 1, *x, *f) for i, (x, f) in enumerate(zip(log.archive_x, log.archive_f))),
        )
        write_csv(
            d / "hv.csv",
            ["problem", "surrogate", "repeat", "fe", "hv"],
            (key + (int(fe), hv) for fe, hv in log.hv),
        )
        for fe, snap in sorted(log.snapshots.items()):
            self._save_snapshot(d / f"snapshot_{fe}.csv", snap, log.surrogate_kind)
        _write_json(d / "manifest.json", {
            "problem": log.problem_id,
            "surrogate": log.surrogate_kind,
            "repeat": log.repeat,
            "seed": log.seed,
            "evaluations": len(log.archive_x),
            "final_hv": log.final_hypervolume,
            "checkpoints": sorted(log.snapshots),
            "sampling_true_evals": log.sampling_true_evals,
            "version": __version__,
            **extra,
        })
        return d

    def save_static(self, snap: SampleSnapshot, seed: int) -> Path:
        d = self.static_dir(snap.problem_id)
        self.clear(d)
        d.mkdir(parents=True)
        self._save_snapshot(d / "snapshot_0.csv", snap, STATIC)
        _write_json(d / "manifest.json", {
            "problem": snap.problem_id, "size": len(snap), "seed": seed, "version": __version__,
        })
        return d

    @staticmethod
    def _save_snapshot(path: Path, snap: SampleSnapshot, surrogate: str) -> None:
        dim = snap.x.shape[1]
        key = (snap.problem_id, surrogate, snap.repeat, snap.checkpoint_fe)
        surr = snap.f_surrogate if snap.f_surrogate is not None else np.full((len(snap), 2), np.nan)
        write_csv(
            path,
            ["problem", "surrogate", "repeat", "checkpoint"] + [f"x{i + 1}" for i in range(dim)]
            + ["f1_true", "f2_true", "f1_surr", "f2_surr"],
            (key + (*x, *ft, *fs) for x, ft, fs in zip(snap.x, snap.f_true, surr)),
        )

    @staticmethod
    def load_snapshot(path: Path) -> SampleSnapshot:
        frame = read_csv(path)
        xcols = [c for c in frame.columns if c.startswith("x")]
        surr = frame[["f1_surr", "f2_surr"]].to_numpy(dtype=float)
        surrogate = str(frame["surrogate"].iloc[0]) if len(frame) else None
        has_surr = len(frame) > 0 and not np.isnan(surr).all()
        return SampleSnapshot(
            int(frame["checkpoint"].iloc[0]) if len(frame) else 0,
            frame[xcols].to_numpy(dtype=float),
            frame[["f1_true", "f2_true"]].to_numpy(dtype=float),
            surr if has_surr else None,
            surrogate if has_surr else None,
            str(frame["problem"].iloc[0]) if len(frame) else "",
            int(frame["repeat"].iloc[0]) if len(frame) else 0,
        )

    def run_manifest(self, problem_id: str, surrogate: str, repeat: int) -> dict:
        return json.loads((self.run_dir(problem_id, surrogate, repeat) / "manifest.json").read_text())

    def load_hv(self, problem_id: str, surrogate: str, repeat: int) -> pd.DataFrame:
        return read_csv(self.run_dir(problem_id, surrogate, repeat) / "hv.csv")
