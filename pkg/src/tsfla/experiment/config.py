"""Experiment configuration loaded from a JSON file."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from ..errors import ConfigurationError
from ..features import FeatureParams
from ..problems import BASE_FUNCTIONS, DEFAULT_BASES, build_suite
from ..saea import SaeaConfig
from ..surrogates import SurrogateKind

ALL_SURROGATES = ("knn", "idw", "idwr", "lr_knn", "no_structure")


@dataclass(frozen=True)
class ModellingParams:
    iterations: int = 1000
    rfe_iterations: int = 1000
    max_features: int = 5
    n_trees: int = 500

    def __post_init__(self):
        if min(self.iterations, self.rfe_iterations, self.max_features, self.n_trees) < 1:
            raise ConfigurationError("modelling parameters must be positive")


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything needed to reproduce an experiment from a master seed.

    ``saea`` holds the optimiser settings; its ``seed`` is always overridden
    by the master ``seed``. ``static_factor`` sets the static sample size to
    ``static_factor * dim`` (100 or 200 are the usual presets).
    """

    bases: tuple[str, ...] = DEFAULT_BASES
    dim: int = 5
    same_base_pairs: bool = False
    surrogates: tuple[str, ...] = ALL_SURROGATES
    repeats: int = 15
    seed: int = 0
    output: str = "results"
    workers: int = 1
    static_factor: int = 100
    anchor_samples: int = 10_000
    saea: SaeaConfig = field(default_factory=SaeaConfig)
    features: FeatureParams = field(default_factory=FeatureParams)
    modelling: ModellingParams = field(default_factory=ModellingParams)

    def __post_init__(self):
        object.__setattr__(self, "bases", tuple(self.bases))
        unknown = [b for b in self.bases if b not in BASE_FUNCTIONS]
        if unknown:
            raise ConfigurationError(f"unknown base functions: {unknown}")
        if len(self.bases) < 1 or (len(self.bases) < 2 and not self.same_base_pairs):
            raise ConfigurationError("the suite needs at least two bases (or same_base_pairs)")
        kinds = tuple(SurrogateKind.parse(s).value for s in self.surrogates)
        if len(set(kinds)) != len(kinds):
            raise ConfigurationError("duplicate surrogates")
        object.__setattr__(self, "surrogates", kinds)
        if self.dim < 1 or self.repeats < 1 or self.workers < 1:
            raise ConfigurationError("dim, repeats and workers must be positive")
        if self.static_factor < 1:
            raise ConfigurationError("static_factor must be positive")
        if self.saea.seed != self.seed:
            object.__setattr__(self, "saea", SaeaConfig(**{**self.saea.to_dict(), "seed": self.seed}))

    @property
    def checkpoints(self) -> tuple[int, ...]:
        return self.saea.checkpoints

    @property
    def static_size(self) -> int:
        return self.static_factor * self.dim

    def problems(self):
        return build_suite(self.bases, self.dim, seed=self.seed, same_base_pairs=self.same_base_pairs)

    def to_dict(self) -> dict:
        data = asdict(self)
        data["bases"] = list(self.bases)
        data["surrogates"] = list(self.surrogates)
        data["saea"] = self.saea.to_dict()
        return data

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        data = dict(data)
        known = {f.name for f in fields(cls)}
        extra = set(data) - known
        if extra:
            raise ConfigurationError(f"unknown configuration keys: {sorted(extra)}")
        if "seed" not in data:
            raise ConfigurationError("configuration must set a master seed")
        nested = {"saea": SaeaConfig, "features": FeatureParams, "modelling": ModellingParams}
        for key, kind in nested.items():
            if key in data:
                sub = dict(data[key])
                allowed = {f.name for f in fields(kind)}
                bad = set(sub) - allowed
                if bad:
                    raise ConfigurationError(f"unknown {key} keys: {sorted(bad)}")
                if key == "saea" and "checkpoints" in sub:
                    sub["checkpoints"] = tuple(sub["checkpoints"])
                try:
                    data[key] = kind(**sub)
                except (TypeError, ValueError) as exc:
                    raise ConfigurationError(f"invalid {key} section: {exc}") from exc
        return cls(**data)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        try:
            data = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"{path}: not valid JSON ({exc})") from exc
        return cls.from_dict(data)

    def dump(self, path):
        Path(path).write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n")
