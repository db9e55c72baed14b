"""Surrogate-assisted bi-objective optimisation with temporal landscape sampling."""

from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from ._seeding import derive_seed, make_rng
from .errors import ConfigurationError
from .metrics import hypervolume_2d
from .moea import ALPHA, Population, run_rvea
from .pareto import nondominated_sort
from .problems import BiObjectiveProblem, latin_hypercube
from .surrogates import DEDUP_TOL, Archive, SurrogateKind, SurrogateModel

DEFAULT_CHECKPOINTS = (256, 1280, 1792, 8192)


@dataclass(frozen=True)
class SaeaConfig:
    n_init: int = 32
    fe_max_true: int = 8192
    fe_max_surrogate: int = 2000
    mu: int = 1
    pop_size: int = 32
    checkpoints: tuple[int, ...] = DEFAULT_CHECKPOINTS
    sample_budget: int = 2000
    seed: int = 0
    lr_knn_k: int = 32
    alpha: float = ALPHA
    # keep the APD generation counter running across cycles instead of resetting it
    global_generation_counter: bool = False

    def __post_init__(self):
        object.__setattr__(self, "checkpoints", tuple(int(c) for c in self.checkpoints))
        if self.mu < 1:
            raise ConfigurationError("mu must be at least 1")
        if self.n_init < 1 or self.pop_size < 2:
            raise ConfigurationError("n_init must be >= 1 and pop_size >= 2")
        if self.n_init > self.fe_max_true:
            raise ConfigurationError("n_init exceeds fe_max_true")
        if self.fe_max_surrogate < 1:
            raise ConfigurationError("fe_max_surrogate must be positive")
        if self.sample_budget < 1:
            raise ConfigurationError("sample_budget must be positive")
        if list(self.checkpoints) != sorted(set(self.checkpoints)):
            raise ConfigurationError("checkpoints must be strictly ascending")
        for c in self.checkpoints:
            if not self.n_init <= c <= self.fe_max_true:
                raise ConfigurationError(
                    f"checkpoint {c} outside [{self.n_init}, {self.fe_max_true}]"
                )

    def to_dict(self) -> dict:
        data = asdict(self)
        data["checkpoints"] = list(self.checkpoints)
        return data


@dataclass
class SampleSnapshot:
    checkpoint_fe: int
    x: np.ndarray
    f_true: np.ndarray
    f_surrogate: np.ndarray | None
    surrogate_kind: str | None
    problem_id: str
    repeat: int = 0

    def __len__(self):
        return len(self.x)

    def fitness(self, kind: str) -> np.ndarray:
        if kind == "true":
            return self.f_true
        if kind == "surrogate":
            if self.f_surrogate is None:
                raise ConfigurationError("snapshot has no surrogate fitness columns")
            return self.f_surrogate
        raise ConfigurationError(f"unknown fitness kind: {kind!r}")


@dataclass
class RunLog:
    problem_id: str
    surrogate_kind: str
    repeat: int
    seed: int
    archive_x: np.ndarray
    archive_f: np.ndarray
    hv: np.ndarray  # (n_evals, 2): fe index, normalised hypervolume
    snapshots: dict[int, SampleSnapshot] = field(default_factory=dict)
    wall_time: float = 0.0
    sampling_true_evals: int = 0

    @property
    def fe_index(self) -> np.ndarray:
        return np.arange(1, len(self.archive_x) + 1)

    @property
    def final_hypervolume(self) -> float:
        return float(self.hv[-1, 1]) if len(self.hv) else 0.0


def unique_rows(x, tol: float = DEDUP_TOL) -> np.ndarray:
    """Indices of rows kept after dropping later near-copies (componentwise within ``tol``)."""
    x = np.asarray(x, dtype=float)
    if len(x) == 0:
        return np.zeros(0, dtype=int)
    pairs = cKDTree(x).query_pairs(tol, p=np.inf, output_type="ndarray")
    drop = np.zeros(len(x), dtype=bool)
    if len(pairs):
        drop[pairs.max(axis=1)] = True
    return np.flatnonzero(~drop)


def sample_vicinity(
    population: Population,
    surrogate: SurrogateModel,
    problem: BiObjectiveProblem,
    budget: int,
    rng,
    pop_size: int | None = None,
    alpha: float = ALPHA,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Sample the neighbourhood of ``population`` with the optimiser's own operators.

    The population is evolved on the surrogate until ``budget`` offspring
    have been generated; every offspring is kept, evaluated with the true
    function as well, and exact duplicates are removed. Nothing here feeds
    back into the optimisation state.

    Returns:
        (x, f_true, f_surrogate) for the deduplicated sample.
    """
    if budget < 1:
        raise ConfigurationError("vicinity sampling needs a positive budget")
    if len(population) == 0:
        raise ConfigurationError("cannot sample around an empty population")
    start = Population(population.x, surrogate.predict(population.x))
    result = run_rvea(
        start,
        surrogate.predict,
        budget,
        rng,
        problem.space.lower,
        problem.space.upper,
        pop_size=pop_size or len(population),
        alpha=alpha,
    )
    keep = unique_rows(result.offspring_x)
    x = result.offspring_x[keep]
    return x, problem.evaluate(x), result.offspring_f[keep]


def run_static_sample(problem: BiObjectiveProblem, size: int | None = None, seed=0) -> SampleSnapshot:
    """Latin hypercube sample evaluated with the true function only (100·D points by default)."""
    if size is None:
        size = 100 * problem.dim
    if size < 2:
        raise ConfigurationError("a static sample needs at least two points")
    x = latin_hypercube(problem.space, size, make_rng("static", seed, problem.id))
    return SampleSnapshot(0, x, problem.evaluate(x), None, None, problem.id, 0)


class _HypervolumeTracker:
    """Normalised hypervolume of a growing archive, updated per insertion."""

    def __init__(self, ideal, nadir):
        self.ideal = np.asarray(ideal, dtype=float)
        self.span = np.asarray(nadir, dtype=float) - self.ideal
        if not np.all(self.span > 0):
            raise ConfigurationError("problem anchors are degenerate (nadir <= ideal)")
        self.front = np.zeros((0, 2))
        self.value = 0.0

    def add(self, f) -> float:
        g = np.clip((np.asarray(f, dtype=float) - self.ideal) / self.span, 0.0, 1.0)
        if np.all(g < 1.0):
            dominated = np.any(np.all(self.front <= g, axis=1))
            if not dominated:
                worse = np.all(g <= self.front, axis=1)
                self.front = np.vstack([self.front[~worse], g])
                self.value = hypervolume_2d(self.front)
        return self.value


def run_seed(seed: int, problem_id: str, kind, repeat: int) -> int:
    return derive_seed("run", seed, problem_id, SurrogateKind.parse(kind).value, repeat)


def run_saea(problem: BiObjectiveProblem, surrogate_kind, config: SaeaConfig, repeat: int = 0) -> RunLog:
    """One surrogate-assisted optimisation run with snapshots at the configured checkpoints.

    Each cycle rebuilds the surrogate on the archive, optimises it with RVEA
    starting from the archived solutions, keeps the better half of the
    cycle's offspring by non-dominated rank on surrogate fitness, and truly
    evaluates ``mu`` of those drawn uniformly at random.
    """
    if problem.ideal is None or problem.nadir is None:
        raise ConfigurationError(f"problem {problem.id!r} has no ideal/nadir anchors")
    kind = SurrogateKind.parse(surrogate_kind)
    cfg = config
    started = time.perf_counter()
    seed = run_seed(cfg.seed, problem.id, kind, repeat)
    rng = make_rng(seed, "optimise")
    lower, upper = problem.space.lower, problem.space.upper

    archive = Archive(problem.dim, capacity=cfg.fe_max_true)
    tracker = _HypervolumeTracker(problem.ideal, problem.nadir)
    hv_rows: list[tuple[int, float]] = []

    def true_eval(x):
        f = problem.evaluate(x)
        archive.add(x, f)
        hv_rows.append((len(archive), tracker.add(f)))

    x0 = latin_hypercube(problem.space, cfg.n_init, rng)
    for x in x0:
        true_eval(x)
    population = Population(archive.x.copy(), archive.y.copy(), 0)
    snapshots: dict[int, SampleSnapshot] = {}
    sampling_evals = 0

    def maybe_snapshot():
        nonlocal sampling_evals
        fe = len(archive)
        for c in cfg.checkpoints:
            if c == fe and c not in snapshots:
                model = SurrogateModel.build(kind, archive, cfg.lr_knn_k, make_rng(seed, "snapshot-model", c))
                x, f_true, f_surr = sample_vicinity(
                    population, model, problem, cfg.sample_budget,
                    make_rng(seed, "vicinity", c), cfg.pop_size, cfg.alpha,
                )
                sampling_evals += len(x)
                snapshots[c] = SampleSnapshot(c, x, f_true, f_surr, kind.value, problem.id, repeat)

    maybe_snapshot()
    cycle = 0
    per_cycle_gens = math.ceil(cfg.fe_max_surrogate / (cfg.pop_size + cfg.pop_size % 2))
    total_cycles = math.ceil((cfg.fe_max_true - cfg.n_init) / cfg.mu)
    while len(archive) < cfg.fe_max_true:
        model = SurrogateModel.build(kind, archive, cfg.lr_knn_k, make_rng(seed, "model", cycle))
        start = Population(archive.x, archive.y)
        if cfg.global_generation_counter:
            t_offset, t_max = cycle * per_cycle_gens, total_cycles * per_cycle_gens
        else:
            t_offset, t_max = 0, None
        result = run_rvea(
            start, model.predict, cfg.fe_max_surrogate, rng, lower, upper,
            pop_size=cfg.pop_size, alpha=cfg.alpha, t_offset=t_offset, t_max=t_max,
        )
        population = result.population
        pool_x, pool_f = result.offspring_x, result.offspring_f
        ranks = nondominated_sort(pool_f)
        n_keep = math.ceil(len(pool_x) / 2)
        kept = np.lexsort((rng.random(len(ranks)), ranks))[:n_keep]
        n_new = min(cfg.mu, cfg.fe_max_true - len(archive))
        for idx in rng.permutation(kept):
            if n_new == 0:
                break
            if archive.contains(pool_x[idx]):
                continue
            true_eval(pool_x[idx])
            n_new -= 1
            maybe_snapshot()
        while n_new > 0:
            # every kept candidate was already archived; fall back to a random point
            x = rng.uniform(lower, upper)
            if not archive.contains(x):
                true_eval(x)
                n_new -= 1
                maybe_snapshot()
        cycle += 1

    return RunLog(
        problem.id,
        kind.value,
        repeat,
        seed,
        archive.x.copy(),
        archive.y.copy(),
        np.array(hv_rows, dtype=float),
        snapshots,
        time.perf_counter() - started,
        sampling_evals,
    )
