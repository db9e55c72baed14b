"""Bi-objective benchmark problems built from shifted single-objective bases.

Every base function attains its minimum value 0 at its shift vector. A
bi-objective problem pairs two bases with independent shifts, so the two
optima sit at different points of the box and the objectives conflict.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Callable

import numpy as np

from ._seeding import make_rng
from .errors import ConfigurationError, EmptySampleError, FlatObjectiveError
from .pareto import nondominated_mask

SHIFT_RANGE = 80.0
DEFAULT_BASES = ("sphere", "ellipsoid", "rastrigin", "rosenbrock")


@dataclass(frozen=True)
class BoundedSpace:
    dim: int
    lower: np.ndarray = field(default=None)
    upper: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.dim < 1:
            raise ConfigurationError(f"dimension must be positive, got {self.dim}")
        lower = np.full(self.dim, -100.0) if self.lower is None else np.asarray(self.lower, float)
        upper = np.full(self.dim, 100.0) if self.upper is None else np.asarray(self.upper, float)
        lower = np.broadcast_to(lower, (self.dim,)).copy()
        upper = np.broadcast_to(upper, (self.dim,)).copy()
        if not np.all(lower < upper):
            raise ConfigurationError("every lower bound must be below its upper bound")
        lower.flags.writeable = False
        upper.flags.writeable = False
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    def contains(self, x) -> bool:
        x = np.asarray(x)
        return bool(np.all(x >= self.lower) and np.all(x <= self.upper))

    def clip(self, x) -> np.ndarray:
        return np.clip(x, self.lower, self.upper)


# Base functions take z = x - shift with shape (n, D) and return (n,).

def _sphere(z):
    return np.sum(z * z, axis=1)


def _powers(d, top):
    if d == 1:
        return np.zeros(1)
    return np.arange(d) / (d - 1) * top


def _ellipsoid(z):
    return np.sum(10.0 ** _powers(z.shape[1], 6.0) * z * z, axis=1)


def _rastrigin(z):
    d = z.shape[1]
    return 10.0 * d + np.sum(z * z - 10.0 * np.cos(2.0 * np.pi * z), axis=1)


def _rosenbrock(z):
    # standard form has its optimum at 1, so move it onto the shift
    y = z + 1.0
    if y.shape[1] == 1:
        return (y[:, 0] - 1.0) ** 2
    return np.sum(100.0 * (y[:, 1:] - y[:, :-1] ** 2) ** 2 + (y[:, :-1] - 1.0) ** 2, axis=1)


def _discus(z):
    return 1e6 * z[:, 0] ** 2 + np.sum(z[:, 1:] ** 2, axis=1)


def _bent_cigar(z):
    return z[:, 0] ** 2 + 1e6 * np.sum(z[:, 1:] ** 2, axis=1)


def _different_powers(z):
    return np.sum(np.abs(z) ** (2.0 + _powers(z.shape[1], 4.0)), axis=1)


def _sharp_ridge(z):
    return z[:, 0] ** 2 + 100.0 * np.sqrt(np.sum(z[:, 1:] ** 2, axis=1))


def _schwefel12(z):
    return np.sum(np.cumsum(z, axis=1) ** 2, axis=1)


def _griewank(z):
    i = np.sqrt(np.arange(1, z.shape[1] + 1))
    return 1.0 + np.sum(z * z, axis=1) / 4000.0 - np.prod(np.cos(z / i), axis=1)


BASE_FUNCTIONS: dict[str, Callable[[np.ndarray], np.ndarray]] = {
    "sphere": _sphere,
    "ellipsoid": _ellipsoid,
    "rastrigin": _rastrigin,
    "rosenbrock": _rosenbrock,
    "discus": _discus,
    "bent_cigar": _bent_cigar,
    "different_powers": _different_powers,
    "sharp_ridge": _sharp_ridge,
    "schwefel12": _schwefel12,
    "griewank": _griewank,
}


@dataclass(frozen=True)
class ShiftedBase:
    """A single-objective base function whose optimum (value 0) is ``shift``."""

    name: str
    shift: np.ndarray

    def __call__(self, x) -> np.ndarray | float:
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        z = np.atleast_2d(x) - self.shift
        values = BASE_FUNCTIONS[self.name](z)
        return float(values[0]) if single else values


def make_base(name: str, dim: int, suite_seed: int, instance: int = 0) -> ShiftedBase:
    if name not in BASE_FUNCTIONS:
        raise ConfigurationError(f"unknown base function id: {name!r}")
    rng = make_rng("shift", suite_seed, name, dim, instance)
    shift = rng.uniform(-SHIFT_RANGE, SHIFT_RANGE, size=dim)
    shift.flags.writeable = False
    return ShiftedBase(name, shift)


@dataclass(frozen=True)
class BiObjectiveProblem:
    id: str
    space: BoundedSpace
    objective_a: ShiftedBase
    objective_b: ShiftedBase
    ideal: np.ndarray | None = None
    nadir: np.ndarray | None = None

    @property
    def dim(self) -> int:
        return self.space.dim

    def evaluate(self, x) -> np.ndarray:
        """Objective pairs for one vector (shape (2,)) or a batch (shape (n, 2))."""
        x = np.asarray(x, dtype=float)
        batch = np.atleast_2d(x)
        out = np.column_stack([self.objective_a(batch), self.objective_b(batch)])
        return out[0] if x.ndim == 1 else out

    def with_anchors(self, manifest: "ProblemManifest") -> "BiObjectiveProblem":
        if manifest.problem_id != self.id:
            raise ConfigurationError(
                f"manifest for {manifest.problem_id!r} does not match problem {self.id!r}"
            )
        return replace(self, ideal=np.asarray(manifest.ideal), nadir=np.asarray(manifest.nadir))


def build_suite(
    base_function_ids,
    dim: int,
    seed: int = 1,
    same_base_pairs: bool = False,
    lower: float = -100.0,
    upper: float = 100.0,
) -> list[BiObjectiveProblem]:
    """Pair every two distinct bases into one bi-objective problem.

    With ``same_base_pairs`` each base is additionally paired with a second,
    independently shifted copy of itself.
    """
    ids = sorted(set(base_function_ids))
    if len(ids) < 2 and not (same_base_pairs and ids):
        raise ConfigurationError("at least two base function ids are required")
    for name in ids:
        if name not in BASE_FUNCTIONS:
            raise ConfigurationError(f"unknown base function id: {name!r}")
    space = BoundedSpace(dim, np.full(dim, lower), np.full(dim, upper))
    pairs = list(itertools.combinations(ids, 2))
    if same_base_pairs:
        pairs += [(name, name) for name in ids]
    problems = []
    for a, b in pairs:
        base_a = make_base(a, dim, seed, 0)
        base_b = make_base(b, dim, seed, 1 if a == b else 0)
        problems.append(BiObjectiveProblem(f"{a}__{b}", space, base_a, base_b))
    return sorted(problems, key=lambda p: p.id)


def latin_hypercube(space: BoundedSpace, n: int, seed) -> np.ndarray:
    """Latin hypercube sample of ``n`` points with one point per bin in every dimension."""
    if n < 1:
        raise EmptySampleError("a Latin hypercube needs at least one point")
    rng = seed if isinstance(seed, np.random.Generator) else make_rng("lhs", seed)
    d = space.dim
    bins = np.argsort(rng.random((n, d)), axis=0)
    unit = (bins + rng.random((n, d))) / n
    return space.lower + unit * (space.upper - space.lower)


@dataclass(frozen=True)
class ProblemManifest:
    problem_id: str
    ideal: tuple[float, float]
    nadir: tuple[float, float]
    n: int
    seed: int

    def to_json(self) -> str:
        data = asdict(self)
        data["ideal"] = list(self.ideal)
        data["nadir"] = list(self.nadir)
        return json.dumps(data, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "ProblemManifest":
        data = json.loads(text)
        return cls(
            data["problem_id"],
            tuple(float(v) for v in data["ideal"]),
            tuple(float(v) for v in data["nadir"]),
            int(data["n"]),
            int(data["seed"]),
        )

    def save(self, path) -> None:
        Path(path).write_text(self.to_json() + "\n")

    @classmethod
    def load(cls, path) -> "ProblemManifest":
        return cls.from_json(Path(path).read_text())


def anchors_from_values(values) -> tuple[np.ndarray, np.ndarray]:
    """Ideal = componentwise min; nadir = componentwise max over the non-dominated subset."""
    values = np.asarray(values, dtype=float)
    if len(values) == 0:
        raise EmptySampleError("no objective values to estimate anchors from")
    if np.all(values == values[0]):
        raise FlatObjectiveError("all sampled objective values are identical")
    ideal = values.min(axis=0)
    nadir = values[nondominated_mask(values)].max(axis=0)
    return ideal, nadir


def estimate_anchors(problem: BiObjectiveProblem, n: int = 10_000, seed: int = 0) -> ProblemManifest:
    if n < 100:
        raise ConfigurationError(f"anchor estimation needs n >= 100, got {n}")
    x = latin_hypercube(problem.space, n, make_rng("anchors", seed, problem.id))
    x = np.vstack([x, problem.objective_a.shift, problem.objective_b.shift])
    ideal, nadir = anchors_from_values(problem.evaluate(x))
    return ProblemManifest(
        problem.id,
        (float(ideal[0]), float(ideal[1])),
        (float(nadir[0]), float(nadir[1])),
        n,
        seed,
    )
