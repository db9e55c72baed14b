"""Reference-vector guided evolution (RVEA) for two objectives.

Selection uses the angle-penalised distance (APD); variation is simulated
binary crossover followed by polynomial mutation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numba
import numpy as np

from .errors import ConfigurationError
from .pareto import nondominated_sort  # noqa: F401  re-exported

N_OBJ = 2
ETA_C = 20.0
ETA_M = 20.0
ALPHA = 1e6
# floor for the nearest-neighbour angle of a reference vector; adapted vectors
# collapse onto each other when the objective ranges differ by many orders of magnitude
MIN_GAMMA = 1e-12


@dataclass(frozen=True)
class Population:
    x: np.ndarray
    f: np.ndarray
    generation: int = 0

    def __len__(self):
        return len(self.x)


@dataclass(frozen=True)
class ReferenceVectorSet:
    vectors: np.ndarray
    gamma: np.ndarray
    base_vectors: np.ndarray

    def __len__(self):
        return len(self.vectors)


@dataclass(frozen=True)
class ApdContext:
    t: int
    t_max: int
    z_min: np.ndarray | None = None
    alpha: float = ALPHA

    def __post_init__(self):
        if not 0 <= self.t <= self.t_max:
            raise ConfigurationError(f"generation {self.t} outside [0, {self.t_max}]")
        if self.alpha <= 0:
            raise ConfigurationError("alpha must be positive")

    @property
    def penalty_scale(self) -> float:
        """M * (t / t_max) ** alpha."""
        if self.t_max == 0:
            return 0.0
        return N_OBJ * (self.t / self.t_max) ** self.alpha


def _min_angles(vectors: np.ndarray) -> np.ndarray:
    cos = np.clip(vectors @ vectors.T, -1.0, 1.0)
    np.fill_diagonal(cos, -np.inf)
    return np.maximum(np.arccos(np.clip(cos.max(axis=1), -1.0, 1.0)), MIN_GAMMA)


def generate_reference_vectors(count: int) -> ReferenceVectorSet:
    """Unit vectors through the simplex lattice {(i/H, 1 - i/H)}, H = count - 1."""
    if count < 2:
        raise ConfigurationError("at least two reference vectors are required")
    h = count - 1
    i = np.arange(count)
    lattice = np.column_stack([i / h, 1.0 - i / h])
    vectors = lattice / np.linalg.norm(lattice, axis=1, keepdims=True)
    return ReferenceVectorSet(vectors, _min_angles(vectors), vectors.copy())


def adapt_reference_vectors(rvs: ReferenceVectorSet, z_min, z_max) -> ReferenceVectorSet:
    """Rescale the initial vectors to the current objective ranges."""
    span = np.asarray(z_max, dtype=float) - np.asarray(z_min, dtype=float)
    if not np.all(span > 0) or not np.all(np.isfinite(span)):
        return rvs
    scaled = rvs.base_vectors * span
    vectors = scaled / np.linalg.norm(scaled, axis=1, keepdims=True)
    return ReferenceVectorSet(vectors, _min_angles(vectors), rvs.base_vectors)


def apd_values(f, rvs: ReferenceVectorSet, ctx: ApdContext):
    """Assigned vector, angle and APD for every member.

    Returns:
        (assignment, theta, apd) arrays of length m.
    """
    f = np.asarray(f, dtype=float)
    z_min = f.min(axis=0) if ctx.z_min is None else np.asarray(ctx.z_min)
    shifted = f - z_min
    norm = np.linalg.norm(shifted, axis=1)
    safe = np.where(norm > 0, norm, 1.0)
    cos = (shifted @ rvs.vectors.T) / safe[:, None]
    # a member sitting on the ideal point has no direction; treat it as aligned
    cos[norm == 0] = 1.0
    cos = np.clip(cos, -1.0, 1.0)
    assignment = np.argmax(cos, axis=1)
    theta = np.arccos(cos[np.arange(len(f)), assignment])
    gamma = rvs.gamma[assignment]
    apd = (1.0 + ctx.penalty_scale * theta / gamma) * norm
    return assignment, theta, apd


@numba.njit(cache=True)
def _apd_kernel(f, z, vectors, gamma, penalty_scale, fill_to):
    m = f.shape[0]
    nv = vectors.shape[0]
    z0 = z[0]
    z1 = z[1]
    apd = np.empty(m)
    assign = np.empty(m, dtype=np.int64)
    for i in range(m):
        a = f[i, 0] - z0
        b = f[i, 1] - z1
        norm = np.sqrt(a * a + b * b)
        best = 0
        best_cos = -2.0
        for v in range(nv):
            c = 1.0 if norm == 0.0 else (a * vectors[v, 0] + b * vectors[v, 1]) / norm
            c = min(1.0, max(-1.0, c))
            if c > best_cos:
                best_cos = c
                best = v
        assign[i] = best
        apd[i] = (1.0 + penalty_scale * np.arccos(best_cos) / gamma[best]) * norm
    winner = np.full(nv, -1, dtype=np.int64)
    for i in range(m):
        v = assign[i]
        if winner[v] < 0 or apd[i] < apd[winner[v]]:
            winner[v] = i
    taken = np.zeros(m, dtype=np.bool_)
    chosen = []
    for v in range(nv):
        if winner[v] >= 0:
            chosen.append(winner[v])
            taken[winner[v]] = True
    if fill_to > len(chosen):
        for i in np.argsort(apd, kind="mergesort"):
            if len(chosen) >= fill_to:
                break
            if not taken[i]:
                chosen.append(i)
    out = np.empty(len(chosen), dtype=np.int64)
    for j in range(len(chosen)):
        out[j] = chosen[j]
    return out


def apd_select_indices(f, rvs: ReferenceVectorSet, ctx: ApdContext, fill_to: int | None = None):
    """Indices of the members kept by APD selection.

    One member (the APD minimiser, lowest index on ties) per non-empty
    subpopulation, ordered by reference vector. With ``fill_to`` the
    remaining slots go to the best-APD unselected members.
    """
    f = np.ascontiguousarray(f, dtype=float)
    z = f.min(axis=0) if ctx.z_min is None else np.asarray(ctx.z_min, dtype=float)
    return _apd_kernel(f, z, rvs.vectors, rvs.gamma, ctx.penalty_scale, -1 if fill_to is None else fill_to)


def apd_select(population: Population, rvs: ReferenceVectorSet, ctx: ApdContext) -> Population:
    idx = apd_select_indices(population.f, rvs, ctx)
    return Population(population.x[idx], population.f[idx], population.generation)


def sbx_crossover(p1, p2, eta_c: float, rng, lower=None, upper=None, var_prob: float = 0.5):
    """Simulated binary crossover of two parents (or two aligned batches of parents)."""
    p1 = np.asarray(p1, dtype=float)
    p2 = np.asarray(p2, dtype=float)
    u = rng.random(p1.shape)
    exponent = 1.0 / (eta_c + 1.0)
    beta = np.where(u <= 0.5, (2.0 * u) ** exponent, (1.0 / (2.0 * (1.0 - u))) ** exponent)
    beta = np.where(rng.random(p1.shape) < var_prob, beta, 1.0)
    c1 = 0.5 * ((1.0 + beta) * p1 + (1.0 - beta) * p2)
    c2 = 0.5 * ((1.0 - beta) * p1 + (1.0 + beta) * p2)
    if lower is not None:
        c1 = np.clip(c1, lower, upper)
        c2 = np.clip(c2, lower, upper)
    return c1, c2


def polynomial_mutation(x, eta_m: float, p_m: float, rng, lower, upper) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    u = rng.random(x.shape)
    mutate = rng.random(x.shape) < p_m
    exponent = 1.0 / (eta_m + 1.0)
    delta = np.where(u < 0.5, (2.0 * u) ** exponent - 1.0, 1.0 - (2.0 * (1.0 - u)) ** exponent)
    return np.clip(np.where(mutate, x + delta * (upper - lower), x), lower, upper)


def make_offspring(parents_x, rng, lower, upper, eta_c=ETA_C, eta_m=ETA_M, p_m=None):
    """Random mating, SBX on every pair, then polynomial mutation.

    Produces as many offspring as there are parents (rounded up to even).
    """
    n, d = parents_x.shape
    if p_m is None:
        p_m = 1.0 / d
    order = rng.permutation(n)
    if n % 2:
        order = np.append(order, rng.integers(n))
    a = parents_x[order[0::2]]
    b = parents_x[order[1::2]]
    c1, c2 = sbx_crossover(a, b, eta_c, rng, lower, upper)
    children = np.empty((2 * len(a), d))
    children[0::2] = c1
    children[1::2] = c2
    return polynomial_mutation(children, eta_m, p_m, rng, lower, upper)


@dataclass
class RveaResult:
    population: Population
    offspring_x: np.ndarray
    offspring_f: np.ndarray
    reference_vectors: ReferenceVectorSet


def run_rvea(
    start: Population,
    evaluate,
    budget: int,
    rng,
    lower,
    upper,
    pop_size: int = 32,
    alpha: float = ALPHA,
    t_offset: int = 0,
    t_max: int | None = None,
    adapt_fraction: float = 0.1,
    rvs: ReferenceVectorSet | None = None,
    eta_c: float = ETA_C,
    eta_m: float = ETA_M,
) -> RveaResult:
    """Evolve ``start`` until ``budget`` offspring evaluations have been spent.

    ``evaluate`` maps a (q, D) batch to (q, 2) objective values. The start
    population may be larger than ``pop_size``; it is reduced by APD
    selection before the first variation step. Every evaluated offspring is
    returned alongside the final population.
    """
    if rvs is None:
        rvs = generate_reference_vectors(pop_size)
    per_gen = pop_size + (pop_size % 2)
    generations = max(1, math.ceil(budget / per_gen)) if budget > 0 else 0
    if t_max is None:
        t_max = t_offset + generations
    adapt_every = max(1, math.ceil(adapt_fraction * t_max))
    x, f = start.x, start.f
    if len(x) > pop_size:
        keep = apd_select_indices(f, rvs, ApdContext(min(t_offset, t_max), t_max, alpha=alpha), pop_size)
        x, f = x[keep], f[keep]
    off_x, off_f = [], []
    spent = 0
    t = t_offset
    while spent < budget:
        children = make_offspring(x, rng, lower, upper, eta_c, eta_m)
        children = children[: budget - spent]
        child_f = np.asarray(evaluate(children), dtype=float).reshape(-1, 2)
        spent += len(children)
        off_x.append(children)
        off_f.append(child_f)
        t += 1
        cx = np.vstack([x, children])
        cf = np.vstack([f, child_f])
        ctx = ApdContext(min(t, t_max), t_max, alpha=alpha)
        keep = apd_select_indices(cf, rvs, ctx, pop_size)
        x, f = cx[keep], cf[keep]
        if t % adapt_every == 0:
            rvs = adapt_reference_vectors(rvs, f.min(axis=0), f.max(axis=0))
    d = start.x.shape[1]
    return RveaResult(
        Population(x, f, t),
        np.vstack(off_x) if off_x else np.zeros((0, d)),
        np.vstack(off_f) if off_f else np.zeros((0, 2)),
        rvs,
    )
