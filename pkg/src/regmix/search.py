"""Meta-searches over a clustering local search: Multi-Start, Random Swap and
the hybrid genetic search (HGS).

A *local search* object adapts one model family to the generic drivers. It
provides ``init(data, k, rng)``, ``improve(data, solution)``,
``crossover(p1, p2, rng, data)``, ``mutate(solution, data, rng)`` and
``relocate(solution, data, rng)``; :class:`GMMLocalSearch` and
:class:`KMeansLocalSearch` are the two shipped implementations. Every driver
maximizes ``solution.fitness``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import gmm, kmeans
from .covariance import RegularizationMethod, mahalanobis
from .errors import InvalidParameter, InvalidState
from .gmm import FitConfig, MixtureSolution
from .kmeans import CentroidSolution


@dataclass(frozen=True)
class SearchConfig:
    n_it: int = 100
    pi_min: int = 10
    pi_max: int = 20
    seed: int = 0

    def __post_init__(self):
        if self.n_it < 0:
            raise InvalidParameter("n_it must be >= 0")
        if self.pi_min < 1 or self.pi_max < self.pi_min:
            raise InvalidParameter("need 1 <= pi_min <= pi_max")


@dataclass
class Population:
    solutions: list = field(default_factory=list)
    pi_min: int = 10
    pi_max: int = 20

    def __len__(self):
        return len(self.solutions)

    def add(self, sol):
        self.solutions.append(sol)

    def best(self):
        if not self.solutions:
            raise InvalidState("empty population")
        return max(self.solutions, key=lambda s: s.fitness)


@dataclass
class SearchResult:
    best: object
    history: list  # incumbent fitness after every local search
    local_searches: int

    @property
    def fitness(self):
        return self.best.fitness


def improves(new, best, rel=1e-9):
    """Strict improvement beyond a relative margin; NaN never improves."""
    if math.isnan(new):
        return False
    if best is None or math.isnan(best) or best == -math.inf:
        return True
    return new > best + rel * abs(best)


# --------------------------------------------------------------------------- matching


def hungarian(costs):
    """Minimum-cost perfect matching on a square matrix.

    Returns ``perm`` such that row ``i`` is matched with column ``perm[i]``.
    Shortest augmenting paths with row/column potentials, O(k^3).
    """
    c = np.asarray(costs, dtype=float)
    if c.ndim != 2 or c.shape[0] != c.shape[1]:
        raise InvalidParameter("cost matrix must be square")
    if not np.all(np.isfinite(c)):
        raise InvalidParameter("cost matrix must be finite")
    n = c.shape[0]
    inf = math.inf
    # 1-based arrays; column 0 is a virtual start
    u = [0.0] * (n + 1)
    v = [0.0] * (n + 1)
    row_of = [0] * (n + 1)
    way = [0] * (n + 1)
    for i in range(1, n + 1):
        row_of[0] = i
        j0 = 0
        minv = [inf] * (n + 1)
        used = [False] * (n + 1)
        while True:
            used[j0] = True
            i0 = row_of[j0]
            delta = inf
            j1 = 0
            for j in range(1, n + 1):
                if not used[j]:
                    cur = c[i0 - 1, j - 1] - u[i0] - v[j]
                    if cur < minv[j]:
                        minv[j] = cur
                        way[j] = j0
                    if minv[j] < delta:
                        delta = minv[j]
                        j1 = j
            for j in range(n + 1):
                if used[j]:
                    u[row_of[j]] += delta
                    v[j] -= delta
                else:
                    minv[j] -= delta
            j0 = j1
            if row_of[j0] == 0:
                break
        while j0:
            j1 = way[j0]
            row_of[j0] = row_of[j1]
            j0 = j1
    perm = np.empty(n, dtype=int)
    for j in range(1, n + 1):
        perm[row_of[j] - 1] = j - 1
    return perm


def mixture_match_costs(p1: MixtureSolution, p2: MixtureSolution):
    """Symmetrized Mahalanobis distance between every pair of cluster centers."""
    k = p1.k
    costs = np.empty((k, k))
    for i in range(k):
        for j in range(k):
            costs[i, j] = 0.5 * (
                mahalanobis(p1.means[i], p2.means[j], p2.chols[j])
                + mahalanobis(p2.means[j], p1.means[i], p1.chols[i])
            )
    return costs


def centroid_match_costs(p1, p2):
    diff = p1.centers[:, None, :] - p2.centers[None, :, :]
    return np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))


def _check_parents(p1, p2):
    if p1.k != p2.k or p1.d != p2.d:
        raise InvalidParameter("parents must share k and d")


# --------------------------------------------------------------------------- GMM operators


def crossover(p1: MixtureSolution, p2: MixtureSolution, rng, data=None) -> MixtureSolution:
    """Matching-based crossover of two mixtures.

    Clusters are paired by a minimum-cost assignment; each pair hands one of
    its two clusters (mean and covariance) to the child, which takes the
    average of the pair's weights. The child is evaluated on ``data`` when
    given.
    """
    _check_parents(p1, p2)
    perm = hungarian(mixture_match_costs(p1, p2))
    take_first = rng.random(p1.k) < 0.5
    means = np.where(take_first[:, None], p1.means, p2.means[perm])
    covs = np.where(take_first[:, None, None], p1.covariances, p2.covariances[perm])
    chols = tuple(p1.chols[i] if take_first[i] else p2.chols[perm[i]] for i in range(p1.k))
    weights = 0.5 * (p1.weights + p2.weights[perm])
    weights = weights / weights.sum()
    child = MixtureSolution(weights, means, covs, chols)
    return child.evaluate(data) if data is not None else child


def mutate(sol: MixtureSolution, data, rng) -> MixtureSolution:
    """Move one random cluster onto one random sample.

    Its covariance becomes the mean of the other clusters' covariances;
    weights are untouched and the fitness is invalidated.
    """
    k = sol.k
    if k < 2:
        return sol
    j = int(rng.integers(k))
    i = int(rng.integers(len(data)))
    means = sol.means.copy()
    means[j] = data[i]
    covs = sol.covariances.copy()
    covs[j] = np.delete(sol.covariances, j, axis=0).mean(axis=0)
    return MixtureSolution.build(sol.weights.copy(), means, covs)


def relocate(sol: MixtureSolution, data, rng) -> MixtureSolution:
    """Random-swap move: one mean jumps to a random sample, nothing else changes."""
    j = int(rng.integers(sol.k))
    i = int(rng.integers(len(data)))
    means = sol.means.copy()
    means[j] = data[i]
    return MixtureSolution(sol.weights.copy(), means, sol.covariances.copy(), sol.chols)


# --------------------------------------------------------------------------- local searches


@dataclass(frozen=True)
class GMMLocalSearch:
    method: RegularizationMethod = RegularizationMethod()
    fit: FitConfig = FitConfig()

    def init(self, data, k, rng):
        return gmm.init_random(data, k, rng)

    def improve(self, data, sol):
        return gmm.em_fit(data, sol, self.method, self.fit)

    def crossover(self, p1, p2, rng, data=None):
        return crossover(p1, p2, rng, data)

    def mutate(self, sol, data, rng):
        return mutate(sol, data, rng)

    def relocate(self, sol, data, rng):
        return relocate(sol, data, rng)


@dataclass(frozen=True)
class KMeansLocalSearch:
    fit: FitConfig = FitConfig()

    def init(self, data, k, rng):
        return kmeans.init_random(data, k, rng)

    def improve(self, data, sol):
        return kmeans.lloyd_fit(data, sol, self.fit)

    def crossover(self, p1, p2, rng, data=None):
        _check_parents(p1, p2)
        perm = hungarian(centroid_match_costs(p1, p2))
        take_first = rng.random(p1.k) < 0.5
        centers = np.where(take_first[:, None], p1.centers, p2.centers[perm])
        return CentroidSolution(centers, kmeans.sse(data, centers) if data is not None else math.nan)

    def mutate(self, sol, data, rng):
        if sol.k < 2:
            return sol
        return self.relocate(sol, data, rng)

    def relocate(self, sol, data, rng):
        j = int(rng.integers(sol.k))
        i = int(rng.integers(len(data)))
        centers = sol.centers.copy()
        centers[j] = data[i]
        return CentroidSolution(centers)


# --------------------------------------------------------------------------- population


def binary_tournament(pop: Population, rng):
    """Two uniform draws with replacement; the fitter one wins (first on ties)."""
    if not pop.solutions:
        raise InvalidState("cannot select from an empty population")
    a, b = rng.integers(len(pop.solutions), size=2)
    sa, sb = pop.solutions[a], pop.solutions[b]
    return sb if sb.fitness > sa.fitness else sa


def _clone_index(solutions, rel=1e-9):
    """Index of a solution whose fitness duplicates an earlier-ranked one, or None."""
    order = sorted(range(len(solutions)), key=lambda i: (-solutions[i].fitness, i))
    for prev, cur in zip(order, order[1:]):
        if math.isclose(solutions[prev].fitness, solutions[cur].fitness, rel_tol=rel):
            return cur
    return None


def survivor_selection(pop: Population) -> Population:
    """Shrink the population to ``pi_min``: clones go first, then the least fit."""
    sols = list(pop.solutions)
    while len(sols) > pop.pi_min:
        idx = _clone_index(sols)
        if idx is None:
            break
        del sols[idx]
    if len(sols) > pop.pi_min:
        order = sorted(range(len(sols)), key=lambda i: (-sols[i].fitness, i))
        keep = sorted(order[: pop.pi_min])
        sols = [sols[i] for i in keep]
    return Population(sols, pop.pi_min, pop.pi_max)


# --------------------------------------------------------------------------- drivers


def _rng(config):
    return np.random.default_rng(config.seed)


def multi_start(data, k, local_search, config=SearchConfig()) -> SearchResult:
    """Best of ``config.n_it`` local searches from independent random starts."""
    data = np.asarray(data, dtype=float)
    rng = _rng(config)
    best, history = None, []
    for _ in range(max(config.n_it, 1)):
        sol = local_search.improve(data, local_search.init(data, k, rng))
        if best is None or improves(sol.fitness, best.fitness):
            best = sol
        history.append(best.fitness)
    return SearchResult(best, history, len(history))


def random_swap(data, k, local_search, config=SearchConfig()) -> SearchResult:
    """Iterated local search with relocation moves and improve-or-revert acceptance.

    Stops after ``config.n_it`` consecutive swaps that fail to improve.
    """
    data = np.asarray(data, dtype=float)
    rng = _rng(config)
    best = local_search.improve(data, local_search.init(data, k, rng))
    history = [best.fitness]
    stall = 0
    while stall < config.n_it:
        cand = local_search.improve(data, local_search.relocate(best, data, rng))
        if improves(cand.fitness, best.fitness):
            best, stall = cand, 0
        else:
            stall += 1
        history.append(best.fitness)
    return SearchResult(best, history, len(history))


def hgs(data, k, local_search, config=SearchConfig()) -> SearchResult:
    """Hybrid genetic search.

    Seeds ``pi_max`` locally optimized random solutions, then repeatedly
    breeds a child (tournament selection, crossover, mutation, local search)
    until ``config.n_it`` consecutive children fail to improve the best
    fitness. Survivor selection runs whenever the population overflows.
    """
    data = np.asarray(data, dtype=float)
    rng = _rng(config)
    pop = Population([], config.pi_min, config.pi_max)
    best, history = None, []
    for _ in range(config.pi_max):
        sol = local_search.improve(data, local_search.init(data, k, rng))
        pop.add(sol)
        if best is None or improves(sol.fitness, best.fitness):
            best = sol
        history.append(best.fitness)
    stall = 0
    while stall < config.n_it:
        p1 = binary_tournament(pop, rng)
        p2 = binary_tournament(pop, rng)
        child = local_search.crossover(p1, p2, rng)
        child = local_search.mutate(child, data, rng)
        child = local_search.improve(data, child)
        pop.add(child)
        if improves(child.fitness, best.fitness):
            best, stall = child, 0
        else:
            stall += 1
        history.append(best.fitness)
        if len(pop) > pop.pi_max:
            pop = survivor_selection(pop)
    return SearchResult(best, history, len(history))


STRATEGIES = {"ms": multi_start, "rs": random_swap, "hg": hgs}
