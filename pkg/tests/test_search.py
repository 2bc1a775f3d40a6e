import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from regmix.covariance import RegularizationMethod
from regmix.errors import InvalidParameter, InvalidState
from regmix.gmm import MixtureSolution, predict
from regmix.kmeans import assign
from regmix.metrics import ari
from regmix.search import (
    GMMLocalSearch,
    KMeansLocalSearch,
    Population,
    SearchConfig,
    binary_tournament,
    crossover,
    hgs,
    hungarian,
    improves,
    mixture_match_costs,
    multi_start,
    mutate,
    random_swap,
    survivor_selection,
)

SHRUNK = RegularizationMethod("shrunk")


class Fit:
    """Stand-in solution carrying only a fitness."""

    def __init__(self, fitness):
        self.fitness = fitness

    def __repr__(self):
        return f"Fit({self.fitness})"


def brute_assignment(c):
    k = len(c)
    return min(sum(c[i][p[i]] for i in range(k)) for p in itertools.permutations(range(k)))


def separated(n=200, seed=0):
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((n // 2, 2))
    b = rng.standard_normal((n - n // 2, 2)) + [12.0, 0.0]
    return np.vstack([a, b]), np.repeat([0, 1], [n // 2, n - n // 2])


def random_mixture(rng, k, d):
    covs = []
    for _ in range(k):
        a = rng.standard_normal((d, d))
        covs.append(a @ a.T + 0.5 * np.eye(d))
    w = rng.uniform(0.1, 1, size=k)
    return MixtureSolution.build(w / w.sum(), rng.standard_normal((k, d)) * 5, covs)


# ---------------------------------------------------------------- hungarian


def test_hungarian_small_cases():
    assert list(hungarian([[0, 1], [1, 0]])) == [0, 1]
    assert list(hungarian([[1, 2], [2, 1]])) == [0, 1]
    assert list(hungarian([[5, 0], [0, 5]])) == [1, 0]
    assert list(hungarian([[7.0]])) == [0]


def test_hungarian_matches_bruteforce():
    rng = np.random.default_rng(0)
    for _ in range(100):
        k = int(rng.integers(1, 7))
        c = rng.uniform(-5, 20, size=(k, k))
        perm = hungarian(c)
        assert sorted(perm) == list(range(k))
        assert sum(c[i, perm[i]] for i in range(k)) == pytest.approx(brute_assignment(c))


def test_hungarian_integer_ties():
    rng = np.random.default_rng(1)
    for _ in range(50):
        c = rng.integers(0, 3, size=(5, 5)).astype(float)
        perm = hungarian(c)
        assert sum(c[i, perm[i]] for i in range(5)) == brute_assignment(c)


def test_hungarian_rejects_bad_input():
    with pytest.raises(InvalidParameter):
        hungarian(np.zeros((2, 3)))
    with pytest.raises(InvalidParameter):
        hungarian([[0, np.inf], [1, 0]])


# ---------------------------------------------------------------- crossover / mutation


def test_crossover_of_identical_parents():
    rng = np.random.default_rng(2)
    p = random_mixture(rng, 4, 3)
    child = crossover(p, p, rng)
    assert np.allclose(child.means, p.means)
    assert np.allclose(child.covariances, p.covariances)
    assert np.allclose(child.weights, p.weights)


def test_crossover_recovers_permuted_parent():
    rng = np.random.default_rng(3)
    p1 = random_mixture(rng, 3, 2)
    perm = [2, 0, 1]
    p2 = MixtureSolution.build(p1.weights[perm], p1.means[perm], p1.covariances[perm])
    for _ in range(10):
        child = crossover(p1, p2, rng)
        assert np.allclose(child.means, p1.means)
        assert np.allclose(child.weights, p1.weights)


def test_crossover_component_pairs():
    rng = np.random.default_rng(4)
    p1, p2 = random_mixture(rng, 4, 2), random_mixture(rng, 4, 2)
    perm = hungarian(mixture_match_costs(p1, p2))
    child = crossover(p1, p2, rng)
    for i in range(4):
        from_p1 = np.array_equal(child.means[i], p1.means[i])
        from_p2 = np.array_equal(child.means[i], p2.means[perm[i]])
        assert from_p1 or from_p2
        src = p1.covariances[i] if from_p1 else p2.covariances[perm[i]]
        assert np.array_equal(child.covariances[i], src)
    assert np.allclose(child.weights, 0.5 * (p1.weights + p2.weights[perm]))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 5), st.integers(1, 4))
def test_match_costs_symmetric_and_child_weights_simplex(seed, k, d):
    rng = np.random.default_rng(seed)
    p1, p2 = random_mixture(rng, k, d), random_mixture(rng, k, d)
    assert np.allclose(mixture_match_costs(p1, p2), mixture_match_costs(p2, p1).T)
    assert np.all(mixture_match_costs(p1, p2) >= 0)
    child = crossover(p1, p2, rng)
    assert np.all(child.weights > 0)
    assert child.weights.sum() == pytest.approx(1.0)


def test_crossover_rejects_mismatched_parents():
    rng = np.random.default_rng(5)
    with pytest.raises(InvalidParameter):
        crossover(random_mixture(rng, 2, 2), random_mixture(rng, 3, 2), rng)


def test_mutate_moves_one_cluster():
    rng = np.random.default_rng(6)
    data = rng.standard_normal((30, 2)) * 10
    p = random_mixture(rng, 3, 2)
    child = mutate(p, data, rng)
    moved = [j for j in range(3) if not np.array_equal(child.means[j], p.means[j])]
    assert len(moved) == 1
    j = moved[0]
    assert any(np.array_equal(child.means[j], row) for row in data)
    others = [i for i in range(3) if i != j]
    assert np.allclose(child.covariances[j], p.covariances[others].mean(axis=0))
    assert np.array_equal(child.weights, p.weights)
    assert math.isnan(child.fitness)


def test_mutate_single_cluster_is_noop():
    rng = np.random.default_rng(7)
    p = random_mixture(rng, 1, 2)
    assert mutate(p, np.zeros((4, 2)), rng) is p


# ---------------------------------------------------------------- population


def test_binary_tournament_frequency():
    rng = np.random.default_rng(8)
    pop = Population([Fit(1.0), Fit(2.0)])
    wins = sum(binary_tournament(pop, rng).fitness == 2.0 for _ in range(10_000))
    assert abs(wins / 10_000 - 0.75) < 0.02


def test_binary_tournament_edge_cases():
    rng = np.random.default_rng(9)
    only = Fit(0.0)
    assert binary_tournament(Population([only]), rng) is only
    with pytest.raises(InvalidState):
        binary_tournament(Population([]), rng)


def test_survivor_selection_removes_clones_first():
    pop = Population([Fit(5.0), Fit(5.0), Fit(5.0), Fit(1.0)], pi_min=2, pi_max=3)
    kept = sorted(s.fitness for s in survivor_selection(pop).solutions)
    assert kept == [1.0, 5.0]


def test_survivor_selection_then_least_fit():
    pop = Population([Fit(1.0), Fit(1.0), Fit(2.0), Fit(3.0)], pi_min=2, pi_max=3)
    kept = sorted(s.fitness for s in survivor_selection(pop).solutions)
    assert kept == [2.0, 3.0]


def test_survivor_selection_clone_tolerance():
    pop = Population([Fit(-1000.0), Fit(-1000.0 * (1 + 1e-12)), Fit(-2000.0)], pi_min=2, pi_max=2)
    kept = sorted(s.fitness for s in survivor_selection(pop).solutions)
    assert kept[0] == -2000.0


def test_improves_margin():
    assert improves(-100.0, -101.0)
    assert not improves(-100.0, -100.0 - 1e-10)
    assert not improves(float("nan"), 0.0)
    assert improves(1.0, None)


def test_search_config_validation():
    with pytest.raises(InvalidParameter):
        SearchConfig(pi_min=5, pi_max=4)
    with pytest.raises(InvalidParameter):
        SearchConfig(n_it=-1)


# ---------------------------------------------------------------- drivers

FAST = SearchConfig(n_it=5, pi_min=3, pi_max=5, seed=3)


@pytest.mark.parametrize("driver", [multi_start, random_swap, hgs])
@pytest.mark.parametrize("ls", [GMMLocalSearch(SHRUNK), KMeansLocalSearch()], ids=["gmm", "kmeans"])
def test_history_is_monotone(driver, ls):
    x = np.random.default_rng(10).standard_normal((80, 2)) * [3, 1]
    res = driver(x, 3, ls, FAST)
    assert np.all(np.diff(res.history) >= 0)
    assert res.fitness == res.history[-1]
    assert res.local_searches == len(res.history)


@pytest.mark.parametrize("driver", [multi_start, random_swap, hgs])
def test_drivers_are_deterministic(driver):
    x = np.random.default_rng(11).standard_normal((60, 2))
    a = driver(x, 3, GMMLocalSearch(SHRUNK), FAST)
    b = driver(x, 3, GMMLocalSearch(SHRUNK), FAST)
    assert a.history == b.history
    assert np.array_equal(a.best.means, b.best.means)


def test_zero_iterations():
    x = np.random.default_rng(12).standard_normal((40, 2))
    ls = GMMLocalSearch(SHRUNK)
    cfg = SearchConfig(n_it=0, pi_min=2, pi_max=4)
    assert multi_start(x, 2, ls, cfg).local_searches == 1
    assert random_swap(x, 2, ls, cfg).local_searches == 1
    assert hgs(x, 2, ls, cfg).local_searches == 4


def test_hgs_stops_after_n_it_stalls():
    x = np.random.default_rng(13).standard_normal((40, 2))
    res = hgs(x, 2, GMMLocalSearch(SHRUNK), SearchConfig(n_it=1, pi_min=2, pi_max=3))
    # the final child is the single non-improving one
    assert res.history[-1] == res.history[-2]


def test_hgs_never_worse_than_its_seeding_phase():
    x = np.random.default_rng(14).standard_normal((100, 3))
    cfg = SearchConfig(n_it=10, pi_min=3, pi_max=6, seed=5)
    res = hgs(x, 4, GMMLocalSearch(SHRUNK), cfg)
    assert res.fitness >= res.history[cfg.pi_max - 1]


def test_hgs_separates_two_gaussians():
    x, labels = separated(200, seed=15)
    res = hgs(x, 2, GMMLocalSearch(SHRUNK), SearchConfig(n_it=10, pi_min=4, pi_max=8, seed=1))
    assert ari(labels, predict(x, res.best)) == 1.0


def test_kmeans_hgs_separates_two_gaussians():
    x, labels = separated(200, seed=16)
    res = hgs(x, 2, KMeansLocalSearch(), SearchConfig(n_it=10, pi_min=4, pi_max=8, seed=1))
    assert ari(labels, assign(x, res.best.centers)[0]) == 1.0
