"""EM local search for full-covariance Gaussian mixtures."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .covariance import (
    CholeskyFactor,
    SINGULAR_PIVOT,
    RegularizationMethod,
    log_density_rows,
    regularize,
    stable_cholesky,
)
from .errors import DegenerateCluster, InvalidParameter

_DEGENERATE_FRACTION = 1e-10


@dataclass(frozen=True)
class FitConfig:
    tolerance: float = 0.1
    max_iterations: int = 100

    def __post_init__(self):
        if self.tolerance < 0:
            raise InvalidParameter("tolerance must be >= 0")
        if self.max_iterations < 1:
            raise InvalidParameter("max_iterations must be >= 1")


@dataclass(frozen=True, eq=False)
class MixtureSolution:
    """Parameters of a k-component Gaussian mixture.

    ``fitness`` is the total log-likelihood on the data the solution was
    evaluated on, or NaN when the parameters changed since (e.g. after a
    mutation).
    """

    weights: np.ndarray
    means: np.ndarray
    covariances: np.ndarray
    chols: tuple = field(repr=False)
    fitness: float = float("nan")

    def __post_init__(self):
        for arr in (self.weights, self.means, self.covariances):
            arr.setflags(write=False)

    @classmethod
    def build(cls, weights, means, covariances, fitness=float("nan")):
        """Factorize ``covariances`` (flooring when needed) and wrap everything."""
        weights = np.array(weights, dtype=float)
        means = np.array(means, dtype=float)
        covs = np.array(covariances, dtype=float)
        chols = []
        for j in range(len(covs)):
            covs[j], factor = stable_cholesky(covs[j])
            chols.append(factor)
        return cls(weights, means, covs, tuple(chols), float(fitness))

    @property
    def k(self) -> int:
        return self.means.shape[0]

    @property
    def d(self) -> int:
        return self.means.shape[1]

    def with_fitness(self, fitness) -> "MixtureSolution":
        return MixtureSolution(self.weights, self.means, self.covariances, self.chols, float(fitness))

    def evaluate(self, data) -> "MixtureSolution":
        return self.with_fitness(e_step(data, self)[1])


def init_random(data, k, rng) -> MixtureSolution:
    """Means on ``k`` distinct random samples, identity covariances, uniform weights."""
    data = np.asarray(data, dtype=float)
    n, d = data.shape
    if not 1 <= k <= n:
        raise InvalidParameter(f"need 1 <= k <= n, got k={k}, n={n}")
    idx = rng.choice(n, size=k, replace=False)
    eye = np.eye(d)
    factor = CholeskyFactor(eye, 0.0)
    return MixtureSolution(
        np.full(k, 1.0 / k), data[idx].copy(), np.repeat(eye[None], k, axis=0), (factor,) * k
    )


def _weighted_log_densities(data, sol: MixtureSolution):
    out = np.empty((data.shape[0], sol.k))
    with np.errstate(divide="ignore"):
        log_w = np.log(sol.weights)
    for j in range(sol.k):
        out[:, j] = log_w[j] + log_density_rows(data, sol.means[j], sol.chols[j])
    return out


def _posterior(data, sol):
    joint = _weighted_log_densities(data, sol)
    top = joint.max(axis=1, keepdims=True)
    top[~np.isfinite(top)] = 0.0
    shifted = np.exp(joint - top)
    mass = shifted.sum(axis=1, keepdims=True)
    with np.errstate(divide="ignore"):
        norm = np.log(mass) + top
    return shifted / mass, float(norm.sum())


def e_step(data, sol: MixtureSolution):
    """Return ``(responsibilities, total log-likelihood)`` computed in log space."""
    return _posterior(np.asarray(data, dtype=float), sol)


def _maximize(data, resp, method):
    n, d = data.shape
    k = resp.shape[1]
    totals = resp.sum(axis=0)
    alive = totals >= _DEGENERATE_FRACTION * n
    if not alive.any():
        raise DegenerateCluster("every component lost its support")
    weights = totals / totals.sum()
    means = np.zeros((k, d))
    covs = np.zeros((k, d, d))
    chols = [None] * k
    live = np.flatnonzero(alive)
    for j in live:
        w = resp[:, j]
        mean = w @ data / totals[j]
        z = data - mean
        cov = (z * w[:, None]).T @ z / totals[j]
        cov = 0.5 * (cov + cov.T)
        covs[j] = regularize(cov, method, data, w, mean, totals[j])
        means[j] = mean
    for j, factor in zip(live, _factorize_all(covs[live])):
        covs[j], chols[j] = factor
    dead = np.flatnonzero(~alive)
    if dead.size:
        _repair(data, weights, means, covs, chols, alive)
    return MixtureSolution(weights, means, covs, tuple(chols))


def _factorize_all(covs):
    """Batched Cholesky; falls back to the flooring path per matrix on failure."""
    try:
        lower = np.linalg.cholesky(covs)
        diag = np.diagonal(lower, axis1=1, axis2=2)
        scale = np.maximum(1.0, np.trace(covs, axis1=1, axis2=2) / covs.shape[1])
        if np.all(np.isfinite(lower)) and np.all(diag.min(axis=1) ** 2 >= SINGULAR_PIVOT * scale):
            log_dets = 2.0 * np.log(diag).sum(axis=1)
            return [(c, CholeskyFactor(l, float(ld))) for c, l, ld in zip(covs, lower, log_dets)]
    except np.linalg.LinAlgError:
        pass
    return [stable_cholesky(c) for c in covs]


def _repair(data, weights, means, covs, chols, alive):
    """Relocate dead components onto the worst-explained samples."""
    live = np.flatnonzero(alive)
    avg_cov = covs[live].mean(axis=0)
    avg_cov, avg_chol = stable_cholesky(avg_cov)
    partial = MixtureSolution(
        weights[live] / weights[live].sum(), means[live], covs[live], tuple(chols[j] for j in live)
    )
    density = logsumexp(_weighted_log_densities(data, partial), axis=1)
    order = np.argsort(density, kind="stable")
    k = len(weights)
    for slot, j in enumerate(np.flatnonzero(~alive)):
        means[j] = data[order[slot % len(order)]]
        covs[j] = avg_cov
        chols[j] = avg_chol
        weights[j] = 1.0 / k
    weights /= weights.sum()


def m_step(data, resp, method=RegularizationMethod()) -> MixtureSolution:
    """Re-estimate weights, means and regularized covariances from ``resp``.

    The returned solution carries its log-likelihood on ``data``.
    """
    data = np.asarray(data, dtype=float)
    if isinstance(method, str):
        method = RegularizationMethod.parse(method)
    sol = _maximize(data, np.asarray(resp, dtype=float), method)
    _, ll = _posterior(data, sol)
    return sol.with_fitness(ll)


def em_fit(data, init: MixtureSolution, method=RegularizationMethod(), config=FitConfig(), history=None):
    """Alternate E and M steps from ``init`` until the log-likelihood settles.

    Stops when the absolute change of the total log-likelihood falls below
    ``config.tolerance`` or after ``config.max_iterations`` M-steps, and returns
    the best iterate seen. When ``history`` is a list, the log-likelihood of
    ``init`` and of every iterate is appended to it.
    """
    data = np.asarray(data, dtype=float)
    if isinstance(method, str):
        method = RegularizationMethod.parse(method)
    if init.d != data.shape[1]:
        raise InvalidParameter("solution and data dimensions differ")
    resp, ll = _posterior(data, init)
    if history is not None:
        history.append(ll)
    best = None
    for _ in range(config.max_iterations):
        sol = _maximize(data, resp, method)
        resp, new_ll = _posterior(data, sol)
        if history is not None:
            history.append(new_ll)
        if best is None or new_ll > best.fitness:
            best = sol.with_fitness(new_ll)
        converged = abs(new_ll - ll) < config.tolerance
        ll = new_ll
        if converged:
            break
    return best


def hard_assign(resp):
    """Most responsible component per row; ties go to the lowest index."""
    return np.argmax(np.asarray(resp), axis=1)


def predict(data, sol: MixtureSolution):
    return hard_assign(e_step(data, sol)[0])
