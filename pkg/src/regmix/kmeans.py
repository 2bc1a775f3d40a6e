"""Lloyd's k-means, used as the spherical baseline and as a local search for HG-means."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameter
from .gmm import FitConfig


@dataclass(frozen=True, eq=False)
class CentroidSolution:
    centers: np.ndarray
    sse: float = float("nan")

    def __post_init__(self):
        self.centers.setflags(write=False)

    @property
    def k(self) -> int:
        return self.centers.shape[0]

    @property
    def d(self) -> int:
        return self.centers.shape[1]

    @property
    def fitness(self) -> float:
        # search strategies maximize fitness
        return -self.sse

    @property
    def means(self):
        return self.centers


def squared_distances(data, centers):
    """``n x k`` matrix of squared Euclidean distances."""
    diff = data[:, None, :] - centers[None, :, :]
    return np.einsum("ikj,ikj->ik", diff, diff)


def assign(data, centers):
    d2 = squared_distances(data, centers)
    labels = np.argmin(d2, axis=1)
    return labels, d2[np.arange(len(labels)), labels]


def sse(data, centers) -> float:
    return float(assign(np.asarray(data, dtype=float), np.asarray(centers, dtype=float))[1].sum())


def init_random(data, k, rng) -> CentroidSolution:
    data = np.asarray(data, dtype=float)
    n = data.shape[0]
    if not 1 <= k <= n:
        raise InvalidParameter(f"need 1 <= k <= n, got k={k}, n={n}")
    centers = data[rng.choice(n, size=k, replace=False)].copy()
    return CentroidSolution(centers, sse(data, centers))


def _update(data, labels, k):
    d = data.shape[1]
    counts = np.bincount(labels, minlength=k)
    sums = np.zeros((k, d))
    np.add.at(sums, labels, data)
    centers = np.empty((k, d))
    filled = counts > 0
    centers[filled] = sums[filled] / counts[filled, None]
    empty = np.flatnonzero(~filled)
    if empty.size:
        # farthest points from their own (updated) centers seed the empty clusters
        resid = np.einsum("ij,ij->i", data - centers[labels], data - centers[labels])
        far = np.argsort(-resid, kind="stable")[: empty.size]
        centers[empty] = data[far]
    return centers


def lloyd_fit(data, init, config=FitConfig(), history=None) -> CentroidSolution:
    """Lloyd iterations from ``init`` (a :class:`CentroidSolution` or a ``k x d`` array).

    Stops when the absolute SSE change drops below ``config.tolerance``.
    Empty clusters are re-seeded on the points farthest from their centers.
    """
    data = np.asarray(data, dtype=float)
    centers = np.array(init.centers if isinstance(init, CentroidSolution) else init, dtype=float)
    k = centers.shape[0]
    if k > data.shape[0]:
        raise InvalidParameter(f"k={k} exceeds the number of samples")
    labels, dist = assign(data, centers)
    cost = float(dist.sum())
    if history is not None:
        history.append(cost)
    for _ in range(config.max_iterations):
        centers = _update(data, labels, k)
        labels, dist = assign(data, centers)
        new_cost = float(dist.sum())
        if history is not None:
            history.append(new_cost)
        converged = abs(cost - new_cost) < config.tolerance
        cost = new_cost
        if converged:
            break
    return CentroidSolution(centers, cost)
