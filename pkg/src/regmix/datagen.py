"""Synthetic Gaussian-mixture datasets with a controlled separation index."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy.stats import norm

from .errors import GenerationFailure, InvalidParameter
from .gmm import MixtureSolution


@dataclass(frozen=True)
class DatasetSpec:
    k: int
    d: int
    c: float
    n: Optional[int] = None  # defaults to 100 * k
    eig_range: Tuple[float, float] = (1.0, 200.0)
    seed: int = 0
    alpha: float = 0.05

    def __post_init__(self):
        if self.k < 1 or self.d < 1:
            raise InvalidParameter("k and d must be positive")
        if self.size < self.k:
            raise InvalidParameter("n must be >= k")
        lo, hi = self.eig_range
        if not 0 < lo <= hi:
            raise InvalidParameter("eig_range must be positive and ordered")

    @property
    def size(self) -> int:
        return 100 * self.k if self.n is None else self.n


@dataclass(frozen=True)
class GroundTruth:
    labels: np.ndarray
    mixture: MixtureSolution


def separation_index(mu1, cov1, mu2, cov2, alpha=0.05) -> float:
    """Quantile-gap separation of two Gaussians along their mean-difference direction.

    -1 means total overlap, 0 means the (1 - alpha/2) quantile intervals just
    touch, values approach 1 as the clusters move apart.
    """
    mu1 = np.asarray(mu1, dtype=float)
    mu2 = np.asarray(mu2, dtype=float)
    diff = mu2 - mu1
    dist = float(np.linalg.norm(diff))
    if dist == 0.0:
        return -1.0
    a = diff / dist
    m1, m2 = float(a @ mu1), float(a @ mu2)  # m2 > m1 by construction
    s1 = float(np.sqrt(a @ np.asarray(cov1) @ a))
    s2 = float(np.sqrt(a @ np.asarray(cov2) @ a))
    z = norm.ppf(1.0 - alpha / 2.0)
    lower2, upper1 = m2 - z * s2, m1 + z * s1
    upper2, lower1 = m2 + z * s2, m1 - z * s1
    return (lower2 - upper1) / (upper2 - lower1)


def min_separation(means, covs, alpha=0.05) -> float:
    k = len(means)
    if k < 2:
        return float("inf")
    return min(
        separation_index(means[i], covs[i], means[j], covs[j], alpha)
        for i in range(k)
        for j in range(i + 1, k)
    )


def random_rotation(d, rng):
    q, r = np.linalg.qr(rng.standard_normal((d, d)))
    return q * np.sign(np.diag(r))


def cluster_sizes(n, k):
    base, extra = divmod(n, k)
    return np.array([base + (i < extra) for i in range(k)])


def place_means(base, covs, c, alpha=0.05, tol=1e-6, max_iter=100):
    """Scale ``base`` radially so the minimum pairwise separation equals ``c``."""
    lo, hi = 1e-3, 1e3
    f_lo = min_separation(base * lo, covs, alpha) - c
    f_hi = min_separation(base * hi, covs, alpha) - c
    if f_lo > 0 or f_hi < 0:
        raise GenerationFailure(f"separation {c} is not reachable with scale in [{lo}, {hi}]")
    for _ in range(max_iter):
        mid = np.sqrt(lo * hi)
        f_mid = min_separation(base * mid, covs, alpha) - c
        if abs(f_mid) <= tol:
            return base * mid
        if f_mid < 0:
            lo = mid
        else:
            hi = mid
    mid = np.sqrt(lo * hi)
    if abs(min_separation(base * mid, covs, alpha) - c) > 0.01:
        raise GenerationFailure("bisection did not reach the target separation")
    return base * mid


def generate(spec: DatasetSpec, rng=None):
    """Draw a labelled dataset; returns ``(data, GroundTruth)`` with shuffled rows."""
    if rng is None:
        rng = np.random.default_rng(spec.seed)
    k, d, n = spec.k, spec.d, spec.size
    lo, hi = spec.eig_range
    covs = np.empty((k, d, d))
    factors = np.empty((k, d, d))
    for j in range(k):
        eig = rng.uniform(lo, hi, size=d)
        q = random_rotation(d, rng)
        covs[j] = (q * eig) @ q.T
        covs[j] = 0.5 * (covs[j] + covs[j].T)
        factors[j] = q * np.sqrt(eig)
    base = rng.standard_normal((k, d)) * np.sqrt(d)
    means = base if k == 1 else place_means(base, covs, spec.c, spec.alpha)
    sizes = cluster_sizes(n, k)
    chunks, labels = [], []
    for j in range(k):
        z = rng.standard_normal((sizes[j], d))
        chunks.append(means[j] + z @ factors[j].T)
        labels.append(np.full(sizes[j], j))
    data = np.vstack(chunks)
    labels = np.concatenate(labels)
    order = rng.permutation(n)
    data, labels = data[order], labels[order]
    mixture = MixtureSolution.build(sizes / n, means, covs).evaluate(data)
    return data, GroundTruth(labels, mixture)
