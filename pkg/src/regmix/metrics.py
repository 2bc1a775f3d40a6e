"""External cluster-validity indices and the paired Wilcoxon signed-rank test."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.stats import norm, rankdata

from .errors import InsufficientData, InvalidParameter


@dataclass(frozen=True)
class MetricReport:
    ari: float
    nmi: float
    ci: Optional[int] = None


def _labels(a, b):
    a = np.asarray(a)
    b = np.asarray(b)
    if a.ndim != 1 or a.shape != b.shape:
        raise InvalidParameter("label vectors must be 1-D and of equal length")
    if a.size == 0:
        raise InvalidParameter("label vectors must be non-empty")
    return a, b


def contingency(a, b):
    a, b = _labels(a, b)
    _, ia = np.unique(a, return_inverse=True)
    _, ib = np.unique(b, return_inverse=True)
    table = np.zeros((ia.max() + 1, ib.max() + 1), dtype=np.int64)
    np.add.at(table, (ia, ib), 1)
    return table


def _pairs(x):
    return int(sum(int(v) * (int(v) - 1) // 2 for v in np.ravel(x)))


def ari(a, b) -> float:
    """Adjusted Rand index.

    Evaluated in exact integer arithmetic up to the final division. Returns 1
    when both partitions are trivial in the same way (no pair information).
    """
    table = contingency(a, b)
    n = int(table.sum())
    total = n * (n - 1) // 2
    index = _pairs(table)
    sa = _pairs(table.sum(axis=1))
    sb = _pairs(table.sum(axis=0))
    num = 2 * (total * index - sa * sb)
    den = total * (sa + sb) - 2 * sa * sb
    if den == 0:
        return 1.0 if num == 0 else 0.0
    return num / den


def _entropy(counts, n):
    p = counts[counts > 0] / n
    return float(-np.sum(p * np.log(p)))


def nmi(a, b) -> float:
    """Mutual information normalized by the arithmetic mean of the two entropies."""
    table = contingency(a, b)
    n = table.sum()
    ha = _entropy(table.sum(axis=1), n)
    hb = _entropy(table.sum(axis=0), n)
    if ha == 0.0 and hb == 0.0:
        return 1.0
    if ha == 0.0 or hb == 0.0:
        return 0.0
    pij = table / n
    outer = np.outer(table.sum(axis=1), table.sum(axis=0)) / n**2
    nz = pij > 0
    mi = float(np.sum(pij[nz] * np.log(pij[nz] / outer[nz])))
    return float(min(1.0, max(0.0, mi / (0.5 * (ha + hb)))))


def _orphans(src, dst):
    diff = src[:, None, :] - dst[None, :, :]
    nearest = np.argmin(np.einsum("ijk,ijk->ij", diff, diff), axis=1)
    return dst.shape[0] - np.unique(nearest).size


def centroid_index(centers_a, centers_b) -> int:
    """Centroid index: orphan prototypes under nearest-center mapping, max of both directions."""
    ca = np.asarray(centers_a, dtype=float)
    cb = np.asarray(centers_b, dtype=float)
    if ca.ndim != 2 or ca.shape != cb.shape:
        raise InvalidParameter("center sets must have identical shapes")
    return int(max(_orphans(ca, cb), _orphans(cb, ca)))


def wilcoxon_signed_rank(x, y, min_pairs=5) -> float:
    """Two-sided Wilcoxon signed-rank p-value (normal approximation).

    Zero differences are dropped, tied magnitudes get averaged ranks and the
    variance is tie-corrected; a 0.5 continuity correction is applied.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise InvalidParameter("paired samples must be 1-D and of equal length")
    diff = x - y
    diff = diff[diff != 0]
    m = diff.size
    if m < min_pairs:
        raise InsufficientData(f"only {m} nonzero differences (need {min_pairs})")
    ranks = rankdata(np.abs(diff))
    w_plus = float(ranks[diff > 0].sum())
    mean = m * (m + 1) / 4.0
    _, ties = np.unique(np.abs(diff), return_counts=True)
    var = m * (m + 1) * (2 * m + 1) / 24.0 - float(np.sum(ties**3 - ties)) / 48.0
    z = (abs(w_plus - mean) - 0.5) / np.sqrt(var)
    return float(min(1.0, 2.0 * norm.sf(z)))


def class_means(data, labels):
    """Per-label mean vectors, ordered by sorted label value."""
    data = np.asarray(data, dtype=float)
    labels = np.asarray(labels)
    return np.array([data[labels == c].mean(axis=0) for c in np.unique(labels)])


def evaluate(truth, predicted, true_centers=None, centers=None) -> MetricReport:
    ci = None
    if true_centers is not None and centers is not None and np.shape(true_centers) == np.shape(centers):
        ci = centroid_index(true_centers, centers)
    return MetricReport(ari(truth, predicted), nmi(truth, predicted), ci)
