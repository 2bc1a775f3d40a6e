"""Weighted moments, covariance shrinkage and Gaussian density primitives.

Every covariance produced by the fitting code goes through :func:`regularize`
and then :func:`stable_cholesky`; densities are always evaluated from the
Cholesky factor, never from an explicit inverse.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

from .errors import DegenerateCluster, InvalidParameter, NotPositiveDefinite

LOG_2PI = float(np.log(2.0 * np.pi))
SINGULAR_PIVOT = 1e-14

EMPIRICAL = "empirical"
SHRUNK = "shrunk"
LEDOIT_WOLF = "ledoit_wolf"
OAS = "oas"

_ALIASES = {
    "empirical": EMPIRICAL,
    "none": EMPIRICAL,
    "shrunk": SHRUNK,
    "ledoit_wolf": LEDOIT_WOLF,
    "ledoitwolf": LEDOIT_WOLF,
    "lw": LEDOIT_WOLF,
    "oas": OAS,
}


@dataclass(frozen=True)
class RegularizationMethod:
    """Selects how an empirical covariance is post-processed.

    ``delta`` is only read for the ``shrunk`` variant.
    """

    kind: str = EMPIRICAL
    delta: float = 0.1

    def __post_init__(self):
        if self.kind not in (EMPIRICAL, SHRUNK, LEDOIT_WOLF, OAS):
            raise InvalidParameter(f"unknown regularization {self.kind!r}")
        if not 0.0 <= self.delta <= 1.0:
            raise InvalidParameter(f"shrinkage delta must lie in [0, 1], got {self.delta}")

    @classmethod
    def parse(cls, text: str) -> "RegularizationMethod":
        """Parse ``"empirical"``, ``"shrunk"``, ``"shrunk:0.2"``, ``"lw"``, ``"oas"``."""
        name, _, arg = text.strip().lower().partition(":")
        kind = _ALIASES.get(name.replace("-", "_"))
        if kind is None:
            raise InvalidParameter(f"unknown regularization {text!r}")
        if arg:
            if kind != SHRUNK:
                raise InvalidParameter(f"only 'shrunk' takes a parameter, got {text!r}")
            try:
                return cls(kind, float(arg))
            except ValueError as exc:
                raise InvalidParameter(f"bad shrinkage value in {text!r}") from exc
        return cls(kind)

    @property
    def tag(self) -> str:
        if self.kind == SHRUNK and self.delta != 0.1:
            return f"shrunk{self.delta:g}"
        return self.kind


@dataclass(frozen=True)
class CholeskyFactor:
    lower: np.ndarray
    log_det: float

    @property
    def dim(self) -> int:
        return self.lower.shape[0]


def weighted_moments(data, weights):
    """Return ``(mean, cov, n_eff)`` of ``data`` under nonnegative sample weights.

    The covariance is normalized by the total weight (maximum-likelihood form).
    """
    data = np.asarray(data, dtype=float)
    weights = np.asarray(weights, dtype=float)
    if not np.all(np.isfinite(weights)):
        raise InvalidParameter("weights must be finite")
    if np.any(weights < 0):
        raise InvalidParameter("weights must be nonnegative")
    total = float(weights.sum())
    if total <= 0.0:
        raise DegenerateCluster("zero total weight")
    mean = weights @ data / total
    centered = data - mean
    cov = (centered * weights[:, None]).T @ centered / total
    cov = 0.5 * (cov + cov.T)
    return mean, cov, total


def shrink(cov, delta):
    """Convex blend ``(1 - delta) * cov + delta * (tr(cov) / d) * I``."""
    if not 0.0 <= delta <= 1.0:
        raise InvalidParameter(f"shrinkage delta must lie in [0, 1], got {delta}")
    cov = np.asarray(cov, dtype=float)
    d = cov.shape[0]
    target = np.trace(cov) / d
    out = (1.0 - delta) * cov
    out[np.diag_indices(d)] += delta * target
    return out


def oas_delta(cov, n_eff, d=None):
    """Oracle-approximating shrinkage intensity, capped to [0, 1].

    ``n_eff`` plays the role of the sample count, so fractional EM
    responsibilities can be used directly. The zero matrix gets full shrinkage.
    """
    cov = np.asarray(cov, dtype=float)
    if d is None:
        d = cov.shape[0]
    tr = float(np.trace(cov))
    tr2 = float(np.sum(cov * cov))  # tr(S^2) for symmetric S
    num = (1.0 - 2.0 / d) * tr2 + tr * tr
    den = (n_eff + 1.0 - 2.0 / d) * (tr2 + tr * tr / d)
    if den <= 0.0:
        return 1.0
    return float(min(1.0, max(0.0, num / den)))


def lw_delta(data, weights, mean, cov):
    """Ledoit-Wolf shrinkage intensity for weighted samples, in [0, 1].

    Reduces to the textbook estimator when all weights are one. Frobenius
    norms are divided by ``d``.
    """
    data = np.asarray(data, dtype=float)
    weights = np.asarray(weights, dtype=float)
    cov = np.asarray(cov, dtype=float)
    d = cov.shape[0]
    n_eff = float(weights.sum())
    if n_eff <= 0.0:
        raise DegenerateCluster("zero total weight")
    m = np.trace(cov) / d
    dev = cov.copy()
    dev[np.diag_indices(d)] -= m
    v2 = float(np.sum(dev * dev)) / d
    if v2 <= 0.0:
        return 0.0
    z = data - mean
    sq = np.einsum("ij,ij->i", z, z)
    # sum_i w_i ||z_i z_i^T - S||_F^2 = sum_i w_i ||z_i||^4 - n_eff ||S||_F^2
    spread = float(weights @ (sq * sq)) - n_eff * float(np.sum(cov * cov))
    b2_bar = max(spread, 0.0) / d / n_eff**2
    b2 = min(b2_bar, v2)
    return float(min(1.0, b2 / v2))


def regularize(cov, method, data=None, weights=None, mean=None, n_eff=None):
    """Apply ``method`` to an empirical covariance.

    ``data``/``weights``/``mean`` are needed for Ledoit-Wolf, ``n_eff`` (or
    ``weights``) for OAS. Empirical returns a copy unchanged; flooring of
    singular matrices happens in :func:`stable_cholesky`.
    """
    if isinstance(method, str):
        method = RegularizationMethod.parse(method)
    cov = np.asarray(cov, dtype=float)
    if method.kind == EMPIRICAL:
        return cov.copy()
    if method.kind == SHRUNK:
        return shrink(cov, method.delta)
    if method.kind == OAS:
        if n_eff is None:
            if weights is None:
                raise InvalidParameter("OAS needs n_eff or weights")
            n_eff = float(np.sum(weights))
        return shrink(cov, oas_delta(cov, n_eff, cov.shape[0]))
    if data is None or weights is None or mean is None:
        raise InvalidParameter("Ledoit-Wolf needs data, weights and mean")
    return shrink(cov, lw_delta(data, weights, mean, cov))


def cholesky(cov) -> CholeskyFactor:
    cov = np.asarray(cov, dtype=float)
    if not np.all(np.isfinite(cov)):
        raise NotPositiveDefinite("covariance has non-finite entries")
    try:
        lower = np.linalg.cholesky(cov)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(str(exc)) from exc
    diag = np.diag(lower)
    if not np.all(diag > 0.0) or not np.all(np.isfinite(lower)):
        raise NotPositiveDefinite("Cholesky factor has a non-positive diagonal")
    return CholeskyFactor(lower, float(2.0 * np.sum(np.log(diag))))


def _singular(factor: CholeskyFactor, cov) -> bool:
    # pivots this small mean a collapsed component, not a usable density
    scale = max(1.0, float(np.trace(cov)) / cov.shape[0])
    return float(np.min(np.diag(factor.lower))) ** 2 < SINGULAR_PIVOT * scale


def stable_cholesky(cov, retries=3):
    """Factorize ``cov``, adding a growing ridge if it is not positive definite.

    Returns ``(cov_used, factor)``. A matrix whose factorization fails, or
    whose smallest pivot is numerically zero, gets a ridge starting at
    ``1e-6 * max(1, tr(cov)/d)`` that doubles ``retries`` times before giving
    up with :class:`DegenerateCluster`.
    """
    cov = np.asarray(cov, dtype=float)
    try:
        factor = cholesky(cov)
        if not _singular(factor, cov):
            return cov, factor
    except NotPositiveDefinite:
        pass
    d = cov.shape[0]
    trace = np.trace(cov)
    eps = 1e-6 * max(1.0, trace / d if np.isfinite(trace) else 1.0)
    for _ in range(retries + 1):
        floored = cov + eps * np.eye(d)
        try:
            return floored, cholesky(floored)
        except NotPositiveDefinite:
            eps *= 2.0
    raise DegenerateCluster("covariance is not positive definite even after flooring")


def log_density(x, mean, chol: CholeskyFactor):
    """Log of the multivariate normal density at a single point."""
    return float(log_density_rows(np.atleast_2d(x), mean, chol)[0])


def log_density_rows(data, mean, chol: CholeskyFactor):
    """Vectorized :func:`log_density` over the rows of ``data``."""
    data = np.asarray(data, dtype=float)
    d = data.shape[1]
    sol = solve_triangular(chol.lower, (data - mean).T, lower=True, check_finite=False)
    maha2 = np.einsum("ij,ij->j", sol, sol)
    return -0.5 * (d * LOG_2PI + chol.log_det + maha2)


def mahalanobis(x, mean, chol: CholeskyFactor):
    diff = np.asarray(x, dtype=float) - np.asarray(mean, dtype=float)
    sol = solve_triangular(chol.lower, diff, lower=True, check_finite=False)
    return float(np.sqrt(sol @ sol))
