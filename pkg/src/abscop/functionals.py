"""Rank machinery, the empirical copula and per-observation moment statistics.

Every estimator here is written as the sample mean of a per-observation
statistic ``g_i``; the moment vector for a candidate value ``phi`` is then
simply ``g - phi``. Functions accept a single ``(n, d)`` matrix or a stack of
matrices ``(..., n, d)`` so that many pseudo-data realisations can be handled
in one call.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy.stats import rankdata

from .copula_models import FunctionalKind, Kind, UnsupportedDimensionError, rho_normaliser

KindLike = Union[FunctionalKind, Kind, str]

#: Multivariate tail indices condition on the first coordinate being extreme and
#: ask that all remaining coordinates follow; recorded in study metadata.
TAIL_CONVENTION = (
    "d > 2: lambda_L = #{i: all u_ij <= k/n} / #{i: u_i1 <= k/n}, "
    "lambda_U = #{i: all u_ij > (n-k)/n} / #{i: u_i1 > (n-k)/n} (0 when the denominator is 0); "
    "d = 2: lambda_L = (n/k) C_n(k/n, k/n), lambda_U = 2 - (n/k)(1 - C_n((n-k)/n, (n-k)/n))"
)


def as_kind(kind: KindLike) -> FunctionalKind:
    return kind if isinstance(kind, FunctionalKind) else FunctionalKind(Kind(kind))


def ranks(column) -> np.ndarray:
    """Midranks (1-based, ties averaged)."""
    return rankdata(np.asarray(column, dtype=float), method="average")


def pseudo_observations(data) -> np.ndarray:
    """Column-wise rank / (n + 1) transform of an ``(..., n, d)`` array."""
    x = np.asarray(data, dtype=float)
    if x.ndim < 2:
        raise ValueError("data must be at least two-dimensional (n, d)")
    n = x.shape[-2]
    if n < 2:
        raise ValueError(f"need at least 2 observations, got {n}")
    return rankdata(x, method="average", axis=-2) / (n + 1.0)


def empirical_copula_at(U, u) -> np.ndarray:
    """C_n(u) = (1/n) sum_i prod_j 1{U_ij <= u_j}; ``u`` may be ``(d,)`` or ``(m, d)``."""
    U = np.asarray(U, dtype=float)
    u = np.asarray(u, dtype=float)
    scalar = u.ndim == 1
    u = np.atleast_2d(u)
    out = np.array([np.mean(np.all(U <= p, axis=1)) for p in u])
    return out[0] if scalar else out


def is_ratio_form(kind: KindLike, d: int) -> bool:
    """Multivariate tail indices are ratios of counts rather than sample means."""
    return as_kind(kind).kind.is_tail and d > 2


def moment_parts(kind: KindLike, U):
    """``(a, c)`` such that the moment condition at ``phi`` is ``h = a - phi * c``.

    For mean-form kinds ``c`` is all ones and ``a`` is the per-observation
    statistic. For multivariate tail indices ``a`` flags rows with every
    coordinate in the tail and ``c`` flags rows whose first coordinate is.
    """
    kind = as_kind(kind)
    U = np.asarray(U, dtype=float)
    n, d = U.shape[-2], U.shape[-1]
    kind.check_dim(d)
    if not is_ratio_form(kind, d):
        a = _mean_form(kind, U)
        return a, np.ones_like(a)
    tk = kind.resolve_k(n)
    if kind.kind is Kind.LAMBDA_L:
        tail = U <= tk / n
    else:
        tail = U > (n - tk) / n
    return np.all(tail, axis=-1).astype(float), tail[..., 0].astype(float)


def _mean_form(kind: FunctionalKind, U: np.ndarray) -> np.ndarray:
    n, d = U.shape[-2], U.shape[-1]
    k = kind.kind
    if k is Kind.SPEARMAN_RHO:
        r = rankdata(U, method="average", axis=-2)
        return 12.0 * r[..., 0] * r[..., 1] / (n * n - 1.0) - 3.0 * (n + 1.0) / (n - 1.0)
    if k is Kind.RHO1:
        return rho_normaliser(d) * (2.0**d * np.prod(1.0 - U, axis=-1) - 1.0)
    if k is Kind.RHO2:
        return rho_normaliser(d) * (2.0**d * np.prod(U, axis=-1) - 1.0)
    tk = kind.resolve_k(n)
    scale = n / tk
    if k is Kind.LAMBDA_L:
        return scale * np.all(U <= tk / n, axis=-1)
    return 2.0 - scale * (1.0 - np.all(U <= (n - tk) / n, axis=-1))


def per_observation(kind: KindLike, U) -> np.ndarray:
    """Per-observation statistic whose mean is the point estimate.

    Returns an array of shape ``U.shape[:-1]`` (one value per row of each
    matrix). Tail kinds resolve ``k`` against the number of rows. For
    multivariate tail indices the joint-tail flags are divided by the share of
    rows in the conditioning tail (all zeros when that share is zero).
    """
    a, c = moment_parts(kind, U)
    if not is_ratio_form(kind, np.shape(U)[-1]):
        return a
    share = c.mean(axis=-1, keepdims=True)
    return np.divide(a, share, out=np.zeros_like(a), where=share > 0)


def point_statistic(kind: KindLike, U) -> np.ndarray:
    """Unclipped estimate: the mean-form average or, for multivariate tails, the count ratio."""
    a, c = moment_parts(kind, U)
    num, den = a.sum(axis=-1), c.sum(axis=-1)
    return np.divide(num, den, out=np.zeros_like(num), where=den > 0)


def estimate(kind: KindLike, U):
    """Point estimate of a functional from pseudo-data.

    Spearman's rho uses the rank formula, so it is invariant to how ``U`` was
    scaled. Tail indices are clipped to [0, 1]; other kinds are returned as is.
    """
    kind = as_kind(kind)
    val = point_statistic(kind, U)
    if kind.kind.is_tail:
        val = np.clip(val, 0.0, 1.0)
    return float(val) if np.ndim(val) == 0 else val


@dataclass(frozen=True)
class MomentVector:
    h: np.ndarray
    kind: FunctionalKind
    phi: float


def moment_vector(kind: KindLike, U, phi: float) -> MomentVector:
    kind = as_kind(kind)
    if not np.isfinite(phi):
        raise ValueError(f"phi must be finite, got {phi}")
    a, c = moment_parts(kind, U)
    return MomentVector(a - phi * c, kind, float(phi))


def check_pseudo_data(U) -> np.ndarray:
    """Validate an ``(n, d)`` pseudo-data matrix with entries strictly inside (0, 1)."""
    U = np.asarray(U, dtype=float)
    if U.ndim != 2:
        raise ValueError(f"pseudo-data must be a 2-d array, got shape {U.shape}")
    n, d = U.shape
    if n < 2 or d < 2:
        raise ValueError(f"pseudo-data needs n >= 2 and d >= 2, got {U.shape}")
    if not np.all((U > 0) & (U < 1)):
        raise ValueError("pseudo-data entries must lie strictly inside (0, 1)")
    return U


__all__ = [
    "TAIL_CONVENTION",
    "MomentVector",
    "UnsupportedDimensionError",
    "as_kind",
    "check_pseudo_data",
    "empirical_copula_at",
    "estimate",
    "is_ratio_form",
    "moment_parts",
    "moment_vector",
    "per_observation",
    "point_statistic",
    "pseudo_observations",
    "ranks",
]
