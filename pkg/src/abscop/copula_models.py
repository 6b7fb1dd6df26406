"""Copula families used as data-generating truths.

Exact samplers, distribution functions, bivariate log-densities and the
population values of the dependence functionals estimated elsewhere in the
package. Archimedean families are sampled through their frailty (Marshall-Olkin)
representation, which works in any dimension without rejection.
"""

from __future__ import annotations

import enum
import functools
import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np
from scipy import special, stats
from scipy.interpolate import PchipInterpolator

U_EPS = 1e-12

RngLike = Union[np.random.Generator, int, None]


class ParameterDomainError(ValueError):
    """Raised when a copula parameter lies outside its family's domain."""


class UnsupportedDimensionError(ValueError):
    """Raised when an operation is only defined for a smaller dimension."""


class Family(str, enum.Enum):
    CLAYTON = "clayton"
    FRANK = "frank"
    GUMBEL = "gumbel"
    GAUSSIAN = "gaussian"
    INDEPENDENCE = "independence"


class Kind(str, enum.Enum):
    SPEARMAN_RHO = "spearman_rho"
    RHO1 = "rho1"
    RHO2 = "rho2"
    LAMBDA_U = "lambda_u"
    LAMBDA_L = "lambda_l"

    @property
    def is_tail(self) -> bool:
        return self in (Kind.LAMBDA_U, Kind.LAMBDA_L)


@dataclass(frozen=True)
class FunctionalKind:
    """A dependence functional, with the tail tuning ``k`` where relevant.

    ``k=None`` for a tail kind means "use floor(sqrt(n))" at estimation time.
    """

    kind: Kind
    k: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "kind", Kind(self.kind))
        if self.k is not None:
            if not self.kind.is_tail:
                raise ValueError(f"tuning k only applies to tail kinds, not {self.kind.value}")
            if int(self.k) != self.k or self.k <= 0:
                raise ValueError(f"tuning k must be a positive integer, got {self.k}")
            object.__setattr__(self, "k", int(self.k))

    def check_dim(self, d: int) -> None:
        if self.kind is Kind.SPEARMAN_RHO and d != 2:
            raise UnsupportedDimensionError(f"spearman_rho requires d = 2, got d = {d}")

    def resolve_k(self, n: int) -> int:
        k = self.k if self.k is not None else max(1, math.isqrt(n))
        if not 0 < k <= n:
            raise ValueError(f"tuning k must satisfy 0 < k <= n (k={k}, n={n})")
        return k

    @property
    def label(self) -> str:
        return self.kind.value if self.k is None else f"{self.kind.value}[k={self.k}]"


@dataclass(frozen=True)
class CopulaSpec:
    """Copula family, scalar parameter and dimension.

    For the Gaussian family ``theta`` is the common pairwise Pearson correlation
    of an equicorrelated latent normal vector.
    """

    family: Family
    theta: float = 0.0
    dim: int = 2

    def __post_init__(self):
        object.__setattr__(self, "family", Family(self.family))
        object.__setattr__(self, "theta", float(self.theta))
        d, th = self.dim, self.theta
        if int(d) != d or d < 2:
            raise ParameterDomainError(f"dimension must be an integer >= 2, got {d}")
        object.__setattr__(self, "dim", int(d))
        if not math.isfinite(th):
            raise ParameterDomainError(f"theta must be finite, got {th}")
        fam = self.family
        if fam is Family.CLAYTON:
            if d == 2 and not th > -1:
                raise ParameterDomainError(f"bivariate Clayton needs theta > -1, got {th}")
            if d > 2 and not th > 0:
                raise ParameterDomainError(f"Clayton with d > 2 needs theta > 0, got {th}")
        elif fam is Family.GUMBEL:
            if th < 1:
                raise ParameterDomainError(f"Gumbel needs theta >= 1, got {th}")
        elif fam is Family.FRANK:
            if th == 0:
                raise ParameterDomainError("Frank needs theta != 0")
            if d > 2 and th < 0:
                raise ParameterDomainError("Frank with d > 2 needs theta > 0")
        elif fam is Family.GAUSSIAN:
            if not -1 < th < 1:
                raise ParameterDomainError(f"Gaussian correlation must lie in (-1, 1), got {th}")
            if th <= -1.0 / (d - 1):
                raise ParameterDomainError(
                    f"equicorrelation {th} is not positive definite for d = {d} "
                    f"(needs r > {-1.0 / (d - 1):.6g})"
                )

    @classmethod
    def gaussian_from_spearman(cls, rho_s: float, dim: int = 2) -> "CopulaSpec":
        return cls(Family.GAUSSIAN, spearman_to_pearson(rho_s), dim)

    def with_theta(self, theta: float) -> "CopulaSpec":
        return CopulaSpec(self.family, theta, self.dim)


def spearman_to_pearson(rho_s: float) -> float:
    """Pearson correlation of a Gaussian copula with Spearman's rho ``rho_s``."""
    return 2.0 * math.sin(math.pi * rho_s / 6.0)


def pearson_to_spearman(r: float) -> float:
    return 6.0 / math.pi * math.asin(r / 2.0)


def _rng(rng: RngLike) -> np.random.Generator:
    return rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)


# --------------------------------------------------------------------------- sampling


def _positive_stable(alpha: float, size: int, rng: np.random.Generator) -> np.ndarray:
    # Laplace transform exp(-s**alpha), 0 < alpha < 1 (Kanter's representation)
    u = rng.uniform(0.0, np.pi, size)
    w = rng.exponential(size=size)
    return (np.sin(alpha * u) / np.sin(u) ** (1.0 / alpha)) * (
        np.sin((1.0 - alpha) * u) / w
    ) ** ((1.0 - alpha) / alpha)


def sample_copula(spec: CopulaSpec, n: int, rng: RngLike = None) -> np.ndarray:
    """Draw ``n`` iid points from the copula; returns an ``(n, d)`` array in (0, 1)."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    rng = _rng(rng)
    d, th, fam = spec.dim, spec.theta, spec.family

    if fam is Family.INDEPENDENCE or (fam is Family.GUMBEL and th == 1.0) or (
        fam is Family.CLAYTON and th == 0.0
    ):
        u = rng.uniform(size=(n, d))
    elif fam is Family.GAUSSIAN:
        corr = np.full((d, d), th)
        np.fill_diagonal(corr, 1.0)
        z = rng.standard_normal((n, d)) @ np.linalg.cholesky(corr).T
        u = special.ndtr(z)
    elif fam is Family.CLAYTON and th > 0:
        v = rng.gamma(1.0 / th, size=n)
        e = rng.exponential(size=(n, d))
        u = np.exp(-np.log1p(e / v[:, None]) / th)
    elif fam is Family.CLAYTON:
        # theta in (-1, 0), d == 2: conditional inversion
        u1, w = rng.uniform(size=(2, n))
        base = u1 ** (-th) * (w ** (-th / (1.0 + th)) - 1.0) + 1.0
        u = np.column_stack([u1, base ** (-1.0 / th)])
    elif fam is Family.GUMBEL:
        s = _positive_stable(1.0 / th, n, rng)
        e = rng.exponential(size=(n, d))
        u = np.exp(-((e / s[:, None]) ** (1.0 / th)))
    elif fam is Family.FRANK and th > 0:
        p = -math.expm1(-th)
        v = rng.logseries(p, size=n)
        e = rng.exponential(size=(n, d))
        u = -np.log1p(-p * np.exp(-e / v[:, None])) / th
    else:
        # Frank, theta < 0, d == 2: conditional inversion
        u1, w = rng.uniform(size=(2, n))
        u2 = -np.log1p(w * math.expm1(-th) / (w + (1.0 - w) * np.exp(-th * u1))) / th
        u = np.column_stack([u1, u2])
    return np.clip(u, U_EPS, 1.0 - U_EPS)


# --------------------------------------------------------------------------- cdf


def copula_cdf(spec: CopulaSpec, u) -> np.ndarray:
    """Evaluate C(u). ``u`` has shape ``(d,)`` or ``(m, d)``; values in [0, 1]."""
    u = np.asarray(u, dtype=float)
    scalar = u.ndim == 1
    u = np.atleast_2d(u)
    if u.shape[-1] != spec.dim:
        raise ValueError(f"points must have {spec.dim} coordinates, got {u.shape[-1]}")
    if np.any((u < 0) | (u > 1)):
        raise ValueError("copula_cdf needs coordinates in [0, 1]")
    d, th, fam = spec.dim, spec.theta, spec.family
    zero = np.any(u == 0.0, axis=1)
    out = np.zeros(len(u))
    uu = np.where(u == 0.0, 0.5, u)  # placeholder; masked out below

    with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
        if fam is Family.INDEPENDENCE or (fam is Family.CLAYTON and th == 0):
            val = np.prod(uu, axis=1)
        elif fam is Family.CLAYTON:
            base = np.sum(uu ** (-th) - 1.0, axis=1) + 1.0
            val = np.where(base > 0, np.maximum(base, 0.0) ** (-1.0 / th), 0.0)
        elif fam is Family.GUMBEL:
            s = np.sum((-np.log(uu)) ** th, axis=1)
            val = np.exp(-(s ** (1.0 / th)))
        elif fam is Family.FRANK:
            num = np.prod(np.expm1(-th * uu), axis=1)
            val = -np.log1p(num / math.expm1(-th) ** (d - 1)) / th
        else:
            val = _gaussian_cdf(th, uu)
    out[~zero] = val[~zero]
    lower = np.maximum(u.sum(axis=1) - d + 1.0, 0.0)
    out = np.clip(out, lower, u.min(axis=1))
    return out[0] if scalar else out


def _gaussian_cdf(r: float, u: np.ndarray) -> np.ndarray:
    d = u.shape[1]
    corr = np.full((d, d), r)
    np.fill_diagonal(corr, 1.0)
    z = special.ndtri(np.clip(u, U_EPS, 1.0))
    z = np.where(u >= 1.0, np.inf, z)
    return np.atleast_1d(stats.multivariate_normal.cdf(z, mean=np.zeros(d), cov=corr, abseps=1e-6, releps=1e-6))


# --------------------------------------------------------------------------- density


def copula_log_density(spec: CopulaSpec, u) -> np.ndarray:
    """Bivariate log-density log c(u, v) for points of shape ``(2,)`` or ``(m, 2)``."""
    if spec.dim != 2:
        raise UnsupportedDimensionError("copula_log_density is only available for d = 2")
    u = np.asarray(u, dtype=float)
    scalar = u.ndim == 1
    u = np.atleast_2d(u)
    x, y = u[:, 0], u[:, 1]
    th, fam = spec.theta, spec.family

    with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
        if fam is Family.INDEPENDENCE or (fam is Family.CLAYTON and th == 0):
            out = np.zeros(len(u))
        elif fam is Family.CLAYTON:
            a, b = -th * np.log(x), -th * np.log(y)
            m = np.maximum(a, b)
            inner = np.exp(a - m) + np.exp(b - m) - np.exp(-m)
            out = (
                math.log1p(th)
                - (1.0 + th) * (np.log(x) + np.log(y))
                - (2.0 + 1.0 / th) * (m + np.log(inner))
            )
            out = np.where(inner > 0, out, -np.inf)
        elif fam is Family.FRANK:
            denom = -math.expm1(-th) - np.expm1(-th * x) * np.expm1(-th * y)
            out = (
                math.log(th * -math.expm1(-th))
                - th * (x + y)
                - 2.0 * np.log(np.abs(denom))
            )
        elif fam is Family.GUMBEL:
            lx, ly = -np.log(x), -np.log(y)
            s = lx**th + ly**th
            a = s ** (1.0 / th)
            out = (
                -a
                + lx
                + ly
                + (th - 1.0) * (np.log(lx) + np.log(ly))
                + (1.0 / th - 2.0) * np.log(s)
                + np.log(a + th - 1.0)
            )
        else:
            z1, z2 = special.ndtri(x), special.ndtri(y)
            one = 1.0 - th * th
            out = -0.5 * math.log(one) - (th * th * (z1 * z1 + z2 * z2) - 2 * th * z1 * z2) / (
                2 * one
            )
    return out[0] if scalar else out


# --------------------------------------------------------------------------- functionals


def rho_normaliser(d: int) -> float:
    """h(d) = (d + 1) / (2**d - (d + 1))."""
    return (d + 1.0) / (2.0**d - (d + 1.0))


def gauss_legendre_01(m: int = 64):
    t, w = np.polynomial.legendre.leggauss(m)
    return 0.5 * (t + 1.0), 0.5 * w


def _product_grid(d: int, m: int):
    x, w = gauss_legendre_01(m)
    grids = np.meshgrid(*([x] * d), indexing="ij")
    wgrid = np.ones([m] * d)
    for j in range(d):
        shape = [1] * d
        shape[j] = m
        wgrid = wgrid * w.reshape(shape)
    return np.column_stack([g.ravel() for g in grids]), wgrid.ravel()


def _survival(spec: CopulaSpec, pts: np.ndarray) -> np.ndarray:
    # P(U > s) by inclusion-exclusion over coordinate subsets
    d = spec.dim
    out = np.zeros(len(pts))
    for mask in range(1 << d):
        idx = [j for j in range(d) if mask >> j & 1]
        sub = np.ones_like(pts)
        sub[:, idx] = pts[:, idx]
        out += (-1) ** len(idx) * copula_cdf(spec, sub)
    return out


MC_ORACLE_SAMPLES = 10_000_000
MC_ORACLE_SEED = 20_170_301


@functools.lru_cache(maxsize=64)
def _mc_rho_moments(spec: CopulaSpec, samples: int = MC_ORACLE_SAMPLES, seed: int = MC_ORACLE_SEED):
    rng = np.random.default_rng(seed)
    chunk = 500_000
    s_low = s_up = 0.0
    done = 0
    while done < samples:
        m = min(chunk, samples - done)
        u = sample_copula(spec, m, rng)
        s_low += np.prod(1.0 - u, axis=1).sum()
        s_up += np.prod(u, axis=1).sum()
        done += m
    return s_low / samples, s_up / samples


@functools.lru_cache(maxsize=256)
def _rho_truth(spec: CopulaSpec, kind: Kind) -> float:
    d = spec.dim
    h = rho_normaliser(d)
    if spec.family is Family.GAUSSIAN and d == 2:
        return pearson_to_spearman(spec.theta)
    if d <= 3 and spec.family is not Family.GAUSSIAN:
        pts, w = _product_grid(d, 64)
        if kind is Kind.RHO2 and d > 2:
            integral = float(w @ _survival(spec, pts))
        else:
            # for d = 2 both integrals coincide with the integral of C
            integral = float(w @ copula_cdf(spec, pts))
        return h * (2.0**d * integral - 1.0)
    e_low, e_up = _mc_rho_moments(spec)
    return h * (2.0**d * (e_up if kind is Kind.RHO2 else e_low) - 1.0)


def true_functional(spec: CopulaSpec, kind: Union[FunctionalKind, Kind, str]) -> float:
    """Population value of a dependence functional under ``spec``.

    Tail indices use the closed forms for conditioning on a single coordinate:
    Clayton lambda_L = d**(-1/theta), Gumbel lambda_U = sum_r (-1)**(r+1) C(d, r) r**(1/theta).
    Rank correlations use product Gauss-Legendre quadrature of the copula for
    d <= 3 and a fixed-seed Monte Carlo of 10**7 draws above that.
    """
    if not isinstance(kind, FunctionalKind):
        kind = FunctionalKind(Kind(kind))
    kind.check_dim(spec.dim)
    fam, th, d = spec.family, spec.theta, spec.dim
    k = kind.kind
    if fam is Family.INDEPENDENCE:
        return 0.0
    if k is Kind.LAMBDA_L:
        return d ** (-1.0 / th) if fam is Family.CLAYTON and th > 0 else 0.0
    if k is Kind.LAMBDA_U:
        if fam is Family.GUMBEL:
            r = np.arange(1, d + 1)
            return float(np.sum((-1.0) ** (r + 1) * special.comb(d, r) * r ** (1.0 / th)))
        return 0.0
    if k is Kind.SPEARMAN_RHO:
        return _rho_truth(spec, Kind.RHO1)
    return _rho_truth(spec, k)


# --------------------------------------------------------------------------- theta <-> rho


_THETA_GRID = {
    Family.CLAYTON: np.concatenate([np.linspace(-0.99, -0.01, 50), np.geomspace(0.01, 40.0, 200)]),
    Family.FRANK: np.concatenate([-np.geomspace(60.0, 0.01, 150), np.geomspace(0.01, 60.0, 150)]),
    Family.GUMBEL: 1.0 + np.concatenate([[0.0], np.geomspace(1e-3, 40.0, 200)]),
}


@functools.lru_cache(maxsize=8)
def spearman_table(family: Family):
    """(theta grid, rho grid) for a bivariate Archimedean family, by quadrature."""
    family = Family(family)
    thetas = _THETA_GRID[family]
    pts, w = _product_grid(2, 64)
    rhos = np.array([12.0 * float(w @ copula_cdf(CopulaSpec(family, t, 2), pts)) - 3.0 for t in thetas])
    return thetas, rhos


def spearman_of_theta(family: Family, theta) -> np.ndarray:
    """Spearman's rho of a bivariate Archimedean copula, via a cached quadrature table.

    Monotone cubic interpolation in theta; exact (up to quadrature) at the grid nodes.
    """
    family = Family(family)
    thetas, _ = spearman_table(family)
    theta = np.asarray(theta, dtype=float)
    return _spearman_interpolant(family)(np.clip(theta, thetas[0], thetas[-1]))


@functools.lru_cache(maxsize=8)
def _spearman_interpolant(family: Family) -> PchipInterpolator:
    return PchipInterpolator(*spearman_table(family))
