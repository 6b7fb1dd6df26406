"""Frequentist and fully parametric competitors.

* plug-in asymptotic variance of the rank correlation, which may come out
  negative for strongly dependent samples (reported, never clipped);
* nonparametric bootstrap intervals for any functional;
* random-walk Metropolis for a one-parameter bivariate Archimedean model,
  mapped to Spearman's rho through the copula's theta -> rho curve.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy import stats

from .copula_models import (
    CopulaSpec,
    Family,
    Kind,
    RngLike,
    UnsupportedDimensionError,
    _rng,
    copula_log_density,
    spearman_of_theta,
    spearman_table,
)
from .functionals import KindLike, as_kind, estimate


class TuningError(RuntimeError):
    """The random-walk sampler failed to accept any proposal."""


class IntervalMethod(str, enum.Enum):
    ASYMPTOTIC_RHO = "asymptotic"
    BOOTSTRAP = "bootstrap"


@dataclass(frozen=True)
class FrequentistInterval:
    point: float
    variance: float
    interval: Optional[tuple]
    method: IntervalMethod
    level: float = 0.95

    @property
    def valid(self) -> bool:
        return self.interval is not None

    @property
    def length(self) -> float:
        return self.interval[1] - self.interval[0] if self.interval else float("nan")


# --------------------------------------------------------------------------- asymptotic variance


def _ecdf_ranks(U):
    U = np.asarray(U, dtype=float)
    if U.ndim != 2 or U.shape[1] != 2:
        raise UnsupportedDimensionError("the asymptotic variance is only defined for d = 2")
    a = stats.rankdata(U[:, 0], method="max").astype(int)
    b = stats.rankdata(U[:, 1], method="max").astype(int)
    return a, b


def rho_single_index_terms(U) -> tuple:
    """(t1, t2) of :func:`rho_variance_terms` in O(n) time and memory."""
    a, b = _ecdf_ranks(U)
    n = len(a)
    f, g = a / n, b / n
    return float(np.mean(f * g)), float(np.mean((1 - f) ** 2 * (1 - g) ** 2))


def rho_variance_terms(U) -> np.ndarray:
    """Plug-in estimates of the five expectations in the variance of Spearman's rho.

    With ``F1``, ``F2`` the marginal ECDFs (``max-rank / n``) and ``S`` the
    empirical joint survival function ``S(x, y) = #{k: X_k > x, Y_k > y} / n``:

    * t1 = mean F1(X_i) F2(Y_i)
    * t2 = mean (1 - F1(X_i))^2 (1 - F2(Y_i))^2
    * t3 = mean_{i != j} S(X_i, Y_j) (1 - F1(X_j)) (1 - F2(Y_i))
    * t4 = mean_{i != j} (1 - F1(max(X_i, X_j))) (1 - F2(Y_i)) (1 - F2(Y_j))
    * t5 = mean_{i != j} (1 - F1(X_i)) (1 - F1(X_j)) (1 - F2(max(Y_i, Y_j)))

    The pairwise terms are V-statistics over ordered pairs, O(n^2) memory.
    """
    a, b = _ecdf_ranks(U)
    n = len(a)
    if n < 4:
        raise ValueError(f"need n >= 4, got {n}")
    f, g = a / n, b / n

    grid = np.zeros((n + 1, n + 1))
    np.add.at(grid, (a, b), 1.0)
    joint = grid.cumsum(0).cumsum(1)  # joint[r, q] = #{k: a_k <= r, b_k <= q}
    surv = 1.0 - f[:, None] - g[None, :] + joint[a[:, None], b[None, :]] / n

    sf, sg = 1.0 - f, 1.0 - g
    pairs = n * (n - 1.0)

    def offdiag_mean(M):
        return (M.sum() - np.trace(M)) / pairs

    t1, t2 = rho_single_index_terms(U)
    t3 = offdiag_mean(surv * sf[None, :] * sg[:, None])
    t4 = offdiag_mean(np.minimum(sf[:, None], sf[None, :]) * np.outer(sg, sg))
    t5 = offdiag_mean(np.outer(sf, sf) * np.minimum(sg[:, None], sg[None, :]))
    return np.array([t1, t2, t3, t4, t5])


def rho_asymptotic_variance(U) -> float:
    """144 (-9 t1^2 + t2 + 2 t3 + 2 t4 + 2 t5); the limit variance of sqrt(n) rho_n.

    Returned unclipped: the plug-in can be negative.
    """
    t1, t2, t3, t4, t5 = rho_variance_terms(U)
    return float(144.0 * (-9.0 * t1 * t1 + t2 + 2.0 * t3 + 2.0 * t4 + 2.0 * t5))


# --------------------------------------------------------------------------- intervals


def bootstrap_replicates(
    kind: KindLike,
    U,
    reps: int = 500,
    rng: RngLike = None,
    transform: Optional[Callable[[np.ndarray], np.ndarray]] = None,
    chunk: int = 100,
) -> np.ndarray:
    """Estimates on ``reps`` row-resampled copies of ``U``.

    ``transform`` is applied to each resampled matrix before estimation (e.g.
    re-ranking when ``U`` holds raw data).
    """
    kind = as_kind(kind)
    U = np.asarray(U, dtype=float)
    rng = _rng(rng)
    n = U.shape[0]
    out = np.empty(reps)
    for s in range(0, reps, chunk):
        m = min(chunk, reps - s)
        idx = rng.integers(0, n, size=(m, n))
        boot = U[idx]
        if transform is not None:
            boot = transform(boot)
        out[s : s + m] = estimate(kind, boot)
    return out


def freq_interval(
    kind: KindLike,
    U,
    level: float = 0.95,
    method: IntervalMethod = IntervalMethod.BOOTSTRAP,
    boot_reps: int = 500,
    rng: RngLike = None,
    transform: Optional[Callable[[np.ndarray], np.ndarray]] = None,
) -> FrequentistInterval:
    """Normal-theory interval ``point +/- z * sd``; no interval when the variance is negative."""
    kind = as_kind(kind)
    method = IntervalMethod(method)
    U = np.asarray(U, dtype=float)
    n = U.shape[0]
    point = estimate(kind, U if transform is None else transform(U))
    if method is IntervalMethod.ASYMPTOTIC_RHO:
        if kind.kind is not Kind.SPEARMAN_RHO:
            raise ValueError("the asymptotic interval is only available for spearman_rho")
        variance = rho_asymptotic_variance(U) / n
    else:
        reps = bootstrap_replicates(kind, U, boot_reps, rng, transform)
        # a constant replicate set has exactly zero spread; skip the rounding of np.var
        variance = float(np.var(reps, ddof=1)) if boot_reps > 1 and np.ptp(reps) > 0 else 0.0
    interval = None
    if variance >= 0:
        half = stats.norm.ppf(0.5 + level / 2.0) * math.sqrt(variance)
        interval = (point - half, point + half)
    return FrequentistInterval(point, variance, interval, method, level)


# --------------------------------------------------------------------------- parametric MCMC


@dataclass(frozen=True)
class TruncatedNormalPrior:
    mean: float
    sd: float
    lower: float = -np.inf
    upper: float = np.inf

    def logpdf(self, x: float) -> float:
        if not self.lower <= x <= self.upper:
            return -np.inf
        return -0.5 * ((x - self.mean) / self.sd) ** 2

    @property
    def dist(self):
        a, b = (self.lower - self.mean) / self.sd, (self.upper - self.mean) / self.sd
        return stats.truncnorm(a, b, loc=self.mean, scale=self.sd)


PARAMETRIC_PRIORS = {
    Family.CLAYTON: TruncatedNormalPrior(0.0, 10.0, -1.0, np.inf),
    Family.GUMBEL: TruncatedNormalPrior(1.0, 10.0, 1.0, np.inf),
    Family.FRANK: TruncatedNormalPrior(0.0, 10.0),
}


@dataclass
class ThetaChain:
    family: Family
    draws: np.ndarray
    acceptance_rate: float
    step: float


def metropolis_random_walk(
    log_target: Callable[[float], float],
    x0: float,
    iters: int,
    burn_in: int,
    rng: RngLike = None,
    step: float = 0.1,
    target_acceptance: float = 0.3,
    adapt_every: int = 50,
):
    """Gaussian random-walk Metropolis with the step tuned during burn-in.

    Returns (post burn-in draws, post burn-in acceptance rate, final step).
    """
    if not iters > burn_in >= 0:
        raise ValueError(f"need iters > burn_in >= 0, got iters={iters}, burn_in={burn_in}")
    rng = _rng(rng)
    x, lp = float(x0), log_target(x0)
    if not np.isfinite(lp):
        raise ValueError(f"starting point {x0} has zero target density")
    draws = np.empty(iters - burn_in)
    accepted = window = 0
    kept_accepted = 0
    noise = rng.standard_normal(iters)
    logu = np.log(rng.uniform(size=iters))
    for it in range(iters):
        y = x + step * noise[it]
        ly = log_target(y)
        if logu[it] < ly - lp:
            x, lp = y, ly
            accepted += 1
            if it >= burn_in:
                kept_accepted += 1
        window += 1
        if it < burn_in and window == adapt_every:
            rate = accepted / window
            if rate == 0 and step < 1e-8:
                raise TuningError(f"no proposal accepted with step {step:.3g} at iteration {it}")
            step *= math.exp(rate - target_acceptance) if rate > 0 else 0.5
            accepted = window = 0
        if it >= burn_in:
            draws[it - burn_in] = x
    rate = kept_accepted / (iters - burn_in)
    if kept_accepted == 0:
        raise TuningError(
            f"zero acceptance after burn-in (step={step:.3g}, last state={x:.6g}, log target={lp:.6g})"
        )
    return draws, rate, step


def copula_log_likelihood(family: Family, theta: float, U) -> float:
    U = np.asarray(U, dtype=float)
    if U.shape[0] == 0:
        return 0.0
    family = Family(family)
    if family is Family.FRANK and theta == 0.0:
        return 0.0
    try:
        spec = CopulaSpec(family, theta, 2)
    except ValueError:
        return -np.inf
    val = float(np.sum(copula_log_density(spec, U)))
    return val if np.isfinite(val) else -np.inf


def _start_value(family: Family, U) -> float:
    if U.shape[0] < 2:
        return {Family.CLAYTON: 0.5, Family.GUMBEL: 1.5, Family.FRANK: 1.0}[family]
    rho = float(np.clip(estimate(Kind.SPEARMAN_RHO, U), -0.95, 0.95))
    thetas, rhos = spearman_table(family)
    th = float(np.interp(rho, rhos, thetas))
    lo = {Family.CLAYTON: -0.9, Family.GUMBEL: 1.0 + 1e-3, Family.FRANK: -50.0}[family]
    th = max(th, lo)
    if family is Family.FRANK and abs(th) < 1e-3:
        th = 1e-3
    return th


def mh_theta_chain(
    U,
    family,
    prior: Optional[TruncatedNormalPrior] = None,
    iters: int = 4000,
    burn_in: int = 1000,
    rng: RngLike = None,
) -> ThetaChain:
    """Posterior draws of a bivariate Archimedean parameter under a truncated-normal prior."""
    family = Family(family)
    if family not in PARAMETRIC_PRIORS:
        raise ValueError(f"parametric chain not available for {family.value}")
    U = np.asarray(U, dtype=float).reshape(-1, 2) if np.size(U) == 0 else np.asarray(U, dtype=float)
    if U.shape[1] != 2:
        raise UnsupportedDimensionError("parametric chains are bivariate only")
    prior = prior or PARAMETRIC_PRIORS[family]

    def log_target(th):
        lp = prior.logpdf(th)
        if not np.isfinite(lp):
            return -np.inf
        return lp + copula_log_likelihood(family, th, U)

    x0 = _start_value(family, U)
    x0 = min(max(x0, prior.lower + 1e-6), prior.upper - 1e-6)
    step = 0.1 if U.shape[0] else prior.sd
    draws, rate, step = metropolis_random_walk(log_target, x0, iters, burn_in, rng, step=step)
    return ThetaChain(family, draws, rate, step)


def chain_to_rho(chain: ThetaChain) -> np.ndarray:
    """Map theta draws to Spearman's rho of the assumed family."""
    if len(chain.draws) == 0:
        raise ValueError("empty chain")
    return spearman_of_theta(chain.family, chain.draws)
