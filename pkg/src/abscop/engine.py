"""Sampling-importance-resampling posterior for a copula functional.

Candidate values are drawn from a uniform prior, each is weighted by its
exponentially tilted empirical likelihood on a freshly drawn pseudo-data
matrix (so uncertainty about the marginals is integrated over the proposals),
and the weighted cloud is resampled with replacement.
"""

from __future__ import annotations

import csv
import enum
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Optional, Sequence

import numpy as np
from scipy import stats

from .betel import log_betel_many
from .copula_models import FunctionalKind, Kind, RngLike, _rng
from .functionals import KindLike, as_kind, moment_parts, point_statistic, pseudo_observations

QUANTILE_RULE = "linear interpolation between order statistics (Hyndman-Fan type 7)"
INDEX_COUPLING = "marginal draw indices s_j sampled independently per column and per proposal"


class ConfigurationError(ValueError):
    """Inconsistent marginal source or engine configuration."""


class DegeneratePosterior(RuntimeError):
    """Every proposal received zero weight."""


class MarginalMode(str, enum.Enum):
    KNOWN_UNIFORM = "known_uniform"
    EMPIRICAL_CDF = "empirical_cdf"
    POSTERIOR_FILE = "posterior_file"


@dataclass
class MarginalSource:
    """How raw data are turned into pseudo-data.

    For ``POSTERIOR_FILE`` the source holds, for every column ``j``, an
    ``(S_j, n)`` table of already transformed columns ``F_j(x_ij; lambda_j^(s))``
    when bound to data, or the recipe to build it (parameter draws plus a
    ``scipy.stats`` family name, or a precomputed ``(S, n, d)`` tensor).
    """

    mode: MarginalMode
    families: Optional[Sequence[str]] = None
    parameter_draws: Optional[Sequence[Mapping[str, np.ndarray]]] = None
    tensor: Optional[np.ndarray] = None

    def __post_init__(self):
        self.mode = MarginalMode(self.mode)
        if self.mode is MarginalMode.POSTERIOR_FILE:
            if self.tensor is None and self.parameter_draws is None:
                raise ConfigurationError("posterior_file mode needs parameter draws or a pseudo-data tensor")
            if self.parameter_draws is not None:
                if self.families is None or len(self.families) != len(self.parameter_draws):
                    raise ConfigurationError("one CDF family name is needed per column of parameter draws")
                for j, draws in enumerate(self.parameter_draws):
                    sizes = {len(np.atleast_1d(v)) for v in draws.values()}
                    if len(sizes) != 1 or 0 in sizes:
                        raise ConfigurationError(f"column {j}: parameter draws must be non-empty and aligned")
                for fam in self.families:
                    if not hasattr(stats, fam):
                        raise ConfigurationError(f"unknown CDF family {fam!r} (expected a scipy.stats name)")
            if self.tensor is not None:
                self.tensor = np.asarray(self.tensor, dtype=float)
                if self.tensor.ndim != 3 or self.tensor.shape[0] < 1:
                    raise ConfigurationError("pseudo-data tensor must have shape (S, n, d) with S >= 1")

    @classmethod
    def known_uniform(cls) -> "MarginalSource":
        return cls(MarginalMode.KNOWN_UNIFORM)

    @classmethod
    def empirical_cdf(cls) -> "MarginalSource":
        return cls(MarginalMode.EMPIRICAL_CDF)

    @classmethod
    def from_parameter_draws(cls, families, draws) -> "MarginalSource":
        draws = [{k: np.atleast_1d(np.asarray(v, dtype=float)) for k, v in d.items()} for d in draws]
        return cls(MarginalMode.POSTERIOR_FILE, families=list(families), parameter_draws=draws)

    @classmethod
    def from_parameter_files(cls, paths, families) -> "MarginalSource":
        """One CSV per column; header = keyword arguments of the scipy distribution."""
        draws = []
        for p in paths:
            rows = _read_numeric_csv(p)
            draws.append({k: np.array([r[k] for r in rows]) for k in rows[0]} if rows else {})
        return cls.from_parameter_draws(families, draws)

    @classmethod
    def from_pseudo_tensor(cls, tensor) -> "MarginalSource":
        return cls(MarginalMode.POSTERIOR_FILE, tensor=np.asarray(tensor, dtype=float))

    @classmethod
    def from_tensor_file(cls, path) -> "MarginalSource":
        """Flat CSV with columns ``draw,row,col,value`` (0-based indices)."""
        rows = _read_numeric_csv(path)
        if not rows:
            raise ConfigurationError(f"{path}: empty pseudo-data tensor file")
        idx = np.array([[r["draw"], r["row"], r["col"]] for r in rows], dtype=int)
        val = np.array([r["value"] for r in rows])
        shape = idx.max(axis=0) + 1
        tensor = np.full(shape, np.nan)
        tensor[idx[:, 0], idx[:, 1], idx[:, 2]] = val
        if np.isnan(tensor).any():
            raise ConfigurationError(f"{path}: pseudo-data tensor has missing (draw, row, col) cells")
        return cls.from_pseudo_tensor(tensor)

    @property
    def deterministic(self) -> bool:
        return self.mode is not MarginalMode.POSTERIOR_FILE or all(s == 1 for s in self.draws_available)

    @property
    def draws_available(self) -> list:
        if self.mode is not MarginalMode.POSTERIOR_FILE:
            return []
        if self.tensor is not None:
            return [self.tensor.shape[0]] * self.tensor.shape[2]
        return [len(next(iter(d.values()))) for d in self.parameter_draws]

    def column_tables(self, data: np.ndarray) -> list:
        """Per column, the ``(S_j, n)`` array of transformed values."""
        data = np.asarray(data, dtype=float)
        n, d = data.shape
        if self.tensor is not None:
            if self.tensor.shape[1:] != (n, d):
                raise ConfigurationError(
                    f"pseudo-data tensor has shape {self.tensor.shape[1:]}, data has {(n, d)}"
                )
            tables = [self.tensor[:, :, j] for j in range(d)]
        else:
            if len(self.parameter_draws) != d:
                raise ConfigurationError(
                    f"posterior file covers {len(self.parameter_draws)} columns, data has {d}"
                )
            tables = []
            for j, (fam, draws) in enumerate(zip(self.families, self.parameter_draws)):
                dist = getattr(stats, fam)
                kw = {k: v[:, None] for k, v in draws.items()}
                tables.append(dist.cdf(data[None, :, j], **kw))
        return [np.clip(t, 1e-12, 1 - 1e-12) for t in tables]

    def draw(self, data, rng: RngLike = None) -> np.ndarray:
        """One pseudo-data realisation for ``data``."""
        data = np.asarray(data, dtype=float)
        if self.mode is MarginalMode.KNOWN_UNIFORM:
            if not np.all((data > 0) & (data < 1)):
                raise ConfigurationError("known_uniform mode needs data strictly inside (0, 1)")
            return data
        if self.mode is MarginalMode.EMPIRICAL_CDF:
            return pseudo_observations(data)
        rng = _rng(rng)
        tables = self.column_tables(data)
        s = [rng.integers(t.shape[0]) for t in tables]
        return np.column_stack([t[sj] for t, sj in zip(tables, s)])


def draw_pseudo_data(data, source: MarginalSource, rng: RngLike = None) -> np.ndarray:
    return source.draw(data, rng)


@dataclass(frozen=True)
class PriorSpec:
    lower: float
    upper: float

    def __post_init__(self):
        if not (np.isfinite(self.lower) and np.isfinite(self.upper) and self.lower < self.upper):
            raise ValueError(f"prior bounds must be finite with lower < upper, got ({self.lower}, {self.upper})")

    @classmethod
    def default_for(cls, kind: KindLike) -> "PriorSpec":
        return cls(0.0, 1.0) if as_kind(kind).kind.is_tail else cls(-1.0, 1.0)

    def sample(self, size: int, rng: np.random.Generator) -> np.ndarray:
        return rng.uniform(self.lower, self.upper, size)


@dataclass(frozen=True)
class PosteriorSummary:
    median: float
    lower: float
    upper: float
    level: float

    @property
    def length(self) -> float:
        return self.upper - self.lower

    def covers(self, value: float) -> bool:
        return self.lower <= value <= self.upper


@dataclass
class WeightedPosterior:
    proposals: np.ndarray
    log_weights: np.ndarray
    resampled: np.ndarray
    ess: float
    summary: PosteriorSummary
    point_estimate: Optional[float] = None
    metadata: dict = field(default_factory=dict)


def normalized_weights(log_weights) -> np.ndarray:
    lw = np.asarray(log_weights, dtype=float)
    finite = np.isfinite(lw)
    if not finite.any():
        raise DegeneratePosterior("no proposal has a finite weight")
    w = np.where(finite, np.exp(lw - lw[finite].max()), 0.0)
    return w / w.sum()


def effective_sample_size(log_weights) -> float:
    w = normalized_weights(log_weights)
    return float(1.0 / np.sum(w * w))


def resample(proposals, log_weights, rng: RngLike = None, size: Optional[int] = None) -> np.ndarray:
    """Multinomial resampling with probabilities proportional to ``exp(log_weights)``."""
    proposals = np.asarray(proposals, dtype=float)
    p = normalized_weights(log_weights)
    rng = _rng(rng)
    idx = rng.choice(proposals.size, size=proposals.size if size is None else size, replace=True, p=p)
    return proposals[idx]


def summarize(sample, level: float = 0.95) -> PosteriorSummary:
    """Median and equal-tail interval (type-7 quantiles)."""
    sample = np.asarray(sample, dtype=float)
    if sample.size == 0:
        raise ValueError("cannot summarise an empty sample")
    if not 0 < level < 1:
        raise ValueError(f"level must be in (0, 1), got {level}")
    a = (1.0 - level) / 2.0
    lo, med, hi = np.quantile(sample, [a, 0.5, 1.0 - a], method="linear")
    return PosteriorSummary(float(med), float(lo), float(hi), level)


def run_abscop(
    data,
    source: MarginalSource,
    kind: KindLike,
    prior: Optional[PriorSpec] = None,
    B: int = 10_000,
    rng: RngLike = None,
    level: float = 0.95,
    chunk: int = 1000,
) -> WeightedPosterior:
    """Approximate posterior sample for a dependence functional.

    Each of the ``B`` proposals gets its own pseudo-data realisation from
    ``source``; when the source is deterministic this collapses to a single
    matrix shared by all proposals.
    """
    kind = as_kind(kind)
    data = np.asarray(data, dtype=float)
    if data.ndim != 2:
        raise ValueError(f"data must be an (n, d) array, got shape {data.shape}")
    n, d = data.shape
    kind.check_dim(d)
    if B < 100:
        raise ValueError(f"B must be at least 100, got {B}")
    prior = prior or PriorSpec.default_for(kind)
    rng = _rng(rng)

    phis = prior.sample(B, rng)
    point = None
    if source.deterministic:
        U = source.draw(data, rng)
        a, c = moment_parts(kind, U)
        point = float(point_statistic(kind, U))
        log_w = log_betel_many(a, phis, c)
    else:
        tables = source.column_tables(data)
        sizes = np.array([t.shape[0] for t in tables])
        log_w = np.empty(B)
        for s in range(0, B, chunk):
            m = min(chunk, B - s)
            idx = rng.integers(0, sizes, size=(m, d))
            U = np.stack([tables[j][idx[:, j]] for j in range(d)], axis=-1)
            a, c = moment_parts(kind, U)
            log_w[s : s + m] = log_betel_many(a, phis[s : s + m], c)

    if not np.isfinite(log_w).any():
        raise DegeneratePosterior(
            f"all {B} proposals from the prior range [{prior.lower}, {prior.upper}] are infeasible "
            f"for {kind.label}; the prior does not overlap the range of the moment statistic"
        )
    draws = resample(phis, log_w, rng)
    meta = {
        "kind": kind.label,
        "prior": [prior.lower, prior.upper],
        "B": B,
        "quantile_rule": QUANTILE_RULE,
        "marginal_mode": source.mode.value,
    }
    if kind.kind.is_tail:
        meta["k"] = kind.resolve_k(n)
    if not source.deterministic:
        meta["index_coupling"] = INDEX_COUPLING
    return WeightedPosterior(
        proposals=phis,
        log_weights=log_w,
        resampled=draws,
        ess=effective_sample_size(log_w),
        summary=summarize(draws, level),
        point_estimate=point,
        metadata=meta,
    )


def _read_numeric_csv(path) -> list:
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        rows = []
        for i, row in enumerate(reader, start=2):
            try:
                rows.append({k.strip(): float(v) for k, v in row.items()})
            except (TypeError, ValueError) as exc:
                raise ConfigurationError(f"{path}:{i}: non-numeric or missing value ({exc})") from None
    return rows


__all__ = [
    "ConfigurationError",
    "DegeneratePosterior",
    "FunctionalKind",
    "Kind",
    "MarginalMode",
    "MarginalSource",
    "PosteriorSummary",
    "PriorSpec",
    "WeightedPosterior",
    "draw_pseudo_data",
    "effective_sample_size",
    "point_statistic",
    "resample",
    "run_abscop",
    "summarize",
]
