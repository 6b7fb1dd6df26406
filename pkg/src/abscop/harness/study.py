"""Seeded simulation studies and real-data analysis."""

from __future__ import annotations

import csv
import logging
import math
import platform
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
import scipy

from ..baselines import IntervalMethod, chain_to_rho, freq_interval, mh_theta_chain
from ..copula_models import FunctionalKind, Kind, sample_copula, true_functional
from ..engine import (
    INDEX_COUPLING,
    QUANTILE_RULE,
    ConfigurationError,
    MarginalMode,
    MarginalSource,
    PriorSpec,
    run_abscop,
    summarize,
)
from ..functionals import TAIL_CONVENTION, estimate, pseudo_observations
from .config import ExperimentConfig

log = logging.getLogger(__name__)

RECORD_FIELDS = (
    "dim", "rep", "kind", "method", "truth", "point", "variance", "lower", "upper",
    "length", "valid", "covers", "negative_variance", "ess",
)
AGGREGATE_FIELDS = (
    "dim", "kind", "method", "successes", "valid", "coverage", "avg_length", "negative_variance_fraction",
)


class IngestionError(ValueError):
    """A data file could not be read; the message gives the row and column."""


@dataclass
class StudyResult:
    records: list
    aggregates: list
    draws: list  # (dim, rep, kind label, resampled array)
    metadata: dict
    failures: list = field(default_factory=list)

    def aggregate(self, method: str, kind: str = None, dim: int = None) -> dict:
        rows = [
            a for a in self.aggregates
            if a["method"] == method and (kind is None or a["kind"] == kind) and (dim is None or a["dim"] == dim)
        ]
        if len(rows) != 1:
            raise KeyError(f"{len(rows)} aggregate rows match method={method}, kind={kind}, dim={dim}")
        return rows[0]


def stream(seed: int, *key: int) -> np.random.Generator:
    """Independent generator for a (seed, key) pair; the same on every worker."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=tuple(key)))


def _prior_for(cfg: ExperimentConfig, kind: FunctionalKind) -> PriorSpec:
    return PriorSpec(*cfg.prior) if cfg.prior else PriorSpec.default_for(kind)


def _record(dim, rep, kind, method, truth, point, variance=math.nan, interval=None, ess=math.nan) -> dict:
    lower, upper = interval if interval is not None else (math.nan, math.nan)
    valid = interval is not None
    covers = bool(valid and not math.isnan(truth) and lower <= truth <= upper)
    return {
        "dim": int(dim), "rep": int(rep), "kind": kind, "method": method,
        "truth": float(truth), "point": float(point), "variance": float(variance),
        "lower": float(lower), "upper": float(upper),
        "length": float(upper - lower) if valid else math.nan,
        "valid": int(valid), "covers": int(covers),
        "negative_variance": int(not math.isnan(variance) and variance < 0),
        "ess": float(ess),
    }


def analyse_matrix(data, cfg: ExperimentConfig, source: MarginalSource, dim: int, rep: int,
                   truths: Optional[dict] = None, key: tuple = ()):
    """ABSCop and the requested baselines on one data matrix.

    Returns (records, draws, failures). Every component gets its own random
    stream keyed by ``key`` plus a component index, so results do not depend
    on which other components ran.
    """
    truths = truths or {}
    records, draws, failures = [], [], []
    U = source.draw(data) if source.deterministic else pseudo_observations(data)
    # rank-based estimators must be recomputed on re-ranked resamples
    rerank = None if source.mode is MarginalMode.KNOWN_UNIFORM else pseudo_observations
    for j, kind in enumerate(cfg.kinds):
        label = kind.kind.value
        truth = truths.get(label, math.nan)
        try:
            post = run_abscop(data, source, kind, _prior_for(cfg, kind), cfg.B, stream(cfg.seed, *key, j, 0), cfg.level)
            s = post.summary
            records.append(_record(dim, rep, label, "abscop", truth, s.median, interval=(s.lower, s.upper), ess=post.ess))
            draws.append((dim, rep, label, post.resampled))
            records.append(_record(dim, rep, label, "estimate", truth, estimate(kind, U)))
        except Exception as exc:  # recorded, never fatal
            failures.append(_failure(dim, rep, label, "abscop", exc))
        if cfg.baselines.asymptotic and kind.kind is Kind.SPEARMAN_RHO:
            try:
                fi = freq_interval(kind, U, cfg.level, IntervalMethod.ASYMPTOTIC_RHO)
                records.append(_record(dim, rep, label, "asymptotic", truth, fi.point, fi.variance, fi.interval))
            except Exception as exc:
                failures.append(_failure(dim, rep, label, "asymptotic", exc))
        if cfg.baselines.bootstrap:
            try:
                fi = freq_interval(kind, U, cfg.level, IntervalMethod.BOOTSTRAP, cfg.baselines.bootstrap_reps,
                                   stream(cfg.seed, *key, j, 1), rerank)
                records.append(_record(dim, rep, label, "bootstrap", truth, fi.point, fi.variance, fi.interval))
            except Exception as exc:
                failures.append(_failure(dim, rep, label, "bootstrap", exc))
        if kind.kind is Kind.SPEARMAN_RHO:
            for f_idx, fam in enumerate(cfg.baselines.parametric):
                method = f"mcmc_{fam.value}"
                try:
                    chain = mh_theta_chain(U, fam, iters=cfg.baselines.mcmc_iters, burn_in=cfg.baselines.mcmc_burn_in,
                                           rng=stream(cfg.seed, *key, j, 2 + f_idx))
                    s = summarize(chain_to_rho(chain), cfg.level)
                    records.append(_record(dim, rep, label, method, truth, s.median, interval=(s.lower, s.upper)))
                except Exception as exc:
                    failures.append(_failure(dim, rep, label, method, exc))
    return records, draws, failures


def _failure(dim, rep, kind, method, exc) -> dict:
    log.warning("dim=%s rep=%s %s/%s failed: %s", dim, rep, kind, method, exc)
    return {"dim": int(dim), "rep": int(rep), "kind": kind, "method": method,
            "error": f"{type(exc).__name__}: {exc}"}


def _simulation_source(cfg: ExperimentConfig) -> MarginalSource:
    if cfg.marginals.mode is MarginalMode.KNOWN_UNIFORM:
        return MarginalSource.known_uniform()
    return MarginalSource.empirical_cdf()


def _one_repetition(args):
    cfg, dim, rep, truths = args
    try:
        data = sample_copula(cfg.truth.spec(dim), cfg.n, stream(cfg.seed, dim, rep, 0))
    except Exception as exc:
        return [], [], [_failure(dim, rep, "*", "simulate", exc)]
    return analyse_matrix(data, cfg, _simulation_source(cfg), dim, rep, truths, key=(dim, rep, 1))


def true_values(cfg: ExperimentConfig) -> dict:
    """dim -> {kind: population value}."""
    return {
        d: {k.kind.value: float(true_functional(cfg.truth.spec(d), k.kind)) for k in cfg.kinds}
        for d in cfg.truth.dims
    }


def aggregate(records) -> list:
    """One row per (dim, kind, method), sorted by that key.

    Coverage counts an invalid (missing) interval as not covering; average
    length is over valid intervals only.
    """
    groups = {}
    for r in records:
        groups.setdefault((r["dim"], r["kind"], r["method"]), []).append(r)
    rows = []
    for (dim, kind, method), rs in sorted(groups.items(), key=lambda kv: (kv[0][0], kv[0][1], kv[0][2])):
        valid = [r for r in rs if r["valid"]]
        has_interval = method != "estimate"
        rows.append({
            "dim": dim, "kind": kind, "method": method,
            "successes": len(rs), "valid": len(valid),
            "coverage": float(np.mean([r["covers"] for r in rs])) if has_interval else math.nan,
            "avg_length": float(np.mean([r["length"] for r in valid])) if valid else math.nan,
            "negative_variance_fraction": (
                float(np.mean([r["negative_variance"] for r in rs])) if method in ("asymptotic", "bootstrap") else math.nan
            ),
        })
    if any(math.isnan(r["truth"]) for r in records):
        for row in rows:
            row["coverage"] = math.nan
    return rows


def _versions() -> dict:
    from .. import __version__

    return {"abscop": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
            "python": platform.python_version()}


def _metadata(cfg: ExperimentConfig, failures, extra=None) -> dict:
    meta = {
        "config": cfg.echo(),
        "seed": cfg.seed,
        "versions": _versions(),
        "quantile_rule": QUANTILE_RULE,
        "tail_convention": TAIL_CONVENTION,
        "interval_rule": "coverage counts a missing interval (negative variance) as a miss; "
                         "avg_length averages valid intervals only",
        "random_streams": "SeedSequence(seed, spawn_key=(dim, repetition, ...)) per repetition and component",
        "failures": failures,
        "failure_count": len(failures),
    }
    if cfg.marginals.mode is MarginalMode.POSTERIOR_FILE:
        meta["index_coupling"] = INDEX_COUPLING
    if extra:
        meta.update(extra)
    return meta


def run_study(cfg: ExperimentConfig, workers: Optional[int] = None) -> StudyResult:
    """Simulate ``cfg.repetitions`` data sets per dimension and analyse each.

    Results are identical for any worker count: every repetition draws from
    its own stream and the reduction is ordered by (dim, repetition).
    """
    if cfg.truth is None:
        raise ConfigurationError("run_study needs a truth copula")
    workers = cfg.workers if workers is None else workers
    truths = true_values(cfg)
    tasks = [(cfg, d, r, truths[d]) for d in cfg.truth.dims for r in range(cfg.repetitions)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outputs = list(pool.map(_one_repetition, tasks, chunksize=max(1, len(tasks) // (4 * workers))))
    else:
        outputs = [_one_repetition(t) for t in tasks]
    records, draws, failures = [], [], []
    for rec, dr, fl in outputs:
        records += rec
        draws += dr
        failures += fl
    extra = {"truths": {str(d): v for d, v in truths.items()}}
    return StudyResult(records, aggregate(records), draws, _metadata(cfg, failures, extra), failures)


# --------------------------------------------------------------------------- real data


def read_data_csv(path) -> tuple:
    """(column names, ``(n, d)`` float array) from a CSV with a header row."""
    path = Path(path)
    try:
        fh = path.open(newline="")
    except OSError as exc:
        raise IngestionError(f"{path}: cannot open ({exc.strerror})") from None
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header:
            raise IngestionError(f"{path}: missing header row")
        header = [h.strip() for h in header]
        rows = []
        for line_no, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise IngestionError(
                    f"{path}: row {line_no} has {len(row)} fields, expected {len(header)} (ragged row)"
                )
            vals = []
            for col, cell in zip(header, row):
                try:
                    v = float(cell)
                except ValueError:
                    raise IngestionError(f"{path}: row {line_no}, column '{col}': non-numeric value {cell!r}") from None
                if not math.isfinite(v):
                    raise IngestionError(f"{path}: row {line_no}, column '{col}': non-finite value {cell!r}")
                vals.append(v)
            rows.append(vals)
    if len(header) < 2:
        raise IngestionError(f"{path}: need at least two columns, found {len(header)}")
    if len(rows) < 4:
        raise IngestionError(f"{path}: need at least four data rows, found {len(rows)}")
    return header, np.array(rows)


def _real_data_source(cfg: ExperimentConfig) -> MarginalSource:
    m = cfg.marginals
    base = Path(cfg.base_dir)
    if m.mode is MarginalMode.KNOWN_UNIFORM:
        return MarginalSource.known_uniform()
    if m.mode is MarginalMode.EMPIRICAL_CDF:
        return MarginalSource.empirical_cdf()
    if m.tensor:
        return MarginalSource.from_tensor_file(base / m.tensor)
    return MarginalSource.from_parameter_files([base / f for f in m.files], m.families)


def run_real_data(csv_path, cfg: ExperimentConfig) -> StudyResult:
    """Posterior summaries and frequentist point estimates for an observed data set."""
    columns, data = read_data_csv(csv_path)
    n, d = data.shape
    warnings_out = []
    for j, col in enumerate(columns):
        if np.ptp(data[:, j]) == 0:
            msg = (f"column '{col}' is constant: its pseudo-observations are all 0.5 and "
                   "dependence involving it is degenerate")
            warnings.warn(msg, RuntimeWarning, stacklevel=2)
            warnings_out.append(msg)
    for i, k in enumerate(cfg.kinds):
        try:
            k.check_dim(d)
            k.resolve_k(n)
        except ValueError as exc:
            raise ConfigurationError(f"kinds[{i}]: {exc}") from None
    source = _real_data_source(cfg)
    if source.mode is MarginalMode.POSTERIOR_FILE:
        source.column_tables(data)  # surface shape mismatches before any work
    records, draws, failures = analyse_matrix(data, cfg, source, d, 0, key=(0, 0, 1))
    extra = {"data": {"path": Path(csv_path).name, "columns": columns, "n": n, "d": d},
             "warnings": warnings_out}
    return StudyResult(records, aggregate(records), draws, _metadata(cfg, failures, extra), failures)
