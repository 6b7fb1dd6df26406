"""Acceptance suite: one test class per criterion, with a PASS/FAIL summary line each.

Run with ``pytest tests/test_acceptance.py -v`` (or execute this file directly).
Simulation-based criteria run the same seeded harness the CLI uses, so the
numbers printed here can be regenerated with ``abscop simulate``.
"""

from __future__ import annotations

import math
import os
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest
from scipy import optimize
from scipy.special import logsumexp, softmax

from abscop.betel import log_betel, solve_tilt
from abscop.copula_models import CopulaSpec, Family, Kind, sample_copula, true_functional
from abscop.functionals import estimate, per_observation, point_statistic, pseudo_observations
from abscop.harness import parse_config, run_study

pytestmark = pytest.mark.acceptance

WORKERS = os.cpu_count() or 1
TESTS_DIR = Path(__file__).resolve().parent

_VERDICTS: dict = {}


def record(criterion: int, part: str, ok: bool, detail: str) -> None:
    """Store a verdict for the summary, then assert it."""
    _VERDICTS.setdefault(criterion, []).append((part, bool(ok), detail))
    assert ok, f"criterion {criterion} ({part}): {detail}"


@pytest.fixture(scope="module", autouse=True)
def summary(request):
    yield
    reporter = request.config.pluginmanager.get_plugin("terminalreporter")
    write = reporter.write_line if reporter is not None else print
    write("")
    for crit in sorted(_VERDICTS):
        parts = _VERDICTS[crit]
        status = "PASS" if all(ok for _, ok, _ in parts) else "FAIL"
        detail = "; ".join(f"{p}: {'ok' if ok else 'FAILED'} ({d})" for p, ok, d in parts)
        write(f"CRITERION {crit}: {status}  {detail}")


def study(raw: dict):
    return run_study(parse_config(raw), workers=WORKERS)


# --------------------------------------------------------------------------- criterion 1


COVERAGE_REFERENCE = {"clayton": (1.076, 0.2597), "frank": (3.45, 0.2735)}
WIDTH_INFLATION = math.sqrt(1000 / 500)


@pytest.fixture(scope="module")
def rho_coverage_results():
    out = {}
    for fam, (theta, _) in COVERAGE_REFERENCE.items():
        out[fam] = study({
            "schema_version": 1, "study": f"rho_coverage_{fam}",
            "truth": {"family": fam, "theta": theta, "dim": 2},
            "n": 500, "repetitions": 100, "kinds": ["spearman_rho"], "B": 5000,
            "baselines": {"asymptotic": True}, "seed": 20170301,
        })
    return out


class TestCriterion1SpearmanCoverage:
    @pytest.mark.parametrize("family", list(COVERAGE_REFERENCE))
    def test_bayesian_coverage(self, rho_coverage_results, family):
        row = rho_coverage_results[family].aggregate("abscop")
        record(1, f"{family} coverage", row["coverage"] >= 0.95, f"{row['coverage']:.3f} >= 0.95")

    @pytest.mark.parametrize("family", list(COVERAGE_REFERENCE))
    def test_bayesian_length(self, rho_coverage_results, family):
        row = rho_coverage_results[family].aggregate("abscop")
        target = COVERAGE_REFERENCE[family][1] * WIDTH_INFLATION
        ok = abs(row["avg_length"] - target) <= 0.08
        record(1, f"{family} length", ok, f"{row['avg_length']:.4f} vs {target:.4f} +/- 0.08")


# --------------------------------------------------------------------------- criterion 2


class TestCriterion2NegativeVariance:
    @pytest.mark.parametrize("truth, minimum", [
        ({"family": "gaussian", "spearman": 0.8, "dim": 2}, 95),
        ({"family": "gumbel", "theta": 2.0, "dim": 2}, 90),
    ], ids=["gaussian-0.8", "gumbel-2"])
    def test_plug_in_variance_negative(self, truth, minimum):
        res = study({
            "schema_version": 1, "study": "negative_variance", "truth": truth,
            "n": 1000, "repetitions": 100, "kinds": ["spearman_rho"], "B": 1000,
            "baselines": {"asymptotic": True}, "seed": 20170305,
        })
        negatives = sum(r["negative_variance"] for r in res.records if r["method"] == "asymptotic")
        record(2, truth["family"], negatives >= minimum, f"{negatives}/100 negative, need >= {minimum}")


# --------------------------------------------------------------------------- criterion 3


@pytest.fixture(scope="module")
def gumbel_data():
    return study({
        "schema_version": 1, "study": "misspecified_gumbel",
        "truth": {"family": "gumbel", "theta": 2.0, "dim": 2},
        "n": 1000, "repetitions": 50, "kinds": ["spearman_rho"], "B": 10000,
        "baselines": {"parametric": ["clayton"]}, "seed": 20170313,
    })


@pytest.fixture(scope="module")
def clayton_data():
    return study({
        "schema_version": 1, "study": "misspecified_clayton",
        "truth": {"family": "clayton", "theta": 1.076, "dim": 2},
        "n": 1000, "repetitions": 50, "kinds": ["spearman_rho"], "B": 10000,
        "baselines": {"parametric": ["gumbel"]}, "seed": 20170310,
    })


class TestCriterion3Misspecification:
    def test_clayton_model_on_gumbel_data(self, gumbel_data):
        cov = gumbel_data.aggregate("mcmc_clayton")["coverage"]
        record(3, "clayton model / gumbel data", cov <= 0.15, f"coverage {cov:.3f} <= 0.15")

    def test_abscop_on_gumbel_data(self, gumbel_data):
        cov = gumbel_data.aggregate("abscop")["coverage"]
        record(3, "abscop / gumbel data", cov >= 0.90, f"coverage {cov:.3f} >= 0.90")

    def test_gumbel_model_on_clayton_data(self, clayton_data):
        cov = clayton_data.aggregate("mcmc_gumbel")["coverage"]
        record(3, "gumbel model / clayton data", cov <= 0.20, f"coverage {cov:.3f} <= 0.20")


# --------------------------------------------------------------------------- criterion 4


def clayton_lower_formula(d: int, theta: float) -> float:
    return math.pow(d, -1.0 / theta)


def gumbel_upper_formula(d: int, theta: float) -> float:
    return math.fsum((-1) ** (r + 1) * math.comb(d, r) * math.pow(r, 1.0 / theta) for r in range(1, d + 1))


class TestCriterion4ClosedForms:
    DIMS = range(2, 11)

    def test_table_formulas(self):
        worst = 0.0
        for d in self.DIMS:
            for th in (0.3, 1.076, 2.0, 5.0):
                spec = CopulaSpec(Family.CLAYTON, th, d)
                worst = max(worst, abs(true_functional(spec, Kind.LAMBDA_L) - clayton_lower_formula(d, th)))
                worst = max(worst, abs(true_functional(spec, Kind.LAMBDA_U)))
            for th in (1.2, 2.0, 3.5):
                spec = CopulaSpec(Family.GUMBEL, th, d)
                worst = max(worst, abs(true_functional(spec, Kind.LAMBDA_U) - gumbel_upper_formula(d, th)))
                worst = max(worst, abs(true_functional(spec, Kind.LAMBDA_L)))
            for th in (0.5, 3.45, 10.0):
                spec = CopulaSpec(Family.FRANK, th, d)
                worst = max(worst, abs(true_functional(spec, Kind.LAMBDA_L)), abs(true_functional(spec, Kind.LAMBDA_U)))
        record(4, "formula table", worst <= 1e-12, f"max abs deviation {worst:.2e} <= 1e-12")

    def test_gumbel_d6_upper(self):
        v = true_functional(CopulaSpec(Family.GUMBEL, 2.0, 6), Kind.LAMBDA_U)
        record(4, "gumbel d=6", abs(v - 0.395) <= 5e-4, f"{v:.5f} vs 0.395 +/- 5e-4")

    def test_clayton_d2_lower(self):
        v = true_functional(CopulaSpec(Family.CLAYTON, 1.076, 2), Kind.LAMBDA_L)
        record(4, "clayton d=2", abs(v - 0.525) <= 5e-4, f"{v:.5f} vs 0.525 +/- 5e-4")


# --------------------------------------------------------------------------- criterion 5


RHO_TARGETS = {Kind.RHO1: 0.514, Kind.RHO2: 0.346}
CLAYTON_D6 = CopulaSpec(Family.CLAYTON, 1.076, 6)


@pytest.fixture(scope="module")
def clayton_d6_pseudo():
    return pseudo_observations(sample_copula(CLAYTON_D6, 100_000, np.random.default_rng(20170321)))


class TestCriterion5MultivariateRho:
    @pytest.mark.parametrize("kind", list(RHO_TARGETS), ids=lambda k: k.value)
    def test_estimate_near_target(self, clayton_d6_pseudo, kind):
        v = float(estimate(kind, clayton_d6_pseudo))
        target = RHO_TARGETS[kind]
        record(5, f"{kind.value} estimate", abs(v - target) <= 0.02, f"{v:.4f} vs {target} +/- 0.02")

    @pytest.mark.parametrize("kind", list(RHO_TARGETS), ids=lambda k: k.value)
    def test_oracle_confirms_target(self, kind):
        v = true_functional(CLAYTON_D6, kind)
        target = RHO_TARGETS[kind]
        record(5, f"{kind.value} oracle", abs(v - target) <= 0.02, f"{v:.4f} vs {target} +/- 0.02")


# --------------------------------------------------------------------------- criterion 6


T_GRID = np.linspace(-50.0, 50.0, 1_000_001)  # spacing 1e-4


def grid_log_likelihood(h: np.ndarray) -> float:
    """Exponential-tilting log-likelihood from a brute-force search over t.

    The grid brackets the minimiser of the convex dual ``log sum exp(t h)``;
    bisection-type root finding on its derivative inside the bracket then
    pins the minimiser down to machine precision.
    """
    best_val, best_t = math.inf, 0.0
    for chunk in np.array_split(T_GRID, 100):
        vals = logsumexp(np.outer(chunk, h), axis=1)
        i = int(np.argmin(vals))
        if vals[i] < best_val:
            best_val, best_t = float(vals[i]), float(chunk[i])
    step = T_GRID[1] - T_GRID[0]
    t = optimize.brentq(lambda t: softmax(t * h) @ h, best_t - step, best_t + step, xtol=1e-15)
    return t * h.sum() - h.size * logsumexp(t * h)


def random_moment_vector(rng: np.random.Generator) -> np.ndarray:
    n = int(rng.integers(10, 201))
    if rng.random() < 0.5:
        h = rng.normal(size=n) + rng.uniform(-0.5, 0.5)
    else:
        h = rng.exponential(size=n) - rng.uniform(0.3, 1.5)
    if not h.min() < 0 < h.max():
        h[0], h[1] = -1.0, 1.0
    return h


class TestCriterion6SolverOracle:
    def test_dual_matches_grid_search(self):
        rng = np.random.default_rng(6)
        worst = 0.0
        for _ in range(50):
            h = random_moment_vector(rng)
            worst = max(worst, abs(solve_tilt(h).log_likelihood - grid_log_likelihood(h)))
        record(6, "grid search", worst <= 1e-6, f"max |dual - grid| = {worst:.2e} <= 1e-6")

    def test_boundary_is_minus_infinity(self):
        cases = [np.array([0.0, 1.0, 2.0]), np.array([0.5, 1.0, 3.0]), np.array([-2.0, -1.0, 0.0]),
                 np.array([0.0, 0.0, 4.0])]
        U = pseudo_observations(sample_copula(CopulaSpec(Family.CLAYTON, 1.0, 2), 200, np.random.default_rng(1)))
        lo = float(per_observation(Kind.SPEARMAN_RHO, U).min())
        values = [solve_tilt(h).log_likelihood for h in cases]
        values += [log_betel(Kind.SPEARMAN_RHO, U, lo), log_betel(Kind.SPEARMAN_RHO, U, 10.0)]
        ok = all(v == -math.inf for v in values)
        record(6, "boundary", ok, f"{sum(v == -math.inf for v in values)}/{len(values)} exactly -inf")

    def test_uniform_weight_identity(self):
        rng = np.random.default_rng(66)
        worst = 0.0
        designs = [(Kind.SPEARMAN_RHO, 2), (Kind.RHO1, 4), (Kind.RHO2, 4), (Kind.LAMBDA_L, 2),
                   (Kind.LAMBDA_U, 2), (Kind.LAMBDA_L, 5), (Kind.LAMBDA_U, 5)]
        for kind, d in designs:
            for n in (25, 100, 400):
                U = pseudo_observations(sample_copula(CopulaSpec(Family.CLAYTON, 1.5, d), n, rng))
                phi = float(point_statistic(kind, U))
                worst = max(worst, abs(log_betel(kind, U, phi) + n * math.log(n)))
        record(6, "uniform identity", worst <= 1e-10, f"max deviation {worst:.2e} <= 1e-10")


# --------------------------------------------------------------------------- criterion 7


SWEEP_DIMS = (2, 6, 10)


@pytest.fixture(scope="module")
def sweep():
    return study({
        "schema_version": 1, "study": "rho_dimension_sweep_clayton",
        "truth": {"family": "clayton", "theta": 1.076, "dim": list(SWEEP_DIMS)},
        "n": 1000, "repetitions": 10, "kinds": ["rho1", "rho2"], "B": 10000,
        "baselines": {"bootstrap": {"reps": 500}}, "seed": 20170321,
    })


class TestCriterion7DimensionSweep:
    @pytest.mark.parametrize("kind", ["rho1", "rho2"])
    def test_bayesian_length_shrinks(self, sweep, kind):
        lengths = {d: sweep.aggregate("abscop", kind, d)["avg_length"] for d in SWEEP_DIMS}
        shown = ", ".join(f"d={d} {v:.4f}" for d, v in lengths.items())
        record(7, f"{kind} bayesian trend", lengths[10] < lengths[2], shown)

    @pytest.mark.parametrize("kind", ["rho1", "rho2"])
    def test_bootstrap_length_small(self, sweep, kind):
        lengths = {d: sweep.aggregate("bootstrap", kind, d)["avg_length"] for d in SWEEP_DIMS}
        shown = ", ".join(f"d={d} {v:.4f}" for d, v in lengths.items())
        record(7, f"{kind} bootstrap <= 0.01", max(lengths.values()) <= 0.01, shown)


# --------------------------------------------------------------------------- criterion 8


class TestCriterion8PropertySuite:
    def test_runs_standalone_within_budget(self):
        start = time.monotonic()
        proc = subprocess.run(
            [sys.executable, "-m", "pytest", str(TESTS_DIR / "test_properties.py"), "-q", "-p", "no:cacheprovider"],
            capture_output=True, text=True, timeout=600, cwd=TESTS_DIR.parent,
        )
        elapsed = time.monotonic() - start
        tail = proc.stdout.strip().splitlines()[-1] if proc.stdout.strip() else proc.stderr[-200:]
        ok = proc.returncode == 0 and elapsed < 600
        record(8, "property suite", ok, f"exit {proc.returncode}, {elapsed:.0f} s < 600 s, {tail}")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
