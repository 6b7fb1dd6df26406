import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from abscop.copula_models import CopulaSpec, Family, FunctionalKind, Kind, UnsupportedDimensionError, sample_copula
from abscop.functionals import (
    check_pseudo_data,
    empirical_copula_at,
    estimate,
    moment_vector,
    per_observation,
    point_statistic,
    pseudo_observations,
    ranks,
)

from .conftest import CLAYTON_THETA

distinct_columns = arrays(
    np.float64, st.tuples(st.integers(5, 40), st.integers(2, 4)),
    elements=st.integers(-1000, 1000).map(float), unique=True,
)


def spearman_by_definition(x, y):
    # Pearson correlation of the ranks; equals the rank formula without ties
    rx, ry = ranks(x), ranks(y)
    return float(np.corrcoef(rx, ry)[0, 1])


class TestRanks:
    def test_distinct(self):
        np.testing.assert_array_equal(ranks([3.1, 1.0, 2.5]), [3, 1, 2])

    def test_midranks(self):
        np.testing.assert_array_equal(ranks([5, 5, 1]), [2.5, 2.5, 1])

    def test_increasing_is_identity(self):
        np.testing.assert_array_equal(ranks(np.linspace(-2, 9, 17)), np.arange(1, 18))

    @given(arrays(np.float64, st.integers(1, 50), elements=st.integers(-5, 5).map(float)))
    def test_rank_sum(self, x):
        r = ranks(x)
        n = len(x)
        assert r.sum() == pytest.approx(n * (n + 1) / 2)
        assert r.min() >= 1 and r.max() <= n


class TestPseudoObservations:
    def test_scaling(self):
        u = pseudo_observations(np.array([[10.0, 1.0], [20.0, 3.0], [30.0, 2.0]]))
        np.testing.assert_allclose(u[:, 0], [0.25, 0.5, 0.75])
        np.testing.assert_allclose(u[:, 1], [0.25, 0.75, 0.5])

    def test_constant_column(self):
        u = pseudo_observations(np.column_stack([np.full(7, 3.0), np.arange(7.0)]))
        np.testing.assert_allclose(u[:, 0], 0.5)

    @given(distinct_columns)
    @settings(max_examples=60)
    def test_rank_invariance(self, x):
        transformed = np.column_stack([np.exp(x[:, 0] / 300.0), x[:, 1:] ** 3 + 2.0])
        np.testing.assert_allclose(pseudo_observations(transformed), pseudo_observations(x))

    def test_stacks(self, rng):
        x = rng.normal(size=(3, 20, 2))
        stacked = pseudo_observations(x)
        for i in range(3):
            np.testing.assert_allclose(stacked[i], pseudo_observations(x[i]))

    def test_rejects_single_row(self):
        with pytest.raises(ValueError):
            pseudo_observations(np.ones((1, 2)))


class TestEmpiricalCopula:
    def test_top_corner(self, rng):
        U = rng.uniform(size=(30, 3))
        assert empirical_copula_at(U, np.ones(3)) == 1.0

    def test_below_minimum(self, rng):
        U = rng.uniform(0.2, 1.0, size=(30, 2))
        assert empirical_copula_at(U, [0.1, 0.9]) == 0.0

    def test_against_double_loop(self, rng):
        U = rng.uniform(size=(50, 2))
        pts = rng.uniform(size=(10, 2))
        expected = []
        for p in pts:
            count = 0
            for i in range(50):
                inside = True
                for j in range(2):
                    if U[i, j] > p[j]:
                        inside = False
                count += inside
            expected.append(count / 50)
        np.testing.assert_allclose(empirical_copula_at(U, pts), expected)

    @given(st.lists(st.floats(0, 1), min_size=2, max_size=2), st.lists(st.floats(0, 1), min_size=2, max_size=2))
    def test_monotone_and_bounded(self, a, b):
        U = np.random.default_rng(0).uniform(size=(40, 2))
        lo, hi = np.minimum(a, b), np.maximum(a, b)
        c_lo, c_hi = empirical_copula_at(U, lo), empirical_copula_at(U, hi)
        assert c_lo <= c_hi
        margins = [np.mean(U[:, j] <= hi[j]) for j in range(2)]
        assert max(sum(margins) - 1.0, 0.0) <= c_hi <= min(margins)


class TestEstimate:
    def test_perfect_concordance(self):
        for n in (2, 5, 101):
            U = pseudo_observations(np.column_stack([np.arange(n), np.arange(n)]))
            assert estimate("spearman_rho", U) == pytest.approx(1.0, abs=1e-14)

    @given(distinct_columns.filter(lambda x: x.shape[1] == 2))
    @settings(max_examples=60)
    def test_rank_formula_matches_rank_correlation(self, x):
        assert estimate("spearman_rho", pseudo_observations(x)) == pytest.approx(
            spearman_by_definition(x[:, 0], x[:, 1]), abs=1e-12
        )

    def test_rho1_bivariate_formula(self, rng):
        U = rng.uniform(size=(80, 2))
        direct = 3.0 * (4.0 / 80 * np.sum((1 - U[:, 0]) * (1 - U[:, 1])) - 1.0)
        assert estimate("rho1", U) == pytest.approx(direct, abs=1e-13)

    def test_lambda_l_bivariate_formula(self, rng):
        U = pseudo_observations(rng.normal(size=(400, 2)))
        k = 20
        direct = 400 / k * empirical_copula_at(U, [k / 400, k / 400])
        assert estimate(FunctionalKind(Kind.LAMBDA_L, k), U) == pytest.approx(min(direct, 1.0))

    def test_lambda_u_bivariate_formula(self, rng):
        U = pseudo_observations(rng.normal(size=(400, 2)))
        k = 20
        t = (400 - k) / 400
        direct = 2 - 400 / k * (1 - empirical_copula_at(U, [t, t]))
        assert estimate(FunctionalKind(Kind.LAMBDA_U, k), U) == pytest.approx(np.clip(direct, 0, 1))

    def test_multivariate_tail_ratio(self, rng):
        U = rng.uniform(size=(500, 4))
        U[:40] = rng.uniform(0, 0.02, size=(40, 4))
        k = 25
        cond = U[:, 0] <= k / 500
        joint = np.all(U <= k / 500, axis=1)
        assert estimate(FunctionalKind(Kind.LAMBDA_L, k), U) == pytest.approx(joint.sum() / cond.sum())

    def test_multivariate_tail_empty_denominator(self):
        U = np.full((100, 3), 0.5)
        assert estimate(FunctionalKind(Kind.LAMBDA_U, 5), U) == 0.0

    @given(arrays(np.float64, st.tuples(st.integers(4, 60), st.integers(2, 5)), elements=st.floats(0.001, 0.999)))
    @settings(max_examples=80)
    def test_tail_estimates_in_unit_interval(self, U):
        for kind in (Kind.LAMBDA_L, Kind.LAMBDA_U):
            assert 0.0 <= estimate(kind, U) <= 1.0

    def test_spearman_needs_two_columns(self, rng):
        with pytest.raises(UnsupportedDimensionError):
            estimate("spearman_rho", rng.uniform(size=(10, 3)))

    def test_batched_equals_loop(self, rng):
        U = rng.uniform(size=(4, 30, 3))
        for kind in ("rho1", "rho2", "lambda_l", "lambda_u"):
            np.testing.assert_allclose(estimate(kind, U), [estimate(kind, u) for u in U])

    @pytest.mark.slow
    def test_large_sample_d6(self):
        U = pseudo_observations(sample_copula(CopulaSpec(Family.CLAYTON, CLAYTON_THETA, 6), 100_000, np.random.default_rng(11)))
        assert estimate("rho1", U) == pytest.approx(0.514, abs=0.02)
        assert estimate("rho2", U) == pytest.approx(0.346, abs=0.02)

    def test_large_sample_lower_tail(self):
        U = pseudo_observations(sample_copula(CopulaSpec(Family.CLAYTON, CLAYTON_THETA, 2), 100_000, np.random.default_rng(12)))
        assert estimate("lambda_l", U) == pytest.approx(0.525, abs=0.05)


class TestMomentVector:
    @given(arrays(np.float64, st.tuples(st.integers(3, 60), st.integers(2, 6)), elements=st.floats(0.001, 0.999)))
    @settings(max_examples=100)
    def test_mean_zero_at_estimate(self, U):
        for kind in ("rho1", "rho2"):
            assert abs(moment_vector(kind, U, estimate(kind, U)).h.mean()) < 1e-10

    def test_lambda_l_without_joint_tail(self):
        U = np.column_stack([np.linspace(0.01, 0.99, 100), np.linspace(0.99, 0.01, 100)])
        h = moment_vector("lambda_l", U, 0.0).h
        np.testing.assert_array_equal(h, 0.0)

    def test_spearman_against_reimplementation(self, rng):
        U = rng.uniform(size=(100, 2))
        x, y = U[:, 0], U[:, 1]
        n = 100
        rx = np.argsort(np.argsort(x)) + 1
        ry = np.argsort(np.argsort(y)) + 1
        rho = 12.0 / (n * (n * n - 1)) * np.sum(rx * ry) - 3.0 * (n + 1) / (n - 1)
        assert moment_vector("spearman_rho", U, 0.3).h.mean() == pytest.approx(rho - 0.3, abs=1e-13)

    def test_ratio_form_root(self, rng):
        U = rng.uniform(size=(300, 3))
        U[:30] *= 0.03
        kind = FunctionalKind(Kind.LAMBDA_L, 20)
        phi = float(point_statistic(kind, U))
        assert abs(moment_vector(kind, U, phi).h.mean()) < 1e-14
        assert abs(moment_vector(kind, U, phi + 0.1).h.mean()) > 1e-3

    def test_per_observation_mean_is_estimate(self, rng):
        U = rng.uniform(size=(200, 4))
        U[:25] *= 0.05
        for kind in ("rho1", "rho2", "lambda_l", "lambda_u"):
            assert per_observation(kind, U).mean() == pytest.approx(float(point_statistic(kind, U)))

    def test_rejects_nonfinite_phi(self, rng):
        with pytest.raises(ValueError):
            moment_vector("rho1", rng.uniform(size=(10, 2)), math.inf)


def test_check_pseudo_data():
    with pytest.raises(ValueError):
        check_pseudo_data(np.array([[0.0, 0.5], [0.5, 0.5]]))
    with pytest.raises(ValueError):
        check_pseudo_data(np.array([0.5, 0.5]))
    U = np.full((3, 2), 0.5)
    assert check_pseudo_data(U) is not None
