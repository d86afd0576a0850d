import numpy as np
import pytest

from gcfs.markov import steady_state_closed_form_A1
from gcfs.metrics import compare_distributions, little_delay, tv_distance


class TestLittleDelay:
    def test_empty_queue(self):
        assert little_delay(0.0, 0.7) == 0.0

    def test_unit_case(self):
        assert little_delay(0.6, 0.6) == 1.0

    def test_inverse_property(self):
        rng = np.random.default_rng(1)
        for _ in range(50):
            x = rng.uniform(0, 10)
            lam = rng.uniform(0.01, 5)
            assert little_delay(lam * x, lam) == pytest.approx(x, rel=1e-12)

    def test_domain(self):
        with pytest.raises(ValueError):
            little_delay(1.0, 0.0)
        with pytest.raises(ValueError):
            little_delay(1.0, -1.0)


class TestTvDistance:
    def test_identical(self):
        pmf = np.array([0.2, 0.5, 0.3])
        assert tv_distance(pmf, pmf) == 0.0

    def test_disjoint_point_masses(self):
        assert tv_distance(np.array([1.0, 0.0]), np.array([0.0, 1.0])) == 1.0

    def test_unnormalized_rejected(self):
        with pytest.raises(ValueError):
            tv_distance(np.array([0.5, 0.4]), np.array([0.5, 0.5]))
        with pytest.raises(ValueError):
            tv_distance(np.array([0.5, 0.5]), np.array([0.9, 0.2]))

    def test_symmetry_and_triangle(self):
        rng = np.random.default_rng(3)
        for _ in range(30):
            a = rng.dirichlet(np.ones(6))
            b = rng.dirichlet(np.ones(6))
            c = rng.dirichlet(np.ones(6))
            ab = tv_distance(a, b)
            assert ab == pytest.approx(tv_distance(b, a), abs=1e-15)
            assert ab <= tv_distance(a, c) + tv_distance(c, b) + 1e-12
            assert 0.0 <= ab <= 1.0

    def test_against_stationary_distribution_with_tail(self):
        dist = steady_state_closed_form_A1(0.5, 0.5, truncation=30)
        padded = dist.pi.copy()
        empirical = np.zeros(31)
        empirical[: len(padded)] = padded
        empirical[-1] += dist.tail_bound  # fold the same tail the metric folds
        assert tv_distance(empirical, dist) == pytest.approx(0.0, abs=1e-12)

    def test_union_support_folding(self):
        # theoretical support longer than empirical
        dist = steady_state_closed_form_A1(0.6, 0.4, truncation=100)
        empirical = np.array([0.5, 0.5])
        value = tv_distance(empirical, dist)
        assert 0.0 < value < 1.0


class TestCompareDistributions:
    def test_fields(self):
        a = np.array([0.5, 0.5])
        b = np.array([0.25, 0.75])
        result = compare_distributions(a, b)
        assert result.tv_distance == pytest.approx(0.25)
        assert result.ks_like_sup == pytest.approx(0.25)
        assert "union support" in result.support_truncation

    def test_ks_bounded_by_tv_times_two(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            a = rng.dirichlet(np.ones(5))
            b = rng.dirichlet(np.ones(8))
            result = compare_distributions(a, b)
            assert result.ks_like_sup <= 2 * result.tv_distance + 1e-12
