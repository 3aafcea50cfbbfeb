"""
Price of lacking feedback
"""
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from src.engine.evaluator import expected_time_independent
from src.engine.planner import a_simp
from src.engine.price import expected_max_iid, kappa, lm_max_bound, price_report, upper_price_bound
from src.models.configurations import DoorConfiguration
from src.models.distributions import (
    DeterministicDistribution,
    GeometricDistribution,
    PolynomialDistribution,
    TableDistribution,
)
from src.utils.numeric import log_inv_q_bracket

GEO_DS = [2 ** k for k in range(1, 15)]
POLY_DS = [2 ** k for k in range(2, 15)]


def _linear_price_table(d):
    """Opens at once w.p. 1 - 1/d, otherwise at knock d + 1"""
    return TableDistribution(values=[1.0] + [1.0 / d] * d, tail_q=0.0)


class TestExpectedMax:
    def test_single_geometric_door_is_its_mean(self, geo_half):
        assert expected_max_iid(geo_half, 1) == pytest.approx(2.0, abs=1e-10)

    def test_two_geometric_doors(self, geo_half):
        assert expected_max_iid(geo_half, 2) == pytest.approx(8.0 / 3.0, abs=1e-10)

    def test_deterministic(self):
        assert expected_max_iid(DeterministicDistribution(k=5), 7) == pytest.approx(5.0)

    def test_closed_form_for_geometric_pairs(self):
        dist = GeometricDistribution(p=0.1)
        q = dist.q
        assert expected_max_iid(dist, 2) == pytest.approx(2.0 / dist.p - 1.0 / (1.0 - q * q), abs=1e-9)

    def test_polynomial_pair(self, polynomial_square):
        zeta2, zeta4 = math.pi ** 2 / 6, math.pi ** 4 / 90
        expected = 2.0 + 2.0 * (zeta2 - 1.0) - (zeta4 - 1.0)
        assert expected_max_iid(polynomial_square, 2) == pytest.approx(expected, abs=1e-9)

    def test_grows_with_d(self, geo_half):
        values = [expected_max_iid(geo_half, d) for d in (1, 2, 4, 8, 16)]
        assert values == sorted(values)

    def test_rejects_bad_arguments(self, geo_half):
        with pytest.raises(ValueError):
            expected_max_iid(geo_half, 0)
        with pytest.raises(ValueError):
            expected_max_iid(geo_half, 2, tol=0.0)


class TestKappa:
    def test_geometric(self, geo_half):
        assert kappa(geo_half, 8) == 4
        assert lm_max_bound(geo_half, 8) == pytest.approx(5.0)

    def test_single_door(self, geo_half):
        assert kappa(geo_half, 1) == 1
        assert lm_max_bound(geo_half, 1) == pytest.approx(2.0)

    def test_deterministic(self):
        dist = DeterministicDistribution(k=5)
        assert kappa(dist, 3) == 5
        assert lm_max_bound(dist, 3) == pytest.approx(5.0)

    def test_far_threshold(self):
        assert kappa(PolynomialDistribution(c=1.0, a=2.0), 10 ** 6) == 1001


class TestPriceReport:
    def test_trivial_doors(self):
        report = price_report(DeterministicDistribution(k=1), 16)
        assert report.price == pytest.approx(1.0)

    def test_geometric_pair(self, geo_half):
        report = price_report(geo_half, 2)
        assert report.e_single == pytest.approx(2.0)
        assert report.price == pytest.approx(4.0 / 3.0, abs=1e-10)
        assert report.kappa == 2

    def test_many_slow_doors(self):
        report = price_report(GeometricDistribution(p=0.1), 1024)
        assert 0.3 <= report.price / math.log(1024) <= 3.0

    @pytest.mark.parametrize("p", [0.4, 0.1])
    def test_geometric_price_is_logarithmic(self, p):
        dist = GeometricDistribution(p=p)
        for d in GEO_DS:
            assert 0.25 <= price_report(dist, d).price / math.log(d) <= 4.0

    def test_polynomial_price_is_square_root(self, polynomial_square):
        for d in POLY_DS:
            assert 0.2 <= price_report(polynomial_square, d).price / math.sqrt(d) <= 5.0

    @pytest.mark.parametrize("d", [2, 4, 16, 64, 256])
    def test_linear_price_table(self, d):
        report = price_report(_linear_price_table(d), d)
        assert report.kappa == d + 1
        assert report.e_single == pytest.approx(2.0)
        assert 0.25 <= report.price / d <= 1.0

    def test_bounded_moment_table_is_dominated(self):
        bound = PolynomialDistribution(c=0.5, a=2.0)
        table = TableDistribution(
            values=[1.0] + [min(1.0, 0.5 / n ** 2) for n in range(1, 50)], tail_q=0.9
        )
        ns = np.arange(2000)
        assert np.all(table.survival_array(ns) <= bound.survival_array(ns) + 1e-15)
        for d in (4, 16, 64, 256, 1024):
            assert expected_max_iid(table, d) <= expected_max_iid(bound, d) + 1e-9
            assert 0.2 <= price_report(table, d).price / math.sqrt(d) <= 5.0


class TestBounds:
    @pytest.mark.parametrize(
        "dist",
        [
            GeometricDistribution(p=0.5),
            GeometricDistribution(p=0.1),
            PolynomialDistribution(c=1.0, a=2.0),
            PolynomialDistribution(c=3.0, a=2.5),
            DeterministicDistribution(k=4),
        ],
        ids=lambda dist: dist.label,
    )
    @pytest.mark.parametrize("d", [1, 2, 8, 64, 1024])
    def test_kappa_bound_within_constant_factor(self, dist, d):
        ratio = expected_max_iid(dist, d) / lm_max_bound(dist, d)
        assert 1.0 / 8.0 <= ratio <= 8.0

    @given(q=st.floats(min_value=1e-6, max_value=1.0 - 1e-9))
    def test_log_bracket(self, q):
        low, high = log_inv_q_bracket(q)
        value = -math.log(q)
        assert low <= value * (1 + 1e-12)
        assert value <= high * (1 + 1e-12)

    def test_round_robin_price_at_most_d(self, two_geo_cascading, two_geo_independent, three_doors, fork):
        for config in (two_geo_cascading, two_geo_independent, three_doors, fork):
            assert 1.0 <= upper_price_bound(config) <= config.d

    @pytest.mark.parametrize(
        "door",
        [
            GeometricDistribution(p=0.1),
            GeometricDistribution(p=0.5),
            TableDistribution(values=[1.0, 0.6, 0.3], tail_q=0.5),
            DeterministicDistribution(k=3),
        ],
        ids=lambda door: door.label,
    )
    @pytest.mark.parametrize("d", [2, 3, 5])
    def test_round_robin_brackets_expected_max(self, door, d):
        config = DoorConfiguration(doors=[door] * d)
        value = expected_time_independent(config, a_simp(d), 1e-9)
        e_max = expected_max_iid(door, d)
        assert d * (e_max - 1.0) < value <= d * e_max + 1e-9
