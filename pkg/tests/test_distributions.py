"""
Fundamental distribution tests
"""
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from pydantic import ValidationError

from src.models.distributions import (
    DeterministicDistribution,
    GeometricDistribution,
    PolynomialDistribution,
    TableDistribution,
    mean,
    parse_distribution,
    sample_open_count,
    survival,
)


class TestSurvival:
    def test_geometric(self):
        assert survival(GeometricDistribution(p=0.5), 3) == pytest.approx(0.125)

    def test_deterministic(self):
        door = DeterministicDistribution(k=3)
        assert survival(door, 2) == 1.0
        assert survival(door, 3) == 0.0

    def test_polynomial(self, polynomial_square):
        assert survival(polynomial_square, 4) == pytest.approx(0.0625)
        assert survival(polynomial_square, 0) == 1.0
        assert survival(polynomial_square, 1) == 1.0

    def test_table_tail(self):
        door = TableDistribution(values=[1.0, 0.5, 0.25], tail_q=0.5)
        assert survival(door, 2) == 0.25
        assert survival(door, 3) == pytest.approx(0.125)
        assert survival(door, 5) == pytest.approx(0.25 * 0.5 ** 3)

    def test_negative_count_rejected(self):
        with pytest.raises(ValueError):
            survival(GeometricDistribution(p=0.5), -1)

    @given(p=st.floats(min_value=1e-4, max_value=1.0))
    @settings(max_examples=50)
    def test_geometric_non_increasing(self, p):
        values = GeometricDistribution(p=p).survival_array(np.arange(200))
        assert values[0] == 1.0
        assert np.all(np.diff(values) <= 0)

    @given(
        c=st.floats(min_value=0.1, max_value=50.0),
        a=st.floats(min_value=1.05, max_value=4.0),
    )
    @settings(max_examples=50)
    def test_polynomial_non_increasing(self, c, a):
        values = PolynomialDistribution(c=c, a=a).survival_array(np.arange(500))
        assert values[0] == 1.0
        assert np.all(np.diff(values) <= 1e-15)


class TestMean:
    def test_geometric(self, geo_half):
        assert mean(geo_half, 1e-12) == pytest.approx(2.0)

    def test_deterministic(self):
        assert mean(DeterministicDistribution(k=3), 1e-12) == 3.0

    def test_polynomial_includes_the_sure_first_knock(self, polynomial_square):
        assert mean(polynomial_square, 1e-12) == pytest.approx(1.0 + math.pi ** 2 / 6, abs=1e-9)

    def test_polynomial_matches_direct_sum(self):
        door = PolynomialDistribution(c=3.0, a=2.5)
        direct = math.fsum(door.survival_array(np.arange(2_000_000)))
        assert door.mean() == pytest.approx(direct, abs=1e-5)

    def test_table(self):
        door = TableDistribution(values=[1.0, 0.5, 0.25], tail_q=0.5)
        assert mean(door, 1e-12) == pytest.approx(2.0)

    def test_tail_sum_of_squares(self, geo_half):
        assert geo_half.tail_sum(0, 2) == pytest.approx(4.0 / 3.0)

    def test_non_positive_tol_rejected(self, geo_half):
        with pytest.raises(ValueError):
            mean(geo_half, 0.0)

    @pytest.mark.parametrize(
        "door",
        [GeometricDistribution(p=0.5), DeterministicDistribution(k=2), TableDistribution(values=[1.0], tail_q=0.5)],
        ids=lambda door: door.kind,
    )
    def test_every_kind_checks_its_tolerance(self, door):
        with pytest.raises(ValueError):
            door.mean(tol=-1.0)
        assert door.mean(tol=None) == pytest.approx(2.0)


class TestValidation:
    def test_table_must_start_closed(self):
        with pytest.raises(ValidationError):
            TableDistribution(values=[0.9, 0.5], tail_q=0.5)

    def test_table_must_be_non_increasing(self):
        with pytest.raises(ValidationError):
            TableDistribution(values=[1.0, 0.2, 0.4], tail_q=0.5)

    def test_table_tail_ratio_below_one(self):
        with pytest.raises(ValidationError):
            TableDistribution(values=[1.0, 0.5], tail_q=1.0)

    def test_polynomial_exponent_above_one(self):
        with pytest.raises(ValidationError):
            PolynomialDistribution(c=1.0, a=1.0)

    def test_parse_by_kind(self):
        door = parse_distribution({"kind": "deterministic", "k": 4})
        assert isinstance(door, DeterministicDistribution)
        assert door.k == 4

    def test_unknown_kind(self):
        with pytest.raises(ValidationError):
            parse_distribution({"kind": "uniform", "n": 3})


class TestSampling:
    def test_geometric_sample_mean(self, geo_half, rng):
        draws = geo_half.sample_open_counts(rng, 200_000)
        assert draws.min() >= 1
        assert draws.mean() == pytest.approx(2.0, abs=0.02)

    def test_deterministic_sample(self, rng):
        assert sample_open_count(DeterministicDistribution(k=7), rng) == 7

    @pytest.mark.parametrize(
        "door",
        [
            GeometricDistribution(p=0.3),
            TableDistribution(values=[1.0, 0.6, 0.3], tail_q=0.5),
            PolynomialDistribution(c=1.0, a=2.0),
            PolynomialDistribution(c=3.0, a=1.5),
            DeterministicDistribution(k=4),
        ],
        ids=lambda door: door.label,
    )
    def test_empirical_survival_within_four_sigma(self, door, rng):
        trials = 200_000
        draws = door.sample_open_counts(rng, trials)
        for n in range(21):
            expected = door.survival(n)
            sigma = math.sqrt(expected * (1.0 - expected) / trials)
            assert abs(np.mean(draws > n) - expected) <= 4.0 * sigma + 1e-12
