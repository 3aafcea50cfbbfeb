"""
Exact evaluator tests
"""
import math

import numpy as np
import pytest

from src.core.exceptions import (
    ConfigurationError,
    DivergenceError,
    HorizonExceededError,
    StateSpaceOverflowError,
)
from src.engine.evaluator import (
    _chain_values,
    _dag_values,
    expected_time,
    expected_time_cascading,
    expected_time_independent,
    feedback_baseline,
    partial_sum_bounds,
    survival_curve_cascading,
    survival_curve_independent,
)
from src.engine.planner import a_simp
from src.models.configurations import DependencyMode, DoorConfiguration, KnockSequence
from src.models.distributions import DeterministicDistribution, GeometricDistribution, TableDistribution


def _pair(p):
    door = GeometricDistribution(p=p)
    return DoorConfiguration(doors=[door, door])


class TestIndependent:
    @pytest.mark.parametrize("p", [0.1, 0.25, 0.5])
    def test_round_robin_on_two_geometric_doors(self, p):
        assert expected_time_independent(_pair(p), a_simp(2), 1e-12) == pytest.approx(
            3.0 / p - 1.0, abs=1e-9
        )

    def test_single_door(self, geo_half):
        config = DoorConfiguration(doors=[geo_half])
        assert expected_time_independent(config, KnockSequence.repeat([1])) == pytest.approx(2.0)

    def test_deterministic_doors(self, deterministic_pair):
        config = DoorConfiguration(doors=deterministic_pair)
        assert expected_time_independent(config, KnockSequence.from_knocks([1, 2])) == 2.0

    def test_survival_curve(self, two_geo_independent):
        curve = survival_curve_independent(two_geo_independent, a_simp(2), 4)
        expected = [1.0, 1.0, 0.75, 1 - 0.75 * 0.5, 1 - 0.75 * 0.75]
        assert curve.values == pytest.approx(expected)
        assert curve.horizon == 4

    def test_curve_is_non_increasing(self, three_doors):
        curve = survival_curve_independent(three_doors, KnockSequence.repeat([1, 2, 3, 3]), 200)
        values = np.asarray(curve.values)
        assert values[0] == 1.0
        assert np.all(np.diff(values) <= 0)

    def test_curve_sum_matches_expected_time(self, three_doors):
        seq = KnockSequence.repeat([1, 2, 3, 3])
        value = expected_time_independent(three_doors, seq, 1e-12)
        curve = survival_curve_independent(three_doors, seq, 2000)
        assert curve.expected_time == pytest.approx(value, abs=1e-10)

    def test_finite_curve_is_padded(self, deterministic_pair):
        config = DoorConfiguration(doors=deterministic_pair)
        curve = survival_curve_independent(config, KnockSequence.from_knocks([1]), 3)
        assert curve.values == [1.0, 1.0, 1.0, 1.0]

    def test_rejects_gated_configuration(self, two_geo_cascading):
        with pytest.raises(ConfigurationError):
            expected_time_independent(two_geo_cascading, a_simp(2))


class TestCascading:
    def test_alternating_on_two_geometric_doors(self, two_geo_cascading):
        assert expected_time_cascading(two_geo_cascading, a_simp(2)) == pytest.approx(6.0, abs=1e-8)

    def test_wasted_knock(self, deterministic_pair):
        config = DoorConfiguration(doors=deterministic_pair, dependency=DependencyMode.CASCADING)
        assert expected_time_cascading(config, KnockSequence.from_knocks([2, 1, 2])) == 3.0

    def test_dag_path_agrees_with_chain_convolution(self, three_doors):
        config = three_doors.with_dependency(DependencyMode.CASCADING)
        knocks = KnockSequence.repeat([1, 2, 3, 3, 2]).prefix(300)
        chain, chain_needed = _chain_values(config, knocks)
        general, general_needed = _dag_values(config, knocks, 1_000_000)
        assert general == pytest.approx(chain, abs=1e-12)
        assert general_needed == pytest.approx(chain_needed, abs=1e-12)

    def test_dag_with_no_edges_agrees_with_independent(self, three_doors):
        config = three_doors.with_dependency({"dag": [[], [], []]})
        seq = KnockSequence.repeat([1, 2, 3])
        assert expected_time_cascading(config, seq, 1e-12) == pytest.approx(
            expected_time_independent(three_doors, seq, 1e-12), abs=1e-9
        )

    def test_gated_curve(self, two_geo_cascading):
        curve = survival_curve_cascading(two_geo_cascading, a_simp(2), 3)
        # door 2 can only open on knock 2 when door 1 opened on knock 1
        assert curve.values == pytest.approx([1.0, 1.0, 0.75, 0.75])

    def test_dominance(self, three_doors, fork):
        seq = a_simp(3)
        independent = expected_time_independent(three_doors, seq)
        dag = expected_time_cascading(fork, seq)
        cascading = expected_time_cascading(three_doors.with_dependency("cascading"), seq)
        assert independent <= dag + 1e-8
        assert dag <= cascading + 1e-8

    def test_dispatch(self, two_geo_independent, two_geo_cascading):
        assert expected_time(two_geo_independent, a_simp(2)) == pytest.approx(5.0, abs=1e-9)
        assert expected_time(two_geo_cascading, a_simp(2)) == pytest.approx(6.0, abs=1e-8)

    def test_rejects_independent_configuration(self, two_geo_independent):
        with pytest.raises(ConfigurationError):
            expected_time_cascading(two_geo_independent, a_simp(2))

    def test_state_space_cap(self, fork):
        with pytest.raises(StateSpaceOverflowError):
            expected_time_cascading(fork, a_simp(3), state_cap=5)

    def test_transition_budget(self, fork):
        with pytest.raises(StateSpaceOverflowError):
            expected_time_cascading(fork, a_simp(3), transition_cap=1000)

    def test_state_cap_is_checked_while_states_are_generated(self, fork):
        knocks = a_simp(3).prefix(300)
        with pytest.raises(StateSpaceOverflowError):
            _dag_values(fork, knocks, state_cap=50)

    def test_heavy_tailed_fork_fails_fast(self, fork_mixed):
        with pytest.raises((StateSpaceOverflowError, HorizonExceededError)):
            expected_time_cascading(fork_mixed, a_simp(3), 1e-9, transition_cap=2_000_000)

    @pytest.mark.parametrize("limit", ["horizon_cap", "state_cap", "transition_cap"])
    def test_zero_limits_are_rejected(self, fork, limit):
        with pytest.raises(ValueError):
            expected_time_cascading(fork, a_simp(3), **{limit: 0})


class TestDivergence:
    def test_finite_sequence_leaves_a_door_closed(self, two_geo_independent):
        with pytest.raises(DivergenceError):
            expected_time_independent(two_geo_independent, KnockSequence.from_knocks([1, 2, 1]))

    def test_neglected_door(self, two_geo_cascading):
        seq = KnockSequence.concat([1, 2], KnockSequence.repeat([1], d=2))
        with pytest.raises(DivergenceError):
            expected_time_cascading(two_geo_cascading, seq, horizon_cap=4096)

    def test_horizon_cap(self):
        slow = GeometricDistribution(p=1e-3)
        config = DoorConfiguration(doors=[slow, slow])
        with pytest.raises(HorizonExceededError):
            expected_time_independent(config, a_simp(2), horizon_cap=512)

    def test_non_positive_tol(self, two_geo_independent):
        with pytest.raises(ValueError):
            expected_time_independent(two_geo_independent, a_simp(2), tol=0.0)


class TestBaselineAndBounds:
    def test_feedback_baseline(self, geo_half, polynomial_square):
        config = DoorConfiguration(doors=[geo_half, polynomial_square])
        assert feedback_baseline(config) == pytest.approx(3.0 + math.pi ** 2 / 6, abs=1e-9)

    def test_feedback_baseline_is_below_any_sequence(self, three_doors):
        baseline = feedback_baseline(three_doors)
        assert expected_time_independent(three_doors, a_simp(3)) >= baseline

    def test_partial_sum_bounds_bracket_the_mean(self, geo_half):
        survival = geo_half.survival_array(np.arange(300)).tolist()
        low, high = partial_sum_bounds(survival, [2 ** n for n in range(8)])
        assert low <= geo_half.mean() <= high

    def test_partial_sum_bounds_need_increasing_checkpoints(self):
        with pytest.raises(ValueError):
            partial_sum_bounds([1.0, 0.5, 0.25], [1, 1])


class TestTruncation:
    def test_slow_tail_after_a_fast_head(self):
        door = TableDistribution(values=[0.7 ** n for n in range(64)], tail_q=0.99999)
        config = DoorConfiguration(doors=[door])
        value = expected_time_independent(config, KnockSequence.repeat([1]), 1e-6)
        assert abs(value - door.mean()) < 1e-6

    def test_slow_tail_behind_a_gate(self):
        door = TableDistribution(values=[0.7 ** n for n in range(32)], tail_q=0.999)
        config = DoorConfiguration(
            doors=[DeterministicDistribution(k=1), door], dependency=DependencyMode.CASCADING
        )
        seq = KnockSequence.concat([1], KnockSequence.repeat([2], d=2))
        value = expected_time_cascading(config, seq, 1e-6)
        assert abs(value - (1.0 + door.mean())) < 1e-6

    def test_curve_tail_brackets_the_exact_value(self, two_geo_independent, two_geo_cascading):
        independent = survival_curve_independent(two_geo_independent, a_simp(2), 20)
        assert independent.tail > 0.0
        assert independent.expected_time <= 5.0 <= independent.upper_bound

        cascading = survival_curve_cascading(two_geo_cascading, a_simp(2), 30)
        assert cascading.tail > 0.0
        assert cascading.expected_time <= 6.0 <= cascading.upper_bound

    def test_curve_tail_of_finite_sequences(self, deterministic_pair, two_geo_independent):
        opened = survival_curve_independent(
            DoorConfiguration(doors=deterministic_pair), KnockSequence.from_knocks([1, 2]), 4
        )
        assert opened.tail == 0.0
        stalled = survival_curve_independent(two_geo_independent, KnockSequence.from_knocks([1, 2]), 4)
        assert stalled.tail == math.inf

    def test_zero_horizon_cap_is_rejected(self, two_geo_independent):
        with pytest.raises(ValueError):
            expected_time_independent(two_geo_independent, a_simp(2), horizon_cap=0)
