"""
Door configuration and knock sequence tests
"""
import numpy as np
import pytest

from src.core.exceptions import ConfigurationError
from src.models.configurations import (
    DagDependency,
    DependencyMode,
    DoorConfiguration,
    KnockSequence,
    ensure_valid,
    load_configuration,
    parse_knocks,
    validate,
)


class TestValidate:
    def test_valid_configurations(self, two_geo_independent, two_geo_cascading, fork):
        assert validate(two_geo_independent) == []
        assert validate(two_geo_cascading) == []
        assert validate(fork) == []

    def test_empty_door_list(self):
        violations = validate(DoorConfiguration(doors=[]))
        assert any("d >= 1" in v for v in violations)

    def test_forward_reference(self, two_geo_independent):
        config = two_geo_independent.with_dependency({"dag": [[], [2]]})
        assert validate(config) == ["door 2: self/forward reference to door 2"]

    def test_all_violations_are_listed(self, three_doors):
        config = three_doors.with_dependency({"dag": [[3], [2], [0]]})
        violations = validate(config)
        assert len(violations) == 3

    def test_dag_length_mismatch(self, two_geo_independent):
        config = two_geo_independent.with_dependency({"dag": [[]]})
        assert any("predecessor sets" in v for v in validate(config))

    def test_ensure_valid_raises_with_violations(self, two_geo_independent):
        config = two_geo_independent.with_dependency({"dag": [[1], []]})
        with pytest.raises(ConfigurationError) as exc:
            ensure_valid(config)
        assert exc.value.violations == ["door 1: self/forward reference to door 1"]


class TestPredecessors:
    def test_modes(self, two_geo_independent, two_geo_cascading, fork):
        assert two_geo_independent.predecessors() == (frozenset(), frozenset())
        assert two_geo_cascading.predecessors() == (frozenset(), frozenset({0}))
        assert fork.predecessors() == (frozenset(), frozenset({0}), frozenset({0}))
        assert fork.mode == DependencyMode.DAG

    def test_from_predecessors(self, three_doors):
        config = DoorConfiguration.from_predecessors(three_doors.doors, [set(), {0}, {0, 1}])
        assert config.dependency == DagDependency(dag=[[], [1], [1, 2]])


class TestLoadConfiguration:
    def test_load(self, two_geo_file):
        config = load_configuration(two_geo_file)
        assert config.d == 2
        assert config.mode == DependencyMode.INDEPENDENT

    def test_load_dag(self, write_config):
        path = write_config(
            {
                "doors": [
                    {"kind": "geometric", "p": 0.5},
                    {"kind": "table", "values": [1.0, 0.5], "tail_q": 0.25},
                ],
                "dependency": {"dag": [[], [1]]},
            }
        )
        config = load_configuration(path)
        assert config.predecessors() == (frozenset(), frozenset({0}))

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigurationError):
            load_configuration(tmp_path / "absent.json")

    def test_schema_error_becomes_configuration_error(self, write_config):
        path = write_config({"doors": [{"kind": "geometric", "p": 1.5}]})
        with pytest.raises(ConfigurationError) as exc:
            load_configuration(path)
        assert exc.value.violations[0].startswith("doors.0")

    def test_forward_reference_in_file(self, write_config):
        path = write_config(
            {
                "doors": [{"kind": "geometric", "p": 0.5}] * 2,
                "dependency": {"dag": [[2], []]},
            }
        )
        with pytest.raises(ConfigurationError, match="forward"):
            load_configuration(path)


class TestKnockSequence:
    def test_prefix_and_counts(self):
        seq = KnockSequence.repeat([1, 2, 2], d=2)
        assert seq.prefix(5).tolist() == [1, 2, 2, 1, 2]
        counts = seq.prefix_counts(5)
        assert counts.shape == (6, 2)
        assert counts[-1].tolist() == [2, 3]
        assert np.all(counts.sum(axis=1) == np.arange(6))

    def test_iteration_restarts(self):
        seq = KnockSequence.repeat([1, 2])
        assert seq.prefix(3).tolist() == seq.clone().prefix(3).tolist() == [1, 2, 1]

    def test_finite_prefix_is_short(self):
        seq = KnockSequence.from_knocks([2, 1, 2], d=2)
        assert seq.is_finite
        assert seq.prefix(10).tolist() == [2, 1, 2]

    def test_concat(self):
        seq = KnockSequence.concat([1, 1], KnockSequence.repeat([2]))
        assert seq.prefix(4).tolist() == [1, 1, 2, 2]
        assert seq.d == 2

    def test_out_of_range_door(self):
        with pytest.raises(ConfigurationError):
            KnockSequence.from_knocks([1, 3], d=2).prefix(2)

    def test_repeat_empty_block(self):
        with pytest.raises(ConfigurationError):
            KnockSequence.repeat([])

    def test_parse_knocks(self):
        assert parse_knocks("1, 2,1,2") == [1, 2, 1, 2]
        with pytest.raises(ConfigurationError):
            parse_knocks("1,x")
