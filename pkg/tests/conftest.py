"""
Shared fixtures
"""
import json
from pathlib import Path

import numpy as np
import pytest

from src.models.configurations import DagDependency, DependencyMode, DoorConfiguration, load_configuration
from src.models.distributions import (
    DeterministicDistribution,
    GeometricDistribution,
    PolynomialDistribution,
    TableDistribution,
)


@pytest.fixture
def geo_half():
    return GeometricDistribution(p=0.5)


@pytest.fixture
def two_geo_independent(geo_half):
    return DoorConfiguration(doors=[geo_half, geo_half])


@pytest.fixture
def two_geo_cascading(geo_half):
    return DoorConfiguration(doors=[geo_half, geo_half], dependency=DependencyMode.CASCADING)


@pytest.fixture
def three_doors():
    """Three unlike doors, independent"""
    return DoorConfiguration(
        doors=[
            GeometricDistribution(p=0.5),
            TableDistribution(values=[1.0, 0.6, 0.3], tail_q=0.5),
            GeometricDistribution(p=0.3),
        ]
    )


@pytest.fixture
def fork(three_doors):
    """Doors 2 and 3 both gated by door 1"""
    return three_doors.with_dependency(DagDependency(dag=[[], [1], [1]]))


@pytest.fixture
def fork_mixed():
    """Shipped fork with a heavy-tailed third door"""
    return load_configuration(Path(__file__).resolve().parents[1] / "configs" / "fork_mixed.json")


@pytest.fixture
def rng():
    return np.random.Generator(np.random.Philox(12345))


@pytest.fixture
def write_config(tmp_path):
    """Write a configuration mapping as JSON and return its path"""

    def _write(data, name="config.json"):
        path = tmp_path / name
        path.write_text(json.dumps(data), encoding="utf-8")
        return str(path)

    return _write


@pytest.fixture
def two_geo_file(write_config):
    return write_config(
        {"doors": [{"kind": "geometric", "p": 0.5}, {"kind": "geometric", "p": 0.5}]},
        "two_geo.json",
    )


@pytest.fixture
def deterministic_pair():
    return [DeterministicDistribution(k=1), DeterministicDistribution(k=1)]


@pytest.fixture
def polynomial_square():
    return PolynomialDistribution(c=1.0, a=2.0)
