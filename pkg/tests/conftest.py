import math

import pytest

from arm_codesign.dynamics import Morphology, PhysicalParams
from arm_codesign.experiment import Scenario
from arm_codesign.geometry import Circle, CollisionConfig


@pytest.fixture
def baseline() -> Morphology:
    return Morphology(0.15, 0.15)


@pytest.fixture
def params() -> PhysicalParams:
    return PhysicalParams()


@pytest.fixture
def empty_scenario(params: PhysicalParams) -> Scenario:
    return Scenario(obstacles=(), physical=params, horizon=300)


@pytest.fixture
def obstacle_scenario(params: PhysicalParams) -> Scenario:
    return Scenario(
        obstacles=(Circle((0.10, 0.17), 0.05),),
        physical=params,
        horizon=300,
        collision=CollisionConfig(),
    )


@pytest.fixture
def short_scenario(params: PhysicalParams) -> Scenario:
    """Cheap scenario for tests that only need a handful of steps."""
    return Scenario(obstacles=(), physical=params, horizon=20)
