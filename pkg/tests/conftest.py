import numpy as np
import pytest

from cxflow.common.enums import Approach, DirectionMode
from cxflow.common.rng import RngStreams
from cxflow.sim.geometry import Intersection, build_intersection
from cxflow.sim.models import IdmParams, IntersectionSpec
from cxflow.sim.world import World


@pytest.fixture
def idm() -> IdmParams:
    return IdmParams()


@pytest.fixture
def intersection() -> Intersection:
    """Canonical 4-way, 8 directions, one lane per movement."""
    return build_intersection(IntersectionSpec())


@pytest.fixture
def three_way() -> Intersection:
    return build_intersection(IntersectionSpec(approaches=[Approach.N, Approach.S, Approach.E]))


@pytest.fixture
def twelve_way() -> Intersection:
    return build_intersection(IntersectionSpec(mode=DirectionMode.TWELVE))


@pytest.fixture
def world(intersection, idm) -> World:
    return World(intersection, idm)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(2024)


@pytest.fixture
def streams() -> RngStreams:
    return RngStreams(11)
