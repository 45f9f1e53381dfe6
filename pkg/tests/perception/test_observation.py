import numpy as np
import pytest

from cxflow.common.enums import DirectionMode, StatsSource, VehicleKind
from cxflow.common.exceptions import ObservationError
from cxflow.common.streams import parse_stream
from cxflow.perception import (
    Observation,
    StreamStats,
    encode_observation,
    ego_estimates,
    ground_truth_stream_stats,
    occupancy_map,
    queue_capacity,
    queued_vehicles,
)
from tests.sim.factories import create_dummy_world, place_vehicle

NC = parse_stream("N-C")
NC_SLOT = 5


# ==================== Statistics ====================


def test_observation_length():
    assert Observation.length(DirectionMode.EIGHT) == 97
    assert Observation.length(DirectionMode.TWELVE) == 145


def test_queue_capacity():
    assert queue_capacity(1, 30.0) == 6
    assert queue_capacity(2, 32.0) == 12


def test_queue_counts_still_and_closing_vehicles(world):
    """A moving vehicle joins the queue only when it is closing up within the standstill gap."""
    place_vehicle(world, "N-C", -1.0)
    place_vehicle(world, "N-C", -6.2, v=1.0)
    place_vehicle(world, "N-C", -20.0, v=1.0)
    assert len(queued_vehicles(world, NC)) == 2


def test_ground_truth_stats(world):
    place_vehicle(world, "N-C", -1.0, wait=10.0)
    place_vehicle(world, "N-C", -6.0, wait=30.0)
    place_vehicle(world, "N-C", -100.0, wait=50.0)
    stats = ground_truth_stream_stats(world, NC)
    assert stats == StreamStats(2.0, 20.0)
    assert ground_truth_stream_stats(world, parse_stream("E-C")) == StreamStats(0.0, 0.0)


def test_occupancy_segment(world):
    length = world.intersection.path(NC, 0).length
    place_vehicle(world, "N-C", 0.55 * length, v=5.0, granted=True)
    flags = occupancy_map(world, NC)
    assert flags == (0, 0, 0, 0, 0, 1, 0, 0, 0, 0)


# ==================== Ego estimates ====================


def test_still_rv_reports_its_position(world):
    vehicle = place_vehicle(world, "N-C", -10.0, wait=7.0)
    assert ego_estimates(vehicle) == StreamStats(2.0, 7.0)


@pytest.mark.parametrize(
    "kwargs",
    [
        {"v": 3.0},
        {"kind": VehicleKind.HV},
        {"s": -100.0},
    ],
)
def test_no_estimate(world, kwargs):
    """Moving vehicles, HVs and vehicles outside the control zone send nothing."""
    args = {"s": -10.0, **kwargs}
    assert ego_estimates(place_vehicle(world, "N-C", **args)) is None


def test_offline_rv_sends_nothing(world):
    vehicle = place_vehicle(world, "N-C", -10.0)
    vehicle.offline = True
    assert ego_estimates(vehicle) is None


# ==================== Encoding ====================


def test_encoded_vector(world):
    place_vehicle(world, "N-C", -1.0, wait=10.0)
    ego = place_vehicle(world, "N-C", -6.0, wait=30.0)
    vector = encode_observation(ego, world).to_vector()
    assert vector.shape == (97,)
    assert vector.dtype == np.float64
    assert vector[2 * NC_SLOT] == pytest.approx(2 / 6)
    assert vector[2 * NC_SLOT + 1] == pytest.approx(0.1)
    assert vector[-1] == pytest.approx(0.2)
    assert np.count_nonzero(vector) == 3


def test_three_way_zero_fills_missing_directions(three_way):
    """Directions that do not exist keep their slots as zeros."""
    world = create_dummy_world(three_way)
    ego = place_vehicle(world, "N-C", -10.0, wait=5.0)
    observation = encode_observation(ego, world)
    assert len(observation.to_vector()) == 97
    assert observation.lanes[3] == 0
    assert observation.stats[3] == StreamStats(0.0, 0.0)


def test_v2v_source_uses_estimates(world):
    place_vehicle(world, "E-C", -1.0, wait=99.0)
    ego = place_vehicle(world, "N-C", -10.0)
    observation = encode_observation(ego, world, StatsSource.V2V, estimates={"N-C": StreamStats(3.0, 50.0)})
    assert observation.stats[NC_SLOT] == StreamStats(3.0, 50.0)
    assert observation.stats[1] == StreamStats(0.0, 0.0)


def test_inside_ego_rejected(world):
    ego = place_vehicle(world, "N-C", 3.0, granted=True)
    with pytest.raises(ObservationError, match="only in the control zone"):
        encode_observation(ego, world)
