import logging
import math

import pytest

from cxflow.common.enums import VehicleKind, Zone
from cxflow.common.streams import parse_stream
from cxflow.sim.world import hold_position
from tests.sim.factories import create_dummy_world, place_vehicle

# ==================== Placement and lookup ====================


def test_zone_on_placement(world):
    """Zones follow the signed position along the route."""
    assert place_vehicle(world, "N-C", -100.0).zone == Zone.UPSTREAM
    assert place_vehicle(world, "E-C", -30.0).zone == Zone.CONTROL_ZONE
    assert place_vehicle(world, "S-C", 2.0).zone == Zone.INSIDE


def test_ids_increase(world):
    first = place_vehicle(world, "N-C", -100.0)
    second = place_vehicle(world, "N-C", -120.0)
    assert second.id == first.id + 1
    assert world.spawned_total == 2


def test_leader_gap_is_bumper_to_bumper(world):
    leader = place_vehicle(world, "N-C", -5.0)
    follower = place_vehicle(world, "N-C", -20.0)
    found = world.leader_of(follower)
    assert found.vehicle is leader
    assert found.gap == pytest.approx(11.0)
    assert world.leader_of(leader) is None


def test_lane_vehicles_front_first(world):
    rear = place_vehicle(world, "N-C", -40.0)
    front = place_vehicle(world, "N-C", -10.0)
    assert [v.id for v in world.lane_vehicles(("N-C", 0))] == [front.id, rear.id]
    assert world.rear_vehicle(("N-C", 0)) is rear


# ==================== Stepping ====================


def test_ungranted_vehicle_stops_on_entrance_line(world):
    """Without an entry grant nothing crosses s = 0, whatever its speed."""
    vehicle = place_vehicle(world, "N-C", -20.0, v=10.0)
    for _ in range(10):
        world.step()
        assert vehicle.s <= 0.0
    assert vehicle.zone == Zone.CONTROL_ZONE
    assert vehicle.v == 0.0


def test_granted_vehicle_enters(world):
    vehicle = place_vehicle(world, "N-C", -5.0, v=10.0, granted=True)
    events = world.step()
    assert vehicle.id in events.entered
    assert vehicle.zone == Zone.INSIDE
    assert world.inside_streams() == {parse_stream("N-C"): 1}
    assert world.time == 1.0 and world.step_index == 1


def test_holding_accumulates_wait(world):
    """A held vehicle in the control zone collects still time, and moving resets only the current run."""
    vehicle = place_vehicle(world, "N-C", -10.0)
    for _ in range(3):
        world.step({vehicle.id: 0.0})
    assert vehicle.wait_accum == 3.0
    assert vehicle.longest_still == 3.0
    world.step({vehicle.id: world.idm.a_max})
    assert vehicle.still_run == 0.0
    assert vehicle.wait_accum == 3.0
    assert vehicle.longest_still == 3.0


def test_upstream_still_time_is_not_counted(world):
    vehicle = place_vehicle(world, "N-C", -100.0)
    world.step({vehicle.id: 0.0})
    assert vehicle.wait_accum == 0.0


def test_follower_never_overlaps_held_leader(world):
    leader = place_vehicle(world, "N-C", -1.0)
    follower = place_vehicle(world, "N-C", -20.0, v=10.0)
    for _ in range(20):
        world.step({leader.id: 0.0, follower.id: world.idm.a_max})
        assert follower.s <= leader.s - world.idm.vehicle_length - world.idm.s0 + 1e-9
    assert world.conflict_total == 0
    assert world.safety_total == 0


@pytest.mark.parametrize("v, gap", [(1.77, 1.2), (1.77, 3.0), (5.0, 8.0), (10.0, 15.0), (12.0, 30.0)])
def test_follower_stops_at_standstill_gap(world, v, gap):
    """Pushed at full throttle, a follower closing on a stopped leader comes to rest s0 behind it."""
    leader = place_vehicle(world, "N-C", -1.0)
    follower = place_vehicle(world, "N-C", leader.s - world.idm.vehicle_length - gap, v=v)
    for _ in range(15):
        world.step({leader.id: 0.0, follower.id: world.idm.a_max})
        assert world.leader_of(follower).gap >= world.idm.s0 - 1e-9
    assert world.leader_of(follower).gap == pytest.approx(world.idm.s0, abs=1e-6)
    assert follower.v < 1e-9
    assert world.safety_total == 0


def test_hold_position(world):
    held = place_vehicle(world, "N-C", -3.0)
    free = place_vehicle(world, "S-C", -3.0, granted=True)
    assert hold_position(held, world) == 0.0
    assert math.isinf(hold_position(free, world))


def test_follower_anticipates_leader_held_at_entrance(world):
    """A leader without a grant stops on the line harder than it could brake; its follower still keeps s0."""
    leader = place_vehicle(world, "N-C", -1.0, v=12.0)
    follower = place_vehicle(world, "N-C", -11.0, v=12.0)
    events = world.step({leader.id: 0.0, follower.id: world.idm.a_max})
    assert leader.s == 0.0
    assert world.leader_of(follower).gap >= world.idm.s0 - 1e-9
    assert events.safety == []


def test_safety_events_are_counted_not_warned(world, caplog):
    """An overlapping pair is recorded as a safety event and logged at debug level only."""
    leader = place_vehicle(world, "N-C", -10.0)
    follower = place_vehicle(world, "N-C", -12.0)
    with caplog.at_level(logging.DEBUG, logger="cxflow.sim.world"):
        events = world.step({leader.id: 0.0, follower.id: 0.0})
    assert events.safety == [follower.id]
    assert world.safety_total == 1
    assert any("non-positive gap" in r.message for r in caplog.records if r.levelno == logging.DEBUG)
    assert not [r for r in caplog.records if r.levelno >= logging.WARNING]


def test_crossing_streams_never_share_a_zone(world):
    """Two granted vehicles on crossing through streams take the box one after the other."""
    east = place_vehicle(world, "E-C", -2.0, v=5.0, granted=True)
    north = place_vehicle(world, "N-C", -2.0, v=5.0, granted=True)
    for _ in range(15):
        events = world.step({east.id: world.idm.a_max, north.id: world.idm.a_max})
        assert events.conflicts == []
    assert world.conflict_total == 0


def test_vehicle_removed_after_exit_link(world):
    vehicle = place_vehicle(world, "S-C", -1.0, v=13.0, granted=True)
    exited = []
    for _ in range(20):
        exited.extend(world.step().exited)
    assert exited == [vehicle.id]
    assert vehicle.id not in world.vehicles
    assert world.exited_total == 1


def test_human_vehicle_follows_free_idm():
    """HVs use the free IDM when no command is given."""
    world = create_dummy_world()
    vehicle = place_vehicle(world, "W-L", -60.0, v=0.0, kind=VehicleKind.HV)
    world.step()
    assert vehicle.v == pytest.approx(world.idm.a_max)
    assert vehicle.s == pytest.approx(-60.0 + world.idm.a_max)
