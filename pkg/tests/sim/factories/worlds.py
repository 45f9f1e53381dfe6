from typing import Optional

from cxflow.common.enums import VehicleKind
from cxflow.common.streams import parse_stream
from cxflow.sim.geometry import Intersection, build_intersection
from cxflow.sim.models import IdmParams, IntersectionSpec
from cxflow.sim.world import Vehicle, World


def create_dummy_world(intersection: Optional[Intersection] = None, idm: Optional[IdmParams] = None) -> World:
    """
    Creates an empty world on the canonical 4-way intersection for testing.

    Returns:
        World: a world at t = 0 without vehicles.
    """
    return World(intersection or build_intersection(IntersectionSpec()), idm or IdmParams())


def place_vehicle(
    world: World,
    stream: str,
    s: float,
    v: float = 0.0,
    kind: VehicleKind = VehicleKind.RV,
    lane: int = 0,
    granted: bool = False,
    wait: float = 0.0,
) -> Vehicle:
    """
    Puts a vehicle at a given position.

    Args:
        world: the world to add to.
        stream: stream label, e.g. ``"N-C"``.
        s: position along the route, negative before the entrance.
        v: speed.
        kind: RV or HV.
        lane: lane index within the stream.
        granted: whether it may already cross the entrance line.
        wait: accumulated waiting time to start from.

    Returns:
        Vehicle: the placed vehicle.
    """
    vehicle = world.add_vehicle(kind, parse_stream(stream), lane, s, v)
    vehicle.entry_granted = granted
    vehicle.wait_accum = wait
    return vehicle
