"""
Ground truth traffic statistics, interior occupancy and observation encoding.
"""

import logging
import math
from typing import Dict, List, Mapping, Optional, Tuple

from cxflow.common.constants import OCCUPANCY_SEGMENTS, STILL_SPEED, V_LEN
from cxflow.common.enums import StatsSource, VehicleKind, Zone
from cxflow.common.exceptions import ObservationError
from cxflow.common.streams import StreamId, canonical_streams, parse_stream
from cxflow.common.utils import mean_of
from cxflow.perception.models import EMPTY_OCCUPANCY, EMPTY_STATS, Observation, StreamStats
from cxflow.sim.world import Vehicle, World

log = logging.getLogger(__name__)

QUEUE_JOIN_MARGIN = 0.5


def queued_vehicles(world: World, stream: StreamId) -> List[Vehicle]:
    """
    Control zone vehicles of a direction that are queued: still, or close behind a queued vehicle of the same lane.
    """
    queued = []
    join_gap = world.idm.s0 + QUEUE_JOIN_MARGIN
    for lane in range(world.intersection.lanes.get(stream, 0)):
        previous: Optional[Vehicle] = None
        previous_queued = False
        for veh in world.lane_vehicles((str(stream), lane)):
            if veh.zone != Zone.CONTROL_ZONE:
                previous, previous_queued = veh, False
                continue
            member = veh.v < STILL_SPEED
            if not member and previous is not None and previous_queued:
                gap = previous.s - world.idm.vehicle_length - veh.s
                member = gap < join_gap
            if member:
                queued.append(veh)
            previous, previous_queued = veh, member
    return queued


def ground_truth_stream_stats(world: World, stream: StreamId) -> StreamStats:
    """
    Queue length and mean waiting time of one direction, read from the world.

    Returns:
        StreamStats: ``l`` counts queued control zone vehicles; ``w`` is the mean accumulated wait of every control
        zone vehicle of the direction, 0 when there is none.
    """
    in_zone = [
        veh.wait_accum for veh in world.vehicles.values() if veh.stream == stream and veh.zone == Zone.CONTROL_ZONE
    ]
    return StreamStats(float(len(queued_vehicles(world, stream))), mean_of(in_zone))


def occupancy_map(world: World, stream: StreamId) -> Tuple[int, ...]:
    """
    Ten interior segment flags of a direction; segment k is set when a vehicle front lies in ``[k/10, (k+1)/10)`` of
    its inner path.
    """
    flags = [0] * OCCUPANCY_SEGMENTS
    for lane in range(world.intersection.lanes.get(stream, 0)):
        path = world.intersection.path(stream, lane)
        for veh in world.lane_vehicles(path.key):
            if 0 < veh.s <= path.length:
                segment = min(int(math.floor(OCCUPANCY_SEGMENTS * veh.s / path.length)), OCCUPANCY_SEGMENTS - 1)
                flags[segment] = 1
    return tuple(flags)


def ego_estimates(vehicle: Vehicle) -> Optional[StreamStats]:
    """
    What a stopped RV can tell others about its direction: queue length up to itself and its own waiting time.

    Returns:
        Optional[StreamStats]: ``(d / 5, wait_accum)``, or None for a vehicle that is moving, not an online RV or not
        in the control zone.
    """
    if vehicle.kind != VehicleKind.RV or vehicle.offline:
        return None
    if vehicle.zone != Zone.CONTROL_ZONE or vehicle.v >= STILL_SPEED:
        return None
    return StreamStats(vehicle.distance / V_LEN, vehicle.wait_accum)


def snapshot_stats(world: World) -> Dict[StreamId, StreamStats]:
    """Ground truth statistics of every active direction."""
    return {stream: ground_truth_stream_stats(world, stream) for stream in world.intersection.streams}


def snapshot_occupancy(world: World) -> Dict[StreamId, Tuple[int, ...]]:
    return {stream: occupancy_map(world, stream) for stream in world.intersection.streams}


def encode_observation(
    ego: Vehicle,
    world: World,
    source: StatsSource = StatsSource.GROUND_TRUTH,
    estimates: Optional[Mapping[StreamId, StreamStats]] = None,
    stats: Optional[Mapping[StreamId, StreamStats]] = None,
    occupancy: Optional[Mapping[StreamId, Tuple[int, ...]]] = None,
) -> Observation:
    """
    Builds the observation of one deciding RV.

    Args:
        ego: the deciding vehicle.
        world: the current world.
        source: where per-direction statistics come from.
        estimates: per-direction statistics aggregated from V2V messages, used when ``source`` is V2V. Directions
          without messages read as zero.
        stats: precomputed ground truth statistics, to share one computation between all egos of a step.
        occupancy: precomputed occupancy maps.

    Returns:
        Observation: fixed length for the intersection's mode; absent directions are zero filled.

    Raises:
        ObservationError: If the ego is not in the control zone.
    """
    if ego.zone != Zone.CONTROL_ZONE:
        raise ObservationError(f"vehicle {ego.id} is {ego.zone.value}, observations exist only in the control zone")
    inter = world.intersection
    if source == StatsSource.V2V:
        table = {parse_stream(k): v for k, v in (estimates or {}).items()}
    else:
        table = dict(stats) if stats is not None else snapshot_stats(world)
    occ = dict(occupancy) if occupancy is not None else snapshot_occupancy(world)

    slots = canonical_streams(inter.mode)
    return Observation(
        mode=inter.mode,
        stats=tuple(table.get(s, EMPTY_STATS) if s in inter.lanes else EMPTY_STATS for s in slots),
        occupancy=tuple(occ.get(s, EMPTY_OCCUPANCY) if s in inter.lanes else EMPTY_OCCUPANCY for s in slots),
        d=ego.distance,
        lanes=tuple(inter.lanes.get(s, 0) for s in slots),
        radius=inter.spec.control_zone_radius,
    )
