"""
Arrival schedules and the spawner that turns them into vehicles.

Example:
    >>> import numpy as np
    >>> from cxflow.sim import IntersectionSpec, build_intersection
    >>> profile = DemandProfile(counts={"N-C": 360}, arrival_model=ArrivalModel.UNIFORM)
    >>> inter = build_intersection(IntersectionSpec())
    >>> schedule = arrivals(profile, 60.0, np.random.default_rng(0), inter)
    >>> schedule.times[parse_stream("N-C")].tolist()
    [0.0, 10.0, 20.0, 30.0, 40.0, 50.0]
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from cxflow.common.enums import ArrivalModel, VehicleKind, Zone
from cxflow.common.streams import StreamId, parse_stream, slot_index
from cxflow.demand.models import DemandProfile
from cxflow.sim.geometry import Intersection
from cxflow.sim.idm import idm_accel, safe_speed_cap
from cxflow.sim.world import Vehicle, World

log = logging.getLogger(__name__)


@dataclass
class ArrivalSchedule:
    """
    Sorted arrival times per stream over a horizon.

    Attributes:
        times (Dict[StreamId, np.ndarray]): arrival times in seconds, ascending.
        horizon (float): s.
    """

    times: Dict[StreamId, np.ndarray]
    horizon: float

    @property
    def total(self) -> int:
        return int(sum(len(t) for t in self.times.values()))

    def due(self, stream: StreamId, until: float) -> int:
        """Number of arrivals of a stream at or before ``until``."""
        times = self.times.get(stream)
        if times is None:
            return 0
        return int(np.searchsorted(times, until, side="right"))

    def as_list(self, order: Optional[Dict[StreamId, int]] = None) -> List[Tuple[float, StreamId]]:
        """Every arrival as ``(time, stream)``, by time then stream order."""
        rank = order or {}
        items = [(float(t), s) for s, times in self.times.items() for t in times]
        return sorted(items, key=lambda item: (item[0], rank.get(item[1], 0), str(item[1])))


def _poisson_times(rate: float, horizon: float, rng: np.random.Generator) -> np.ndarray:
    chunk = int(rate * horizon + 6.0 * math.sqrt(rate * horizon) + 16)
    times = np.cumsum(rng.exponential(1.0 / rate, size=chunk))
    while times[-1] < horizon:
        extra = times[-1] + np.cumsum(rng.exponential(1.0 / rate, size=chunk))
        times = np.concatenate([times, extra])
    return times[times < horizon]


def arrivals(
    profile: DemandProfile, horizon: float, rng: np.random.Generator, intersection: Intersection
) -> ArrivalSchedule:
    """
    Draws the arrival schedule for every active stream.

    Streams are drawn in canonical order so the schedule depends only on the profile, horizon and generator state.

    Args:
        profile: hourly counts and arrival model.
        horizon: length of the schedule, s.
        rng: the ``demand`` substream.
        intersection: the topology, for active streams and lanes.

    Returns:
        ArrivalSchedule: arrival times per stream.

    Raises:
        ValueError: If the horizon is not positive.
    """
    if horizon <= 0:
        raise ValueError(f"horizon must be positive, got {horizon}")
    for key in profile.counts:
        stream = parse_stream(key)
        if stream not in intersection.lanes:
            log.warning(f"demand for {stream} ignored, stream is not active on this intersection")
    times: Dict[StreamId, np.ndarray] = {}
    for stream in intersection.streams:
        count = profile.count(stream, intersection.lanes[stream])
        if count <= 0:
            times[stream] = np.zeros(0)
        elif profile.arrival_model == ArrivalModel.UNIFORM:
            headway = 3600.0 / count
            times[stream] = np.arange(int(math.ceil(horizon / headway))) * headway
            times[stream] = times[stream][times[stream] < horizon]
        else:
            times[stream] = _poisson_times(count / 3600.0, horizon, rng)
    log.debug(f"scheduled {sum(len(t) for t in times.values())} arrivals over {horizon:.0f} s")
    return ArrivalSchedule(times=times, horizon=horizon)


@dataclass
class Spawner:
    """
    Releases scheduled arrivals into a world and keeps a backlog of the ones that did not fit.

    Args:
        schedule: arrivals to release.
        rv_rate: probability that a spawned vehicle is an RV.
        kind_rng: the ``kind`` substream, one draw per spawned vehicle.
        events_rng: the ``events`` substream, used only once an RV rate drop is in force.
    """

    schedule: ArrivalSchedule
    rv_rate: float
    kind_rng: np.random.Generator
    events_rng: Optional[np.random.Generator] = None
    offline_probability: float = 0.0
    released: Dict[StreamId, int] = field(default_factory=dict)
    spawned: Dict[StreamId, int] = field(default_factory=dict)

    @property
    def backlog(self) -> Dict[StreamId, int]:
        return {s: self.released.get(s, 0) - self.spawned.get(s, 0) for s in self.schedule.times}

    def scheduled(self, stream: StreamId) -> int:
        return self.released.get(stream, 0)

    def add_drop(self, probability: float) -> None:
        """Compounds a further conversion probability onto future RVs."""
        self.offline_probability = 1.0 - (1.0 - self.offline_probability) * (1.0 - probability)

    def spawn(self, world: World) -> List[Vehicle]:
        """
        Releases every arrival due by the world clock and spawns as many as the lanes admit.

        Returns:
            List[Vehicle]: the vehicles created this step, in stream order.
        """
        created = []
        order = slot_index(world.intersection.mode)
        for stream in sorted(self.schedule.times, key=lambda s: order[s]):
            self.released[stream] = self.schedule.due(stream, world.time)
            while self.released[stream] > self.spawned.get(stream, 0):
                lane = _free_lane(world, stream)
                if lane is None:
                    break
                kind = VehicleKind.RV if self.kind_rng.random() < self.rv_rate else VehicleKind.HV
                vehicle = world.add_vehicle(kind, stream, lane, -world.intersection.spec.approach_length, world.idm.v0)
                if kind == VehicleKind.RV and self.offline_probability > 0 and self.events_rng is not None:
                    vehicle.offline = bool(self.events_rng.random() < self.offline_probability)
                self.spawned[stream] = self.spawned.get(stream, 0) + 1
                created.append(vehicle)
        return created


def _lane_load(world: World, stream: StreamId, lane: int) -> int:
    return sum(1 for veh in world.lane_vehicles((str(stream), lane)) if veh.zone.rank <= Zone.CONTROL_ZONE.rank)


def insertion_permitted(world: World, stream: StreamId, lane: int) -> bool:
    """
    True when a vehicle entering at v0 at the upstream end of the lane keeps the standstill gap to the lane's rear
    vehicle and needs no more than the comfortable deceleration ``b`` on its first step.
    """
    rear = world.rear_vehicle((str(stream), lane))
    if rear is None:
        return True
    p = world.idm
    gap = rear.s - p.vehicle_length + world.intersection.spec.approach_length
    if gap < p.s0 or idm_accel(p.v0, gap, rear.v, p) < -p.b:
        return False
    return safe_speed_cap(p.a_max, p.v0, gap, rear.v, p, world.dt) > -p.b_emergency


def _free_lane(world: World, stream: StreamId) -> Optional[int]:
    lanes = range(world.intersection.lanes[stream])
    for lane in sorted(lanes, key=lambda k: (_lane_load(world, stream, k), k)):
        if insertion_permitted(world, stream, lane):
            return lane
    return None


def spawn(world: World, spawner: Spawner) -> List[Vehicle]:
    """Spawns due arrivals; blocked ones stay in the spawner's backlog and are retried next step."""
    return spawner.spawn(world)
