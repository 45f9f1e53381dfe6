"""
Mutable world state and the one-second transition.

Positions are measured along each vehicle's route: negative upstream of the entrance line, 0 on it, ``[0, L]``
across the box on the inner path of length L, and beyond L on the exit link the path feeds. Exit links are shared by
every path that leaves on the same arm and lane.

Example:
    >>> from cxflow.sim.geometry import build_intersection
    >>> from cxflow.sim.models import IdmParams, IntersectionSpec
    >>> from cxflow.sim.world import World
    >>> world = World(build_intersection(IntersectionSpec()), IdmParams())
    >>> world.vehicles
    {}
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Mapping, Optional, Tuple

import numpy as np

from cxflow.common.constants import DT, STILL_SPEED, STOP_LINE_MARGIN
from cxflow.common.enums import Action, VehicleKind, WaitingTimeMode, Zone
from cxflow.common.streams import StreamId, slot_index
from cxflow.common.types import PathKey, VehicleId
from cxflow.sim.geometry import ExitLink, InnerPath, Intersection
from cxflow.sim.idm import idm_accel, safe_speed_cap, stopline_accel
from cxflow.sim.models import IdmParams

log = logging.getLogger(__name__)


@dataclass
class Vehicle:
    """
    Kinematic and control state of one vehicle.

    Attributes:
        id (int): unique, increasing in spawn order.
        kind (VehicleKind): RV or HV.
        stream (StreamId): the movement it makes.
        lane (int): lane index within its stream.
        s (float): front bumper position along the route, m.
        v (float): speed, m/s.
        a (float): last applied acceleration, m/s².
        zone (Zone): where the vehicle is.
        wait_accum (float): total still time inside the control zone, s.
        still_run (float): length of the current still interval inside the control zone, s.
        longest_still (float): longest single still interval inside the control zone, s.
        current_action (Optional[Action]): last Stop/Go decision, None when not deciding.
        spawn_time (float): s.
        entry_granted (bool): whether it may cross the entrance line.
        offline (bool): an RV that lost its controller and now drives like an HV.
    """

    id: VehicleId
    kind: VehicleKind
    stream: StreamId
    lane: int
    s: float
    v: float
    a: float = 0.0
    zone: Zone = Zone.UPSTREAM
    wait_accum: float = 0.0
    still_run: float = 0.0
    longest_still: float = 0.0
    current_action: Optional[Action] = None
    spawn_time: float = 0.0
    entry_granted: bool = False
    offline: bool = False

    @property
    def path_key(self) -> PathKey:
        return (str(self.stream), self.lane)

    @property
    def distance(self) -> float:
        """Distance from the front bumper to the entrance line, 0 once across it."""
        return max(0.0, -self.s)

    @property
    def controlled(self) -> bool:
        """True for an RV that still follows the learned policy."""
        return self.kind == VehicleKind.RV and not self.offline

    def waiting_time(self, mode: WaitingTimeMode = WaitingTimeMode.ACCUMULATED) -> float:
        return self.wait_accum if mode == WaitingTimeMode.ACCUMULATED else self.longest_still


@dataclass
class StepEvents:
    """Everything that happened during one step, in the order it happened."""

    step: int
    spawned: List[VehicleId] = field(default_factory=list)
    entered: List[VehicleId] = field(default_factory=list)
    exited: List[VehicleId] = field(default_factory=list)
    conflicts: List[Tuple[VehicleId, VehicleId]] = field(default_factory=list)
    safety: List[VehicleId] = field(default_factory=list)
    scenario: List[str] = field(default_factory=list)


@dataclass(frozen=True)
class Leader:
    vehicle: Vehicle
    gap: float


class World:
    """
    All vehicles on one intersection plus the simulation clock.

    Args:
        intersection: the built topology.
        idm: car following parameters shared by every vehicle.
        dt: step length, s.
    """

    def __init__(self, intersection: Intersection, idm: IdmParams, dt: float = DT):
        self.intersection = intersection
        self.idm = idm
        self.dt = dt
        self.time = 0.0
        self.step_index = 0
        self.vehicles: Dict[VehicleId, Vehicle] = {}
        self.next_id = 0
        self.spawned_total = 0
        self.exited_total = 0
        self.safety_total = 0
        self.conflict_total = 0
        self._slots = slot_index(intersection.mode)
        self._by_path: Dict[PathKey, List[Vehicle]] = {}
        self._link_paths: Dict[ExitLink, List[PathKey]] = {}
        for key, path in sorted(intersection.paths.items()):
            self._link_paths.setdefault(path.exit_link, []).append(key)

    # ==================== Lookup ====================

    def path_of(self, vehicle: Vehicle) -> InnerPath:
        return self.intersection.paths[vehicle.path_key]

    def lane_vehicles(self, key: PathKey) -> List[Vehicle]:
        """Vehicles on one path, front first."""
        return sorted(self._by_path.get(key, []), key=lambda veh: -veh.s)

    def stream_vehicles(self, stream: StreamId) -> List[Vehicle]:
        return [veh for veh in self.vehicles.values() if veh.stream == stream]

    def in_zone(self, zone: Zone) -> List[Vehicle]:
        return [veh for veh in self.vehicles.values() if veh.zone == zone]

    def _link_position(self, vehicle: Vehicle) -> float:
        return vehicle.s - self.path_of(vehicle).length

    def leader_of(self, vehicle: Vehicle) -> Optional[Leader]:
        """
        The nearest vehicle ahead, either on the same path or already on the shared exit link.

        Returns:
            Optional[Leader]: the leader and the bumper to bumper gap measured in the follower's coordinate.
        """
        path = self.path_of(vehicle)
        best: Optional[Leader] = None
        length = self.idm.vehicle_length
        for key in self._link_paths[path.exit_link]:
            other_length = self.intersection.paths[key].length
            for other in self._by_path.get(key, []):
                if other.id == vehicle.id:
                    continue
                if key == vehicle.path_key:
                    position = other.s
                elif other.s > other_length:
                    position = path.length + other.s - other_length
                else:
                    continue
                if position <= vehicle.s:
                    continue
                gap = position - length - vehicle.s
                if best is None or gap < best.gap:
                    best = Leader(other, gap)
        return best

    def rear_vehicle(self, key: PathKey) -> Optional[Vehicle]:
        """The rearmost vehicle on a path, None when the path is empty."""
        on_path = self._by_path.get(key, [])
        return min(on_path, key=lambda veh: veh.s) if on_path else None

    def body_overlaps(self, vehicle: Vehicle, interval: Tuple[float, float]) -> bool:
        return vehicle.s > interval[0] and vehicle.s - self.idm.vehicle_length < interval[1]

    def in_conflict_zone(self, vehicle: Vehicle) -> bool:
        return any(self.body_overlaps(vehicle, z.own) for z in self.intersection.zones_on(vehicle.path_key))

    def zone_occupied(self, key: PathKey, interval: Tuple[float, float]) -> bool:
        return any(self.body_overlaps(veh, interval) for veh in self._by_path.get(key, []))

    def inside_streams(self) -> Dict[StreamId, int]:
        """Number of vehicles per stream whose body is inside the box."""
        counts: Dict[StreamId, int] = {}
        for veh in self.vehicles.values():
            if veh.zone == Zone.INSIDE:
                counts[veh.stream] = counts.get(veh.stream, 0) + 1
        return counts

    # ==================== Mutation ====================

    def add_vehicle(self, kind: VehicleKind, stream: StreamId, lane: int, s: float, v: float) -> Vehicle:
        vehicle = Vehicle(
            id=self.next_id,
            kind=kind,
            stream=stream,
            lane=lane,
            s=s,
            v=v,
            spawn_time=self.time,
        )
        vehicle.zone = classify_zone(s, self.path_of(vehicle).length, self)
        self.vehicles[vehicle.id] = vehicle
        self._by_path.setdefault(vehicle.path_key, []).append(vehicle)
        self.next_id += 1
        self.spawned_total += 1
        return vehicle

    def remove_vehicle(self, vehicle_id: VehicleId) -> None:
        vehicle = self.vehicles.pop(vehicle_id)
        self._by_path[vehicle.path_key].remove(vehicle)

    def step(self, controls: Optional[Mapping[VehicleId, float]] = None) -> StepEvents:
        return step(self, controls, self.dt)


def classify_zone(s: float, path_length: float, world: World) -> Zone:
    radius = world.intersection.spec.control_zone_radius
    if s < -radius:
        return Zone.UPSTREAM
    if s <= 0:
        return Zone.CONTROL_ZONE
    if s - world.idm.vehicle_length < path_length:
        return Zone.INSIDE
    return Zone.EXITED


def position_xy(vehicle: Vehicle, world: World) -> np.ndarray:
    """2-D coordinates of a vehicle's front bumper, with the intersection centre at the origin."""
    return world.path_of(vehicle).point_at(vehicle.s)


def interior_yield_position(vehicle: Vehicle, world: World) -> float:
    """
    The farthest position a vehicle may advance to without entering an occupied conflict zone.

    Zones are checked in path order. A zone whose start is already behind the front bumper is never a constraint, so a
    vehicle already inside a zone keeps its right of way. A zone is occupied when a vehicle on the conflicting path
    has its body inside the matching interval of that path.

    Returns:
        float: a position just before the first occupied zone ahead, or ``math.inf``.
    """
    length = world.idm.vehicle_length
    for zone in world.intersection.zones_on(vehicle.path_key):
        start, end = zone.own
        if vehicle.s - length >= end or vehicle.s > start:
            continue
        if world.zone_occupied(zone.other_key, zone.other):
            return start - STOP_LINE_MARGIN
    return math.inf


def _claim_order(world: World, vehicles: Iterable[Vehicle]) -> List[Vehicle]:
    # vehicles already in a conflict zone move first, then canonical stream order, front of each lane first
    def key(veh: Vehicle):
        return (
            0 if world.in_conflict_zone(veh) else 1,
            world._slots.get(veh.stream, len(world._slots)),
            veh.lane,
            -veh.s,
        )

    return sorted(vehicles, key=key)


def _detect_conflicts(world: World) -> List[Tuple[VehicleId, VehicleId]]:
    found = set()
    zones = world.intersection.zones
    by_path: Dict[PathKey, List[Vehicle]] = {}
    for veh in world.vehicles.values():
        if veh.zone == Zone.INSIDE:
            by_path.setdefault(veh.path_key, []).append(veh)
    for key, vehicles in by_path.items():
        for zone in zones.get(key, []):
            others = by_path.get(zone.other_key)
            if not others:
                continue
            for veh in vehicles:
                if not world.body_overlaps(veh, zone.own):
                    continue
                for other in others:
                    if world.body_overlaps(other, zone.other):
                        found.add((min(veh.id, other.id), max(veh.id, other.id)))
    return sorted(found)


def hold_position(vehicle: Vehicle, world: World) -> float:
    """
    The farthest position a vehicle may reach this step: its interior yield position, and the entrance line while it
    has no grant.
    """
    limit = interior_yield_position(vehicle, world)
    if not vehicle.entry_granted and vehicle.s <= 0:
        limit = min(limit, 0.0)
    return max(vehicle.s, limit)


def step(world: World, controls: Optional[Mapping[VehicleId, float]] = None, dt: float = DT) -> StepEvents:
    """
    Advances the world by one step.

    Accelerations are fixed first from the pre-step state: the commanded value (free IDM against the leader when no
    command is given), capped by :func:`safe_speed_cap` against the moving leader and against the leader held at its
    :func:`hold_position`, and by braking towards the interior yield position. Positions are then claimed one vehicle
    at a time, vehicles already in a conflict zone first, so every move sees the moves made before it. Each claim is
    truncated at the leader's rear, at the interior yield position and, for vehicles without an entry grant, at the
    entrance line.

    Args:
        world: the world, updated in place.
        controls: commanded acceleration per vehicle id.
        dt: step length, s.

    Returns:
        StepEvents: entries, exits, conflicts and safety truncations of this step.
    """
    events = StepEvents(step=world.step_index)
    controls = controls or {}
    p = world.idm

    accels: Dict[VehicleId, float] = {}
    leaders: Dict[VehicleId, Optional[Leader]] = {}
    for veh in world.vehicles.values():
        leader = world.leader_of(veh)
        leaders[veh.id] = leader
        gap = leader.gap if leader else math.inf
        leader_v = leader.vehicle.v if leader else None
        if leader is not None and gap <= 0:
            log.debug(f"vehicle {veh.id} has non-positive gap {gap:.3f} to {leader.vehicle.id}")
            events.safety.append(veh.id)
        commanded = controls.get(veh.id)
        if commanded is None:
            commanded = idm_accel(veh.v, gap, leader_v, p)
        accel = safe_speed_cap(commanded, veh.v, gap, leader_v, p, dt)
        if leader is not None:
            hold = hold_position(leader.vehicle, world)
            if not math.isinf(hold):
                accel = min(accel, safe_speed_cap(commanded, veh.v, gap + hold - leader.vehicle.s, 0.0, p, dt))
        limit = interior_yield_position(veh, world)
        if not math.isinf(limit):
            accel = min(accel, stopline_accel(veh.v, limit - veh.s, p))
        accels[veh.id] = max(-p.b_emergency, min(p.a_max, accel))

    for veh in _claim_order(world, list(world.vehicles.values())):
        accel = accels[veh.id]
        v_next = max(0.0, veh.v + accel * dt)
        target = veh.s + v_next * dt
        bound = target
        leader = leaders[veh.id]
        leader_bound = math.inf
        if leader is not None:
            ahead = leader.vehicle
            if ahead.path_key == veh.path_key:
                position = ahead.s
            else:
                position = world.path_of(veh).length + world._link_position(ahead)
            leader_bound = max(veh.s, position - p.vehicle_length)
        bound = min(bound, leader_bound, hold_position(veh, world))
        if bound < target:
            if bound == leader_bound and leader_bound < target:
                log.debug(f"vehicle {veh.id} truncated at the rear of {leader.vehicle.id}")
                events.safety.append(veh.id)
            target = max(veh.s, bound)
            v_next = (target - veh.s) / dt
        veh.a = max(-p.b_emergency, min(p.a_max, (v_next - veh.v) / dt))
        veh.v = v_next
        veh.s = target

    removed = []
    for veh in world.vehicles.values():
        path_length = world.path_of(veh).length
        zone = classify_zone(veh.s, path_length, world)
        if zone.rank < veh.zone.rank:
            zone = veh.zone
        if zone == Zone.INSIDE and veh.zone.rank < Zone.INSIDE.rank:
            events.entered.append(veh.id)
        if zone == Zone.EXITED and veh.zone != Zone.EXITED:
            events.exited.append(veh.id)
            world.exited_total += 1
        veh.zone = zone
        if zone == Zone.CONTROL_ZONE and veh.v < STILL_SPEED:
            veh.wait_accum += dt
            veh.still_run += dt
            veh.longest_still = max(veh.longest_still, veh.still_run)
        else:
            veh.still_run = 0.0
        if zone != Zone.CONTROL_ZONE:
            veh.current_action = None
        if veh.s >= path_length + world.intersection.spec.exit_length:
            removed.append(veh.id)
    for vid in removed:
        world.remove_vehicle(vid)

    events.conflicts = _detect_conflicts(world)
    if events.conflicts:
        log.error(f"conflict zone co-occupancy at step {world.step_index}: {events.conflicts}")
    world.conflict_total += len(events.conflicts)
    world.safety_total += len(events.safety)
    world.time += dt
    world.step_index += 1
    return events
