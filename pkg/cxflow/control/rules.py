"""
Entry rules shared by the controllers: Stop/Go actuation, priority scores, conflict resolution of Go decisions,
fixed-time signal lookup and the uncontrolled first-zone rule.
"""

import logging
import math
from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional, Set

from cxflow.common.constants import ENTRANCE_TOLERANCE, QUEUE_SLOTS_PER_LANE, STILL_SPEED, W_MAX
from cxflow.common.enums import Action, DirectionMode
from cxflow.common.streams import StreamId, slot_index
from cxflow.control.models import Decision, Phase, PhasePlan
from cxflow.perception.models import EMPTY_STATS, StreamStats
from cxflow.sim.geometry import ConflictTable, Intersection
from cxflow.sim.idm import idm_accel
from cxflow.sim.world import Vehicle, World

log = logging.getLogger(__name__)


# ==================== Actuation ====================


def go_accel(vehicle: Vehicle, world: World) -> float:
    """Full acceleration up to the desired speed, following the leader by IDM when there is one."""
    p = world.idm
    accel = min(p.a_max, (p.v0 - vehicle.v) / world.dt)
    leader = world.leader_of(vehicle)
    if leader is not None:
        accel = min(accel, idm_accel(vehicle.v, leader.gap, leader.vehicle.v, p))
    return max(-p.b_emergency, accel)


def front_distance(vehicle: Vehicle, world: World) -> float:
    """Room ahead of a stopping vehicle: the entrance line or the standstill gap behind its leader, if closer."""
    distance = -vehicle.s if vehicle.s <= 0 else math.inf
    leader = world.leader_of(vehicle)
    if leader is not None:
        distance = min(distance, leader.gap - world.idm.s0)
    return distance


def stop_accel(vehicle: Vehicle, world: World) -> float:
    """
    Deceleration that brings a vehicle to rest within its front distance, ``-v² / (2 d_front)``.

    A still vehicle holds with 0; one creeping within the entrance tolerance stops outright.
    """
    p = world.idm
    v = vehicle.v
    if v <= 0:
        return 0.0
    d_front = front_distance(vehicle, world)
    if d_front < ENTRANCE_TOLERANCE and v < STILL_SPEED:
        return -v / world.dt
    if d_front <= 0:
        return -p.b_emergency
    if math.isinf(d_front):
        return 0.0
    return max(-p.b_emergency, -(v**2) / (2.0 * d_front))


def actuation(action: Action, vehicle: Vehicle, world: World) -> float:
    """
    Commanded acceleration of an RV for a Stop/Go action.

    Go drives at ``a_max`` up to the desired speed, still bounded by car following and, in the world step, by the
    safe speed cap and entry gating. Stop brakes to rest at the entrance or behind the leader.
    """
    if action == Action.GO:
        return go_accel(vehicle, world)
    return stop_accel(vehicle, world)


# ==================== Conflict resolution ====================


def priority_score(l: float, w: float, lanes: int) -> float:  # noqa: E741
    """
    Urgency of a direction in ``[0, 1]``: the mean of its waiting time over 200 s and its queue over the control zone
    capacity, each capped at 1.
    """
    cap = QUEUE_SLOTS_PER_LANE * max(lanes, 1)
    return 0.5 * (min(w, W_MAX) / W_MAX + min(l, cap) / cap)


def raw_conflict(
    decision: Decision,
    decisions: Iterable[Decision],
    inside: Iterable[StreamId],
    table: ConflictTable,
) -> bool:
    """
    Conflict predicate on raw policy outputs: a front Go while a conflicting stream has a vehicle inside the box, or
    while another front RV on a conflicting stream also chose Go.
    """
    if decision.action != Action.GO or not decision.is_front:
        return False
    if any(table.conflicts(decision.stream, s) for s in inside):
        return True
    return any(
        other.vehicle != decision.vehicle
        and other.is_front
        and other.action == Action.GO
        and table.conflicts(decision.stream, other.stream)
        for other in decisions
    )


def resolve_conflicts(
    candidates: List[Decision],
    inside: Iterable[StreamId],
    stats: Mapping[StreamId, StreamStats],
    intersection: Intersection,
) -> List[int]:
    """
    Grants entry to arriving front Go decisions.

    A candidate is any front vehicle that :func:`arriving` says can reach the entrance line within the coming step,
    not only one already within ``ENTRANCE_TOLERANCE`` of it. A moving vehicle is granted on its approach and
    crosses the line without stopping; a held vehicle qualifies only once it rests within the tolerance.

    Candidates on a stream that conflicts with a vehicle inside the box are held. The rest are ranked by the priority
    score of their direction, ties by canonical stream order, and granted greedily; each grant holds the later
    candidates on conflicting streams.

    Args:
        candidates: front Go decisions at the entrance.
        inside: streams with a vehicle inside the box or already granted.
        stats: per-direction statistics for the priority score.
        intersection: the topology.

    Returns:
        List[int]: granted vehicle ids in grant order.
    """
    table = intersection.conflict_table
    occupied: Set[StreamId] = set(inside)
    order = slot_index(intersection.mode)

    def rank(decision: Decision):
        st = stats.get(decision.stream, EMPTY_STATS)
        score = priority_score(st.l, st.w, intersection.lanes.get(decision.stream, 1))
        return (-score, order[decision.stream], decision.lane, decision.vehicle)

    granted: List[int] = []
    granted_streams: Set[StreamId] = set()
    for decision in sorted(candidates, key=rank):
        if any(table.conflicts(decision.stream, s) for s in occupied):
            continue
        if any(table.conflicts(decision.stream, s) for s in granted_streams):
            continue
        granted.append(decision.vehicle)
        granted_streams.add(decision.stream)
    return granted


# ==================== Baselines ====================


def default_plan(intersection: Intersection) -> PhasePlan:
    """
    Protected-left four phase plan: N/S through, N/S left, E/W through, E/W left. Right turns, when controlled, join
    the through phases of their arm. Streams absent from the intersection are dropped, and so are emptied phases.
    """
    active = set(intersection.streams)
    groups = [
        [("N", "C"), ("S", "C")],
        [("N", "L"), ("S", "L")],
        [("E", "C"), ("W", "C")],
        [("E", "L"), ("W", "L")],
    ]
    if intersection.mode == DirectionMode.TWELVE:
        groups[0] += [("N", "R"), ("S", "R")]
        groups[2] += [("E", "R"), ("W", "R")]
    phases = []
    for group in groups:
        streams = [f"{a}-{m}" for a, m in group]
        present = [s for s in streams if any(str(x) == s for x in active)]
        if present:
            phases.append(Phase(streams=present))
    return PhasePlan(phases=phases)


def tl_controller(plan: PhasePlan, t: float) -> FrozenSet[StreamId]:
    """
    Green streams at time t. Yellow and all-red intervals return the empty set.
    """
    offset = math.fmod(t, plan.cycle)
    if offset < 0:
        offset += plan.cycle
    for phase in plan.phases:
        if offset < phase.green:
            return phase.green_set()
        offset -= phase.duration
        if offset < 0:
            return frozenset()
    return frozenset()


def notl_entry_rule(vehicle: Vehicle, world: World) -> bool:
    """
    Uncontrolled entry: enter when the first conflict zone on the path is free. Spillback and approaching cross
    traffic are not considered.

    Zones of different crossing paths often overlap on the ego path; all of those overlapping the first one count as
    that zone.
    """
    zones = world.intersection.zones_on(vehicle.path_key)
    if not zones:
        return True
    start, end = zones[0].own
    return not any(
        z.own[0] < end and z.own[1] > start and world.zone_occupied(z.other_key, z.other) for z in zones
    )


# ==================== Entrance ====================


def front_vehicles(world: World) -> Dict[int, Vehicle]:
    """The vehicle nearest the entrance on every lane, among those not yet across it, keyed by id."""
    fronts: Dict[int, Vehicle] = {}
    for key in sorted(world.intersection.paths):
        waiting = [veh for veh in world.lane_vehicles(key) if veh.s <= 0]
        if waiting:
            fronts[waiting[0].id] = waiting[0]
    return fronts


def arriving(vehicle: Vehicle, world: World, dt: Optional[float] = None) -> bool:
    """True when a vehicle can reach the entrance line within the coming step."""
    step = world.dt if dt is None else dt
    reach = vehicle.v * step + world.idm.a_max * step * step
    return vehicle.distance <= max(ENTRANCE_TOLERANCE, reach)

