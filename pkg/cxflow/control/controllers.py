"""
Controllers turn a world snapshot into entry grants and commanded accelerations.

Three controllers share the :class:`Controller` protocol: fixed-time signals, no control at all (every vehicle
follows the first-zone rule) and the learned Stop/Go policy for online RVs, with human drivers and offline RVs still
following the first-zone rule.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Protocol, Set, Tuple

import numpy as np

from cxflow.common.enums import Action, ControllerKind, StatsSource, Zone
from cxflow.common.exceptions import ConfigError
from cxflow.common.streams import StreamId
from cxflow.control.models import ControllerConfig, Decision, PhasePlan
from cxflow.control.rules import (
    actuation,
    arriving,
    default_plan,
    front_vehicles,
    go_accel,
    notl_entry_rule,
    raw_conflict,
    resolve_conflicts,
    stop_accel,
    tl_controller,
)
from cxflow.perception.models import StreamStats
from cxflow.perception.observation import encode_observation, snapshot_occupancy, snapshot_stats
from cxflow.sim.geometry import Intersection
from cxflow.sim.idm import idm_accel, stopline_accel
from cxflow.sim.world import Vehicle, World

log = logging.getLogger(__name__)

Estimates = Mapping[int, Mapping[StreamId, StreamStats]]


@dataclass
class ControlOutput:
    """
    What a controller decided for one step.

    Attributes:
        accels (Dict[int, float]): commanded accelerations; vehicles left out drive by plain IDM.
        grants (List[int]): vehicles allowed to cross the entrance from now on.
        decisions (List[Decision]): Stop/Go decisions of online RVs.
        observations (Dict[int, np.ndarray]): encoded observation behind each decision.
    """

    accels: Dict[int, float] = field(default_factory=dict)
    grants: List[int] = field(default_factory=list)
    decisions: List[Decision] = field(default_factory=list)
    observations: Dict[int, np.ndarray] = field(default_factory=dict)


class DecisionPolicy(Protocol):
    def decide(self, observation: np.ndarray) -> Tuple[Action, bool]:
        """Returns the action and whether it was a random exploration draw."""
        ...


@dataclass
class ConstantPolicy:
    """Always returns the same action."""

    action: Action

    def decide(self, observation: np.ndarray) -> Tuple[Action, bool]:
        return self.action, False


class Controller(Protocol):
    kind: ControllerKind

    def control(self, world: World, estimates: Optional[Estimates] = None) -> ControlOutput:
        ...


def _stop_line_approach(vehicle: Vehicle, world: World) -> float:
    p = world.idm
    leader = world.leader_of(vehicle)
    accel = idm_accel(vehicle.v, leader.gap, leader.vehicle.v, p) if leader else idm_accel(vehicle.v, None, None, p)
    return min(accel, stopline_accel(vehicle.v, -vehicle.s, p))


def _granted_streams(world: World) -> Set[StreamId]:
    streams = set(world.inside_streams())
    streams.update(veh.stream for veh in world.vehicles.values() if veh.entry_granted and veh.s <= 0)
    return streams


def uncontrolled_entry(world: World, vehicles: List[Vehicle], fronts: Mapping[int, Vehicle], out: ControlOutput):
    """First-zone rule for vehicles without an RV controller: brake for the entrance until the rule lets them in."""
    for veh in vehicles:
        if veh.entry_granted or veh.s > 0:
            continue
        if veh.id in fronts and arriving(veh, world) and notl_entry_rule(veh, world):
            out.grants.append(veh.id)
            continue
        out.accels[veh.id] = _stop_line_approach(veh, world)


class SignalController:
    """
    Fixed-time traffic lights. Front vehicles on green streams that reach the entrance this step are let in; every
    other vehicle before the entrance brakes for the stop line.

    Args:
        plan: the signal plan.
        intersection: the topology, to check the plan against.

    Raises:
        ValueError: If a phase turns conflicting streams green together.
    """

    kind = ControllerKind.TL

    def __init__(self, plan: PhasePlan, intersection: Intersection):
        plan.check_conflict_free(intersection.conflict_table)
        self.plan = plan
        self.intersection = intersection

    def control(self, world: World, estimates: Optional[Estimates] = None) -> ControlOutput:
        out = ControlOutput()
        greens = tl_controller(self.plan, world.time)
        if not self.intersection.conflict_table.pairwise_free(greens):
            raise RuntimeError(f"conflicting streams green together at t={world.time}")
        fronts = front_vehicles(world)
        for veh in world.vehicles.values():
            if veh.entry_granted or veh.s > 0:
                continue
            if veh.stream in greens and veh.id in fronts and arriving(veh, world):
                out.grants.append(veh.id)
                continue
            out.accels[veh.id] = _stop_line_approach(veh, world)
        return out


class NoTLController:
    """No signals; every vehicle follows the first-zone rule."""

    kind = ControllerKind.NOTL

    def control(self, world: World, estimates: Optional[Estimates] = None) -> ControlOutput:
        out = ControlOutput()
        uncontrolled_entry(world, list(world.vehicles.values()), front_vehicles(world), out)
        return out


class PolicyController:
    """
    Online RVs in the control zone decide Stop or Go every step; arriving front Go decisions are gated by conflict
    resolution. Human drivers and offline RVs follow the first-zone rule.

    Args:
        policy: shared decision policy.
        intersection: the topology.
        stats_source: observation statistics from ground truth or from V2V estimates.
        resolution: gate Go decisions with conflict resolution; when off every arriving front Go is let in.
    """

    kind = ControllerKind.POLICY

    def __init__(
        self,
        policy: DecisionPolicy,
        intersection: Intersection,
        stats_source: StatsSource = StatsSource.GROUND_TRUTH,
        resolution: bool = True,
    ):
        self.policy = policy
        self.intersection = intersection
        self.stats_source = stats_source
        self.resolution = resolution

    def deciders(self, world: World) -> List[Vehicle]:
        return [
            veh
            for veh in world.vehicles.values()
            if veh.controlled and veh.zone == Zone.CONTROL_ZONE and not veh.entry_granted
        ]

    def control(self, world: World, estimates: Optional[Estimates] = None) -> ControlOutput:
        out = ControlOutput()
        stats = snapshot_stats(world)
        occupancy = snapshot_occupancy(world)
        fronts = front_vehicles(world)
        inside = set(world.inside_streams())

        uncontrolled = [veh for veh in world.vehicles.values() if not veh.controlled]
        uncontrolled_entry(world, uncontrolled, fronts, out)
        gated = _granted_streams(world)
        gated.update(world.vehicles[vid].stream for vid in out.grants)

        for veh in self.deciders(world):
            observation = encode_observation(
                veh,
                world,
                self.stats_source,
                estimates=(estimates or {}).get(veh.id),
                stats=stats,
                occupancy=occupancy,
            )
            vector = observation.to_vector()
            action, is_random = self.policy.decide(vector)
            is_front = veh.id in fronts
            out.decisions.append(
                Decision(
                    vehicle=veh.id,
                    stream=veh.stream,
                    lane=veh.lane,
                    action=action,
                    is_front=is_front,
                    arriving=is_front and arriving(veh, world),
                    random=is_random,
                )
            )
            out.observations[veh.id] = vector
            veh.current_action = action

        table = self.intersection.conflict_table
        for decision in out.decisions:
            decision.conflict = raw_conflict(decision, out.decisions, inside, table)

        candidates = [d for d in out.decisions if d.arriving and d.action == Action.GO]
        if self.resolution:
            granted = set(resolve_conflicts(candidates, gated, stats, self.intersection))
        else:
            granted = {d.vehicle for d in candidates}

        for decision in out.decisions:
            veh = world.vehicles[decision.vehicle]
            if decision.vehicle in granted:
                decision.granted = True
                out.grants.append(veh.id)
                out.accels[veh.id] = go_accel(veh, world)
            elif decision.arriving and decision.action == Action.GO:
                out.accels[veh.id] = stop_accel(veh, world)
            else:
                out.accels[veh.id] = actuation(decision.action, veh, world)

        for veh in world.vehicles.values():
            if veh.controlled and veh.entry_granted and veh.s <= 0:
                out.accels[veh.id] = go_accel(veh, world)
        return out


def make_controller(
    config: ControllerConfig,
    intersection: Intersection,
    policy: Optional[DecisionPolicy] = None,
    kind: Optional[ControllerKind] = None,
) -> Controller:
    """
    Builds the controller named by ``kind`` (default ``config.kind``).

    Raises:
        ConfigError: If a policy controller is requested without a policy.
    """
    kind = kind or config.kind
    if kind == ControllerKind.TL:
        return SignalController(config.plan or default_plan(intersection), intersection)
    if kind == ControllerKind.NOTL:
        return NoTLController()
    if policy is None:
        raise ConfigError("the policy controller needs a checkpoint", key="controller.checkpoint")
    return PolicyController(policy, intersection, config.stats_source, config.resolution)
