"""
The per-step loop shared by evaluation and training.

One :class:`IntersectionEnv` owns a world, its spawner, the named random substreams and the active controller. Each
step it applies due scenario events, spawns arrivals, shares V2V estimates when the controller reads them, lets the
controller decide, advances the world and appends a :class:`~cxflow.metrics.runlog.StepRecord` to its run log.

Example:
    >>> from cxflow.common.rng import RngStreams
    >>> from cxflow.control.models import ControllerConfig
    >>> from cxflow.demand.models import DemandProfile
    >>> from cxflow.sim.geometry import build_intersection
    >>> from cxflow.sim.models import IntersectionSpec
    >>> env = IntersectionEnv(
    ...     build_intersection(IntersectionSpec()),
    ...     DemandProfile(per_lane=300),
    ...     ControllerConfig(kind="notl"),
    ...     horizon=50,
    ...     rng=RngStreams(1),
    ... )
    >>> len(env.run())
    50
"""

import logging
from dataclasses import dataclass
from typing import Any, Callable, Dict, List, Mapping, Optional, Sequence

import numpy as np

from cxflow.common.enums import ControllerKind, EventKind, EventType, StatsSource, Zone
from cxflow.common.exceptions import ConfigError
from cxflow.common.rng import RngStreams
from cxflow.common.streams import StreamId, canonical_streams, stream_labels
from cxflow.comms.errors import EstimationErrorTracker
from cxflow.comms.models import CommConfig
from cxflow.comms.network import share_estimates
from cxflow.control.controllers import Controller, DecisionPolicy, PolicyController, make_controller
from cxflow.control.events import apply_event
from cxflow.control.models import ControllerConfig, Decision, EventSpec
from cxflow.demand.arrivals import Spawner, arrivals
from cxflow.demand.models import DemandProfile
from cxflow.metrics.runlog import DecisionRecord, EventRecord, RunLog, StepRecord, VehicleRecord, stream_wait
from cxflow.perception.models import StreamStats
from cxflow.perception.observation import snapshot_stats
from cxflow.sim.geometry import Intersection
from cxflow.sim.models import IdmParams
from cxflow.sim.world import StepEvents, Vehicle, World

log = logging.getLogger(__name__)

# (decision, own direction wait after the step) -> reward
RewardFn = Callable[[Decision, float], float]

LOGGED_ZONES = (Zone.CONTROL_ZONE, Zone.INSIDE)


@dataclass
class StepResult:
    """
    Outcome of one environment step.

    Attributes:
        record (StepRecord): what was appended to the run log.
        decisions (List[Decision]): Stop/Go decisions of online RVs this step.
        observations (Dict[int, np.ndarray]): encoded observation behind every decision.
        rewards (Dict[int, float]): per deciding vehicle, filled only when the env has a reward function.
        events (StepEvents): raw world events.
    """

    record: StepRecord
    decisions: List[Decision]
    observations: Dict[int, np.ndarray]
    rewards: Dict[int, float]
    events: StepEvents


def vehicle_record(veh: Vehicle) -> VehicleRecord:
    return VehicleRecord(
        id=veh.id,
        kind=veh.kind.value,
        stream=str(veh.stream),
        lane=veh.lane,
        s=float(veh.s),
        v=float(veh.v),
        zone=veh.zone.value,
        wait_accum=float(veh.wait_accum),
        longest_still=float(veh.longest_still),
        offline=veh.offline,
    )


class IntersectionEnv:
    """
    A single-intersection rollout.

    Args:
        intersection: the built topology.
        demand: arrival counts and RV rate.
        controller: controller selection; the TL plan and policy options come from here.
        horizon: number of steps.
        rng: named substreams of the rollout seed.
        idm: car following parameters, defaults when omitted.
        comm: V2V network model used when the stats source is V2V.
        events: scripted scenario events.
        policy: decision policy for the policy controller, initially or as a blackout successor.
        reward_fn: when given, every decision is rewarded after the step and the reward is logged.
        meta: extra run log metadata.

    Raises:
        ConfigError: If a policy controller is needed but no policy is given.
    """

    def __init__(
        self,
        intersection: Intersection,
        demand: DemandProfile,
        controller: ControllerConfig,
        horizon: int,
        rng: RngStreams,
        idm: Optional[IdmParams] = None,
        comm: Optional[CommConfig] = None,
        events: Sequence[EventSpec] = (),
        policy: Optional[DecisionPolicy] = None,
        reward_fn: Optional[RewardFn] = None,
        meta: Optional[Mapping[str, Any]] = None,
    ):
        if horizon <= 0:
            raise ConfigError(f"horizon must be positive, got {horizon}", key="horizon")
        needs_policy = controller.kind == ControllerKind.POLICY or any(
            e.kind == EventKind.BLACKOUT and e.successor == ControllerKind.POLICY for e in events
        )
        if needs_policy and policy is None:
            raise ConfigError("the policy controller needs a checkpoint", key="controller.checkpoint")

        self.intersection = intersection
        self.controller_config = controller
        self.horizon = horizon
        self.rng = rng
        self.comm = comm or CommConfig()
        self.events = sorted(events, key=lambda e: e.at_step)
        self.policy = policy
        self.reward_fn = reward_fn
        self.world = World(intersection, idm or IdmParams())
        self.rv_rate = demand.rv_rate
        schedule = arrivals(demand, horizon * self.world.dt, rng.get("demand"), intersection)
        self.spawner = Spawner(
            schedule=schedule,
            rv_rate=demand.rv_rate,
            kind_rng=rng.get("kind"),
            events_rng=rng.get("events"),
        )
        self.controller: Controller = make_controller(controller, intersection, policy)
        self.estimation = EstimationErrorTracker()

        run_meta: Dict[str, Any] = {
            "streams": [str(s) for s in intersection.streams],
            "slots": stream_labels(canonical_streams(intersection.mode)),
            "lanes": {str(s): n for s, n in intersection.lanes.items()},
            "mode": intersection.mode.value,
            "radius": intersection.spec.control_zone_radius,
            "dt": self.world.dt,
            "seed": rng.seed,
            "horizon": horizon,
            "controller": controller.kind.value,
            "scheduled": schedule.total,
        }
        run_meta.update(meta or {})
        self.run_log = RunLog(run_meta)
        log.debug(f"env ready: {controller.kind.value}, {schedule.total} arrivals over {horizon} steps")

    @property
    def done(self) -> bool:
        return self.world.step_index >= self.horizon

    def switch_controller(self, kind: ControllerKind) -> None:
        self.controller = make_controller(self.controller_config, self.intersection, self.policy, kind)

    def _estimates(self) -> Optional[Dict[int, Dict[StreamId, StreamStats]]]:
        controller = self.controller
        if not isinstance(controller, PolicyController) or controller.stats_source != StatsSource.V2V:
            return None
        receivers = [veh.id for veh in controller.deciders(self.world)]
        if not receivers:
            return {}
        estimates = share_estimates(self.world, self.comm, self.rng.get("comms"), receivers)
        truth = snapshot_stats(self.world)
        for vid in receivers:
            known = estimates[vid]
            self.estimation.record({s: st for s, st in truth.items() if st.l > 0 or s in known}, known)
        return estimates

    def step(self) -> StepResult:
        """
        Advances the rollout by one step.

        Raises:
            RuntimeError: If the horizon has been reached.
        """
        if self.done:
            raise RuntimeError(f"rollout finished after {self.horizon} steps")
        world = self.world
        step_index, start = world.step_index, world.time

        scenario = []
        for event in self.events:
            if event.at_step == step_index:
                detail = apply_event(self, event, self.rng.get("events"))
                if detail is not None:
                    scenario.append(detail)

        created = self.spawner.spawn(world)
        out = self.controller.control(world, self._estimates())
        for vid in out.grants:
            world.vehicles[vid].entry_granted = True
        labels = {vid: str(veh.stream) for vid, veh in world.vehicles.items()}
        kind = self.controller.kind

        events = world.step(out.accels)
        events.spawned = [veh.id for veh in created]
        events.scenario = scenario

        vehicles = tuple(vehicle_record(veh) for veh in world.vehicles.values() if veh.zone in LOGGED_ZONES)
        rewards: Dict[int, float] = {}
        decisions = []
        for decision in out.decisions:
            reward = None
            if self.reward_fn is not None:
                reward = self.reward_fn(decision, stream_wait(vehicles, str(decision.stream)))
                rewards[decision.vehicle] = reward
            decisions.append(
                DecisionRecord(
                    vehicle=decision.vehicle,
                    stream=str(decision.stream),
                    action=decision.action.value,
                    is_front=decision.is_front,
                    conflict=decision.conflict,
                    granted=decision.granted,
                    random=decision.random,
                    reward=reward,
                )
            )

        record = StepRecord(
            step=step_index,
            time=start,
            controller=kind.value,
            vehicles=vehicles,
            decisions=tuple(decisions),
            grants=tuple(out.grants),
            events=tuple(self._event_records(events, labels)),
        )
        self.run_log.append(record)
        return StepResult(record, out.decisions, out.observations, rewards, events)

    @staticmethod
    def _event_records(events: StepEvents, labels: Mapping[int, str]) -> List[EventRecord]:
        records = [EventRecord(EventType.SCENARIO.value, detail=d) for d in events.scenario]
        records += [EventRecord(EventType.SPAWN.value, vid, detail=labels.get(vid, "")) for vid in events.spawned]
        records += [EventRecord(EventType.ENTER.value, vid, detail=labels.get(vid, "")) for vid in events.entered]
        records += [EventRecord(EventType.EXIT.value, vid, detail=labels.get(vid, "")) for vid in events.exited]
        records += [EventRecord(EventType.CONFLICT.value, a, b) for a, b in events.conflicts]
        records += [EventRecord(EventType.SAFETY.value, vid) for vid in events.safety]
        return records

    def run(self) -> RunLog:
        """Steps until the horizon and returns the run log."""
        while not self.done:
            self.step()
        log.info(
            f"rollout seed={self.rng.seed} finished: {self.world.exited_total} exits, "
            f"{self.world.conflict_total} conflicts, {self.world.safety_total} safety truncations"
        )
        return self.run_log
