"""
Centralized training of the shared Stop/Go policy.

Every RV in the control zone queries one shared network each step; all their transitions go to one replay buffer and
one learner updates the network once per environment step after the warmup.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np
import pandas as pd
import torch

from cxflow.common.enums import ControllerKind
from cxflow.common.exceptions import ConfigError
from cxflow.common.rng import RngStreams
from cxflow.comms.models import CommConfig
from cxflow.control.env import IntersectionEnv
from cxflow.control.models import ControllerConfig, Decision
from cxflow.demand.models import DemandProfile
from cxflow.learn.loss import td_loss
from cxflow.learn.models import LearnConfig, Transition
from cxflow.learn.network import EpsilonSchedule, ExplorationPolicy, ValueNetwork
from cxflow.learn.replay import PrioritizedReplayBuffer, sample_prioritized, sample_uniform
from cxflow.learn.reward import reward
from cxflow.metrics.evaluation import CongestionDetector, WaitTracker
from cxflow.metrics.runlog import RunLog
from cxflow.perception.models import Observation
from cxflow.sim.geometry import Intersection
from cxflow.sim.models import IdmParams

log = logging.getLogger(__name__)

CURVE_COLUMNS = [
    "epoch",
    "cumulative_wait",
    "conflicts",
    "epsilon",
    "decisions",
    "steps",
    "early_terminated",
    "updates",
]


@dataclass
class TrainingResult:
    """
    Attributes:
        network (ValueNetwork): the trained online network.
        curves (pd.DataFrame): one row per episode, columns :data:`CURVE_COLUMNS`.
        logs (List[RunLog]): run logs of every episode when kept.
    """

    network: ValueNetwork
    curves: pd.DataFrame
    logs: List[RunLog] = field(default_factory=list)


class Trainer:
    """
    Args:
        intersection: the built topology.
        demand: arrival counts and RV rate.
        horizon: steps per episode.
        learn: hyperparameters.
        rng: named substreams; episode ``k`` runs its traffic on ``rng.derive(k + 1)``.
        controller: policy controller options; the kind is forced to policy.
        idm: car following parameters.
        comm: V2V network model for V2V statistics.
        initial: network to continue training from.
        keep_logs: keep the run log of every episode.

    Raises:
        ConfigError: If the initial network does not fit the intersection's observation width.
    """

    def __init__(
        self,
        intersection: Intersection,
        demand: DemandProfile,
        horizon: int,
        learn: LearnConfig,
        rng: RngStreams,
        controller: Optional[ControllerConfig] = None,
        idm: Optional[IdmParams] = None,
        comm: Optional[CommConfig] = None,
        initial: Optional[ValueNetwork] = None,
        keep_logs: bool = False,
    ):
        width = Observation.length(intersection.mode)
        if initial is not None and initial.input_dim != width:
            raise ConfigError(
                f"network input {initial.input_dim} does not match {intersection.mode.value} observations ({width})",
                key="intersection.mode",
            )
        self.intersection = intersection
        self.demand = demand
        self.horizon = horizon
        self.cfg = learn
        self.rng = rng
        base = controller or ControllerConfig()
        self.controller = base.model_copy(update={"kind": ControllerKind.POLICY, "epsilon": 0.0})
        self.idm = idm
        self.comm = comm
        self.keep_logs = keep_logs

        self.net = initial or ValueNetwork(width, learn.hidden, rng.get("net_init"))
        self.target = self.net.target_copy()
        self.optimizer = torch.optim.SGD(self.net.parameters(), lr=learn.lr, momentum=learn.momentum)
        self.buffer = PrioritizedReplayBuffer(learn.buffer_capacity, width)
        self.policy = ExplorationPolicy(
            self.net,
            EpsilonSchedule(learn.epsilon_start, learn.epsilon_end, learn.epsilon_decay),
            rng.get("exploration"),
        )
        self.updates = 0
        self._zeros = np.zeros(width, dtype=np.float64)

    def _reward(self, decision: Decision, own_wait_next: float) -> float:
        return reward(decision.action, own_wait_next, decision.conflict, self.cfg.reward)

    def update(self) -> float:
        """One gradient step on a sampled minibatch; returns the loss."""
        cfg = self.cfg
        replay_rng = self.rng.get("replay")
        if cfg.prioritized:
            batch = sample_prioritized(self.buffer, cfg.batch, cfg.priority_alpha, cfg.is_beta, replay_rng)
        else:
            batch = sample_uniform(self.buffer, cfg.batch, replay_rng)
        result = td_loss(batch, self.net, self.target)
        self.optimizer.zero_grad()
        for param, grad in zip(self.net.parameters(), result.grads):
            param.grad = grad
        self.optimizer.step()
        if cfg.prioritized:
            self.buffer.update_priorities(batch.indices, result.td_errors)
        self.updates += 1
        if self.updates % cfg.target_sync_every == 0:
            self.target.load_state_dict(self.net.state_dict())
            log.debug(f"target network synced after {self.updates} updates")
        return float(result.loss)

    def _close(self, pending: Dict[int, Tuple[np.ndarray, int, float]], vid: int, next_obs=None) -> None:
        obs, action, r = pending.pop(vid)
        if next_obs is None:
            self.buffer.add(Transition(obs, action, r, self._zeros, 0.0))
        else:
            self.buffer.add(Transition(obs, action, r, next_obs, self.cfg.gamma))

    def episode(self, index: int) -> Tuple[Dict[str, object], RunLog]:
        """Runs one episode and returns its curve row and run log."""
        env = IntersectionEnv(
            self.intersection,
            self.demand,
            self.controller,
            self.horizon,
            self.rng.derive(index + 1),
            idm=self.idm,
            comm=self.comm,
            policy=self.policy,
            reward_fn=self._reward,
            meta={"episode": index},
        )
        pending: Dict[int, Tuple[np.ndarray, int, float]] = {}
        detector = CongestionDetector()
        early = False
        decisions = 0
        conflicts = 0
        while not env.done:
            result = env.step()
            deciding = {d.vehicle for d in result.decisions}
            for vid in [v for v in pending if v not in deciding]:
                self._close(pending, vid)
            for decision in result.decisions:
                obs = result.observations[decision.vehicle]
                if decision.vehicle in pending:
                    self._close(pending, decision.vehicle, obs)
                pending[decision.vehicle] = (obs, decision.action.index, result.rewards[decision.vehicle])
                decisions += 1
                conflicts += int(decision.conflict)
            if len(self.buffer) >= max(self.cfg.warmup, self.cfg.batch):
                self.update()
            detector.add(result.record)
            if self.cfg.early_termination and detector.triggered:
                early = True
                log.info(f"episode {index} stopped early at step {result.record.step}: sustained congestion")
                break
        for vid in list(pending):
            self._close(pending, vid)

        waits = WaitTracker()
        for record in env.run_log:
            waits.add(record)
        row = {
            "epoch": index,
            "cumulative_wait": waits.total(),
            "conflicts": conflicts,
            "epsilon": self.policy.epsilon,
            "decisions": decisions,
            "steps": len(env.run_log),
            "early_terminated": early,
            "updates": self.updates,
        }
        return row, env.run_log

    def train(self) -> TrainingResult:
        rows = []
        logs = []
        for index in range(self.cfg.episodes):
            row, run_log = self.episode(index)
            rows.append(row)
            if self.keep_logs:
                logs.append(run_log)
            log.info(
                f"episode {index}: wait {row['cumulative_wait']:.1f}, {row['conflicts']} conflicting decisions "
                f"of {row['decisions']}, epsilon {row['epsilon']:.3f}"
            )
        return TrainingResult(self.net, pd.DataFrame(rows, columns=CURVE_COLUMNS), logs)


def train(
    intersection: Intersection,
    demand: DemandProfile,
    horizon: int,
    learn: LearnConfig,
    rng: RngStreams,
    **kwargs,
) -> TrainingResult:
    """Trains a shared policy; see :class:`Trainer` for the keyword arguments."""
    return Trainer(intersection, demand, horizon, learn, rng, **kwargs).train()


def quartile_means(values) -> Tuple[float, float]:
    """Means of the first and last quarter of a curve."""
    values = np.asarray(values, dtype=np.float64)
    quarter = max(1, len(values) // 4)
    return float(values[:quarter].mean()), float(values[-quarter:].mean())
