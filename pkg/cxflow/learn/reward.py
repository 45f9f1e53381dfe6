"""
Conflict-aware reward of a robot vehicle.

Example:
    >>> reward(Action.STOP, 200.0, False)
    -1.0
    >>> reward(Action.GO, 100.0, True)
    -0.5
"""

import logging
from typing import List, Optional

from cxflow.common.enums import Action
from cxflow.common.utils import clamp
from cxflow.learn.models import RewardParams
from cxflow.metrics.runlog import RunLog, stream_wait

log = logging.getLogger(__name__)

CONFLICT_PENALTY = -1.0


def reward(action: Action, own_wait_next: float, conflict: bool, params: Optional[RewardParams] = None) -> float:
    """
    Reward of one decision.

    The local term is the own direction's waiting time after the step over ``w_max``, clamped to ``[0, 1]``, negative
    for Stop and signed by ``go_sign`` for Go. A conflicting Go adds -1.

    Args:
        action: the raw policy output.
        own_wait_next: mean waiting time of the own direction after the step, s.
        conflict: the raw conflict predicate of the decision.
        params: reward shaping, defaults when omitted.

    Returns:
        float: ``lambda_L * r_L + p_c``.
    """
    p = params or RewardParams()
    w_hat = clamp(own_wait_next / p.w_max, 0.0, 1.0)
    local = -w_hat if action == Action.STOP else p.go_sign * w_hat
    penalty = CONFLICT_PENALTY if conflict else 0.0
    return p.lambda_L * local + penalty


def recompute_rewards(run_log: RunLog, params: Optional[RewardParams] = None) -> List[float]:
    """
    Rewards of every logged decision, recomputed from the post-step vehicle snapshots, in log order.
    """
    rewards = []
    for record in run_log:
        for decision in record.decisions:
            w_next = stream_wait(record.vehicles, decision.stream)
            rewards.append(reward(Action(decision.action), w_next, decision.conflict, params))
    return rewards


def logged_rewards(run_log: RunLog) -> List[float]:
    """Rewards stored with the decisions; decisions logged without a reward are skipped."""
    return [d.reward for r in run_log for d in r.decisions if d.reward is not None]
