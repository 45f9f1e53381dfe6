"""
Proportional prioritized experience replay over a fixed-capacity ring.

Example:
    >>> buffer = PrioritizedReplayBuffer(capacity=2, obs_dim=1)
    >>> buffer.priorities[:2] = [4.0, 1.0]
    >>> buffer.size = 2
    >>> buffer.probabilities(0.5).tolist()
    [0.6666666666666666, 0.3333333333333333]
"""

import logging

import numpy as np

from cxflow.common.constants import PRIORITY_EPS
from cxflow.learn.loss import Batch
from cxflow.learn.models import Transition

log = logging.getLogger(__name__)


class PrioritizedReplayBuffer:
    """
    Stores transitions in preallocated arrays; once full, the oldest transition is overwritten.

    Args:
        capacity: most transitions held.
        obs_dim: observation width.
    """

    def __init__(self, capacity: int, obs_dim: int):
        if capacity < 1:
            raise ValueError(f"capacity must be positive, got {capacity}")
        self.capacity = capacity
        self.obs = np.zeros((capacity, obs_dim), dtype=np.float64)
        self.next_obs = np.zeros((capacity, obs_dim), dtype=np.float64)
        self.actions = np.zeros(capacity, dtype=np.int64)
        self.rewards = np.zeros(capacity, dtype=np.float64)
        self.discounts = np.zeros(capacity, dtype=np.float64)
        self.priorities = np.zeros(capacity, dtype=np.float64)
        self.size = 0
        self.cursor = 0

    def __len__(self) -> int:
        return self.size

    @property
    def max_priority(self) -> float:
        return float(self.priorities[: self.size].max()) if self.size else 1.0

    def add(self, transition: Transition) -> int:
        """Stores a transition with the current maximum priority and returns its slot."""
        slot = self.cursor
        priority = self.max_priority
        self.obs[slot] = transition.obs
        self.next_obs[slot] = transition.next_obs
        self.actions[slot] = transition.action
        self.rewards[slot] = transition.reward
        self.discounts[slot] = transition.discount_next
        self.priorities[slot] = priority
        self.cursor = (self.cursor + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)
        return slot

    def probabilities(self, alpha: float) -> np.ndarray:
        """Sampling probability of every stored transition, ``p_i^alpha / sum_j p_j^alpha``."""
        scaled = self.priorities[: self.size] ** alpha
        return scaled / scaled.sum()

    def update_priorities(self, indices: np.ndarray, td_errors: np.ndarray) -> None:
        self.priorities[indices] = np.abs(td_errors) + PRIORITY_EPS

    def gather(self, indices: np.ndarray, weights=None) -> Batch:
        return Batch(
            obs=self.obs[indices],
            actions=self.actions[indices],
            rewards=self.rewards[indices],
            next_obs=self.next_obs[indices],
            discounts=self.discounts[indices],
            weights=weights,
            indices=indices,
        )


def sample_prioritized(
    buffer: PrioritizedReplayBuffer, batch: int, alpha: float, beta: float, rng: np.random.Generator
) -> Batch:
    """
    Draws a minibatch with replacement in proportion to priority.

    Importance sampling weights are ``(N P(i))^-beta`` scaled so the largest is 1.

    Raises:
        ValueError: If the buffer is empty.
    """
    if len(buffer) == 0:
        raise ValueError("cannot sample from an empty replay buffer")
    probs = buffer.probabilities(alpha)
    indices = rng.choice(len(buffer), size=batch, p=probs)
    weights = (len(buffer) * probs[indices]) ** (-beta)
    return buffer.gather(indices, weights / weights.max())


def sample_uniform(buffer: PrioritizedReplayBuffer, batch: int, rng: np.random.Generator) -> Batch:
    if len(buffer) == 0:
        raise ValueError("cannot sample from an empty replay buffer")
    return buffer.gather(rng.integers(len(buffer), size=batch))
