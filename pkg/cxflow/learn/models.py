from dataclasses import dataclass
from typing import List

import numpy as np
from pydantic import Field, field_validator, model_validator

from cxflow.common.constants import (
    DEFAULT_BATCH,
    DEFAULT_BUFFER_CAPACITY,
    DEFAULT_EPSILON_DECAY,
    DEFAULT_EPSILON_END,
    DEFAULT_EPSILON_START,
    DEFAULT_GAMMA,
    DEFAULT_HIDDEN,
    DEFAULT_IS_BETA,
    DEFAULT_LR,
    DEFAULT_MOMENTUM,
    DEFAULT_PRIORITY_ALPHA,
    DEFAULT_TARGET_SYNC,
    DEFAULT_WARMUP,
    W_MAX,
)
from cxflow.common.models import ConfigModel
from cxflow.common.utils import split_csv


class RewardParams(ConfigModel):
    """
    Reward shaping.

    Attributes:
        lambda_L (float): weight of the local waiting time term.
        w_max (float): waiting time that saturates the local term, s.
        go_sign (int): +1 rewards Go with the normalized wait of the own direction, -1 penalizes it instead.
    """

    lambda_L: float = Field(1.0, gt=0)  # noqa: N815
    w_max: float = Field(W_MAX, gt=0)
    go_sign: int = 1

    @field_validator("go_sign")
    def sign_valid(cls, value: int) -> int:
        if value not in (1, -1):
            raise ValueError(f"go_sign must be 1 or -1, got {value}")
        return value


class LearnConfig(ConfigModel):
    """
    Training hyperparameters.

    Attributes:
        gamma (float): discount.
        lr (float): learning rate.
        momentum (float): SGD momentum.
        batch (int): minibatch size.
        buffer_capacity (int): replay capacity, oldest transitions are evicted first.
        priority_alpha (float): prioritization exponent, 0 samples uniformly.
        is_beta (float): importance sampling exponent.
        prioritized (bool): sample by priority and weight the loss; uniform and unweighted otherwise.
        target_sync_every (int): gradient updates between target network copies.
        warmup (int): transitions collected before the first update.
        epsilon_start (float): exploration rate at the first decision.
        epsilon_end (float): exploration rate after the decay.
        epsilon_decay (int): decisions over which the rate decays linearly.
        hidden (List[int]): hidden layer widths.
        episodes (int): training episodes.
        early_termination (bool): end an episode early on sustained congestion.
        reward (RewardParams): reward shaping.
    """

    gamma: float = Field(DEFAULT_GAMMA, ge=0, lt=1)
    lr: float = Field(DEFAULT_LR, gt=0)
    momentum: float = Field(DEFAULT_MOMENTUM, ge=0, lt=1)
    batch: int = Field(DEFAULT_BATCH, ge=1)
    buffer_capacity: int = Field(DEFAULT_BUFFER_CAPACITY, ge=1)
    priority_alpha: float = Field(DEFAULT_PRIORITY_ALPHA, ge=0)
    is_beta: float = Field(DEFAULT_IS_BETA, ge=0, le=1)
    prioritized: bool = True
    target_sync_every: int = Field(DEFAULT_TARGET_SYNC, ge=1)
    warmup: int = Field(DEFAULT_WARMUP, ge=0)
    epsilon_start: float = Field(DEFAULT_EPSILON_START, ge=0, le=1)
    epsilon_end: float = Field(DEFAULT_EPSILON_END, ge=0, le=1)
    epsilon_decay: int = Field(DEFAULT_EPSILON_DECAY, ge=0)
    hidden: List[int] = Field(default_factory=lambda: list(DEFAULT_HIDDEN))
    episodes: int = Field(100, ge=1)
    early_termination: bool = True
    reward: RewardParams = Field(default_factory=RewardParams)

    @field_validator("hidden", mode="before")
    def split_hidden(cls, value):
        return split_csv(value)

    @field_validator("hidden")
    def hidden_positive(cls, value: List[int]) -> List[int]:
        if not value or any(width < 1 for width in value):
            raise ValueError("hidden must list at least one positive layer width")
        return value

    @model_validator(mode="after")
    def consistent(self) -> "LearnConfig":
        if self.epsilon_end > self.epsilon_start:
            raise ValueError("epsilon_end must not exceed epsilon_start")
        if self.batch > self.buffer_capacity:
            raise ValueError("batch must not exceed buffer_capacity")
        return self


@dataclass
class Transition:
    """
    One step of one RV.

    Attributes:
        obs (np.ndarray): encoded observation at the decision.
        action (int): network output slot of the action.
        reward (float): reward after the step.
        next_obs (np.ndarray): observation at the vehicle's next decision, zeros when terminal.
        discount_next (float): gamma, or 0 when the vehicle made no further decision.
    """

    obs: np.ndarray
    action: int
    reward: float
    next_obs: np.ndarray
    discount_next: float
