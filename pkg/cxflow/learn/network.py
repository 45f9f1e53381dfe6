"""
Value network, greedy and epsilon-greedy action selection.

The network maps an encoded observation to the two action values ``(q(Stop), q(Go))`` through fully connected
rectifier layers and a linear head. Parameters are drawn from the ``net_init`` substream, not from torch's global
generator, so a seed fixes the initial network on its own.

Example:
    >>> import numpy as np
    >>> net = ValueNetwork(97, hidden=(8,), rng=np.random.default_rng(0))
    >>> forward(net, np.zeros(97)).shape
    (2,)
"""

import copy
import logging
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np
import torch
from torch import nn

from cxflow.common.constants import DEFAULT_HIDDEN
from cxflow.common.enums import Action
from cxflow.common.utils import clamp

log = logging.getLogger(__name__)

N_ACTIONS = 2


class ValueNetwork(nn.Module):
    """
    Fully connected action value network.

    Args:
        input_dim: observation width, 12 J + 1.
        hidden: hidden layer widths.
        rng: draws the initial parameters; zeros when omitted.
        dtype: parameter precision.
    """

    def __init__(
        self,
        input_dim: int,
        hidden: Sequence[int] = DEFAULT_HIDDEN,
        rng: Optional[np.random.Generator] = None,
        dtype: torch.dtype = torch.float64,
    ):
        super().__init__()
        self.dims = [int(input_dim)] + [int(h) for h in hidden] + [N_ACTIONS]
        self.layers = nn.ModuleList(
            nn.Linear(n_in, n_out, dtype=dtype) for n_in, n_out in zip(self.dims, self.dims[1:])
        )
        self.dtype = dtype
        if rng is None:
            self.zero_()
        else:
            self.reset_parameters(rng)

    @property
    def input_dim(self) -> int:
        return self.dims[0]

    def zero_(self) -> "ValueNetwork":
        with torch.no_grad():
            for p in self.parameters():
                p.zero_()
        return self

    def reset_parameters(self, rng: np.random.Generator) -> None:
        """Uniform in ``+-1/sqrt(fan_in)`` for every weight and bias, layer by layer."""
        with torch.no_grad():
            for layer in self.layers:
                bound = 1.0 / np.sqrt(layer.in_features)
                weight = rng.uniform(-bound, bound, size=(layer.out_features, layer.in_features))
                bias = rng.uniform(-bound, bound, size=layer.out_features)
                layer.weight.copy_(torch.as_tensor(weight, dtype=self.dtype))
                layer.bias.copy_(torch.as_tensor(bias, dtype=self.dtype))

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        for layer in self.layers[:-1]:
            x = torch.relu(layer(x))
        return self.layers[-1](x)

    def target_copy(self) -> "ValueNetwork":
        """A frozen deep copy for the target branch."""
        target = copy.deepcopy(self)
        for p in target.parameters():
            p.requires_grad_(False)
        return target


def forward(net: ValueNetwork, obs: np.ndarray) -> np.ndarray:
    """
    Action values of one observation.

    Raises:
        ValueError: If the observation width does not match the network.
    """
    obs = np.asarray(obs, dtype=np.float64)
    if obs.shape != (net.input_dim,):
        raise ValueError(f"observation has shape {obs.shape}, the network expects ({net.input_dim},)")
    with torch.no_grad():
        q = net(torch.as_tensor(obs, dtype=net.dtype))
    return q.numpy().astype(np.float64)


def greedy_action(q: np.ndarray) -> Action:
    """Argmax of the action values; exact ties choose Stop."""
    return Action.GO if q[Action.GO.index] > q[Action.STOP.index] else Action.STOP


def act(
    net: ValueNetwork, obs: np.ndarray, epsilon: float, rng: Optional[np.random.Generator] = None
) -> Tuple[Action, bool]:
    """
    Epsilon-greedy action.

    With ``epsilon == 0`` no random draw is taken.

    Returns:
        Tuple[Action, bool]: the action and whether it was drawn at random.

    Raises:
        ValueError: If epsilon is outside ``[0, 1]`` or positive without a generator.
    """
    if not 0.0 <= epsilon <= 1.0:
        raise ValueError(f"epsilon must be in [0, 1], got {epsilon}")
    if epsilon > 0:
        if rng is None:
            raise ValueError("epsilon-greedy exploration needs a random generator")
        if rng.random() < epsilon:
            return Action.from_index(int(rng.integers(N_ACTIONS))), True
    return greedy_action(forward(net, obs)), False


@dataclass
class EpsilonSchedule:
    """Linear decay from ``start`` to ``end`` over ``decay`` decisions, then constant."""

    start: float
    end: float
    decay: int

    def value(self, decisions: int) -> float:
        if self.decay <= 0:
            return self.end
        fraction = clamp(decisions / self.decay, 0.0, 1.0)
        return self.start + (self.end - self.start) * fraction


class GreedyPolicy:
    """
    Shared decision policy for evaluation, fixed exploration rate.

    Args:
        net: the value network.
        epsilon: exploration rate.
        rng: the ``exploration`` substream, needed when epsilon is positive.
    """

    def __init__(self, net: ValueNetwork, epsilon: float = 0.0, rng: Optional[np.random.Generator] = None):
        self.net = net
        self.epsilon = epsilon
        self.rng = rng

    def decide(self, observation: np.ndarray) -> Tuple[Action, bool]:
        return act(self.net, observation, self.epsilon, self.rng)


class ExplorationPolicy:
    """Decision policy during training; epsilon follows the schedule over the decisions taken so far."""

    def __init__(self, net: ValueNetwork, schedule: EpsilonSchedule, rng: np.random.Generator):
        self.net = net
        self.schedule = schedule
        self.rng = rng
        self.decisions = 0

    @property
    def epsilon(self) -> float:
        return self.schedule.value(self.decisions)

    def decide(self, observation: np.ndarray) -> Tuple[Action, bool]:
        action = act(self.net, observation, self.epsilon, self.rng)
        self.decisions += 1
        return action
