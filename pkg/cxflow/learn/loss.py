import logging
from typing import List, NamedTuple, Optional

import numpy as np
import torch

from cxflow.learn.network import ValueNetwork

log = logging.getLogger(__name__)


class Batch(NamedTuple):
    """
    A minibatch of transitions as arrays.

    ``weights`` are importance sampling weights, None for an unweighted mean. ``indices`` locate the samples in the
    replay buffer for the priority update.
    """

    obs: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray
    next_obs: np.ndarray
    discounts: np.ndarray
    weights: Optional[np.ndarray] = None
    indices: Optional[np.ndarray] = None

    def __len__(self) -> int:
        return len(self.actions)


class TdResult(NamedTuple):
    loss: torch.Tensor
    grads: Optional[List[torch.Tensor]]
    td_errors: np.ndarray


def td_targets(batch: Batch, net: ValueNetwork, target: ValueNetwork) -> torch.Tensor:
    """
    Double DQN targets: the online network picks the next action, the target network values it.
    """
    next_obs = torch.as_tensor(batch.next_obs, dtype=net.dtype)
    with torch.no_grad():
        best = net(next_obs).argmax(dim=1, keepdim=True)
        next_value = target(next_obs).gather(1, best).squeeze(1)
    rewards = torch.as_tensor(batch.rewards, dtype=net.dtype)
    discounts = torch.as_tensor(batch.discounts, dtype=net.dtype)
    return rewards + discounts * next_value


def td_loss(batch: Batch, net: ValueNetwork, target: ValueNetwork, grads: bool = True) -> TdResult:
    """
    Mean squared double DQN error of a minibatch and its gradients with respect to the online parameters.

    Args:
        batch: the minibatch; ``discounts`` hold gamma, or 0 for terminal transitions.
        net: online network.
        target: target network; treated as constant.
        grads: when False only the loss and TD errors are computed and ``grads`` is None, so the call also works
            under ``torch.no_grad()``.

    Returns:
        TdResult: the loss, one gradient per online parameter in ``net.parameters()`` order, and the per-sample TD
        errors.

    Raises:
        ValueError: If the batch is empty.
    """
    if len(batch) == 0:
        raise ValueError("td_loss needs a non-empty batch")
    y = td_targets(batch, net, target)
    obs = torch.as_tensor(batch.obs, dtype=net.dtype)
    actions = torch.as_tensor(batch.actions, dtype=torch.int64).unsqueeze(1)
    q = net(obs).gather(1, actions).squeeze(1)
    errors = y - q
    squared = errors**2
    if batch.weights is not None:
        squared = squared * torch.as_tensor(batch.weights, dtype=net.dtype)
    loss = squared.mean()
    gradients = list(torch.autograd.grad(loss, list(net.parameters()))) if grads else None
    return TdResult(loss.detach(), gradients, errors.detach().numpy().astype(np.float64))
