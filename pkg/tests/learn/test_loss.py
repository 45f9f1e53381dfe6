import numpy as np
import pytest
import torch

from cxflow.learn import Batch, ValueNetwork, td_loss, td_targets
from tests.learn.factories import create_constant_network, create_identity_go_network


def batch_of(obs, actions, rewards, next_obs, discounts, weights=None):
    return Batch(
        obs=np.asarray(obs, dtype=np.float64),
        actions=np.asarray(actions, dtype=np.int64),
        rewards=np.asarray(rewards, dtype=np.float64),
        next_obs=np.asarray(next_obs, dtype=np.float64),
        discounts=np.asarray(discounts, dtype=np.float64),
        weights=None if weights is None else np.asarray(weights, dtype=np.float64),
    )


# ==================== Loss values ====================


def test_terminal_error():
    """A terminal Go valued 0.5 with reward 1 has squared error 0.25."""
    net = create_constant_network(0.0, 0.5)
    result = td_loss(batch_of([[0.0]], [1], [1.0], [[0.0]], [0.0]), net, net.target_copy())
    assert result.loss.item() == pytest.approx(0.25)
    np.testing.assert_allclose(result.td_errors, [0.5])


def test_consistent_values_have_no_error():
    """q(Go | 1.98) equals 0.99 times the best value at the next observation."""
    net = create_identity_go_network()
    batch = batch_of([[1.98]], [1], [0.0], [[2.0]], [0.99])
    assert td_targets(batch, net, net.target_copy()).item() == pytest.approx(1.98)
    assert td_loss(batch, net, net.target_copy()).loss.item() == pytest.approx(0.0, abs=1e-20)


def test_online_network_picks_next_action():
    """The next action comes from the online network, its value from the target network."""
    online = create_constant_network(0.0, 1.0)
    target = create_constant_network(5.0, 2.0)
    batch = batch_of([[0.0]], [0], [0.0], [[0.0]], [0.5])
    assert td_targets(batch, online, target).item() == pytest.approx(1.0)


def test_importance_weights_scale_loss():
    net = create_constant_network(0.0, 0.5)
    batch = batch_of([[0.0]], [1], [1.0], [[0.0]], [0.0], weights=[0.5])
    assert td_loss(batch, net, net.target_copy()).loss.item() == pytest.approx(0.125)


def test_empty_batch_rejected():
    net = create_constant_network(0.0, 0.0)
    empty = batch_of(np.zeros((0, 1)), [], [], np.zeros((0, 1)), [])
    with pytest.raises(ValueError, match="non-empty batch"):
        td_loss(empty, net, net.target_copy())


# ==================== Gradients ====================


def _loss(batch, net, target):
    return td_loss(batch, net, target, grads=False).loss.item()


@pytest.mark.parametrize("seed", range(20))
def test_gradient_matches_finite_differences(seed):
    """Analytic gradients agree with central differences, the target held fixed."""
    rng = np.random.default_rng(seed)
    net = ValueNetwork(3, hidden=(4,), rng=rng)
    target = ValueNetwork(3, hidden=(4,), rng=rng).target_copy()
    batch = batch_of(
        rng.normal(size=(5, 3)),
        rng.integers(2, size=5),
        rng.normal(size=5),
        rng.normal(size=(5, 3)),
        np.full(5, 0.99),
        weights=rng.uniform(0.2, 1.0, size=5),
    )
    grads = td_loss(batch, net, target).grads
    h = 1e-6
    for param, grad in zip(net.parameters(), grads):
        flat = param.data.view(-1)
        numeric = np.zeros(flat.numel())
        for i in range(flat.numel()):
            with torch.no_grad():
                flat[i] += h
                up = _loss(batch, net, target)
                flat[i] -= 2 * h
                down = _loss(batch, net, target)
                flat[i] += h
            numeric[i] = (up - down) / (2 * h)
        np.testing.assert_allclose(grad.numpy().reshape(-1), numeric, rtol=1e-5, atol=1e-8)


def test_loss_without_gradients_under_no_grad():
    """Skipping the gradients gives the same loss and works with autograd disabled."""
    net = create_constant_network(0.0, 0.5)
    batch = batch_of([[0.0]], [1], [1.0], [[0.0]], [0.0])
    with torch.no_grad():
        result = td_loss(batch, net, net.target_copy(), grads=False)
    assert result.grads is None
    assert result.loss.item() == pytest.approx(0.25)
    np.testing.assert_allclose(result.td_errors, [0.5])
