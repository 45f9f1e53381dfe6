import numpy as np
import pytest
import torch

from cxflow.common.enums import Action
from cxflow.learn import EpsilonSchedule, ExplorationPolicy, GreedyPolicy, ValueNetwork, act, forward, greedy_action
from tests.learn.factories import create_constant_network

# ==================== Forward pass ====================


def test_zero_network_gives_zero_values():
    net = ValueNetwork(97, hidden=(8,))
    np.testing.assert_array_equal(forward(net, np.zeros(97)), [0.0, 0.0])


def test_parameters_come_from_the_generator():
    """The same generator seed builds the same network."""
    first = ValueNetwork(5, hidden=(4, 3), rng=np.random.default_rng(8))
    second = ValueNetwork(5, hidden=(4, 3), rng=np.random.default_rng(8))
    for a, b in zip(first.parameters(), second.parameters()):
        assert torch.equal(a, b)
    assert first.dims == [5, 4, 3, 2]
    assert all(p.dtype == torch.float64 for p in first.parameters())


def test_init_bounds():
    net = ValueNetwork(16, hidden=(4,), rng=np.random.default_rng(0))
    assert net.layers[0].weight.abs().max().item() <= 0.25


def test_forward_rejects_wrong_width():
    with pytest.raises(ValueError, match="expects \\(3,\\)"):
        forward(ValueNetwork(3, hidden=(2,)), np.zeros(4))


def test_target_copy_is_frozen():
    net = ValueNetwork(3, hidden=(2,), rng=np.random.default_rng(1))
    target = net.target_copy()
    assert not any(p.requires_grad for p in target.parameters())
    np.testing.assert_array_equal(forward(net, np.ones(3)), forward(target, np.ones(3)))
    with torch.no_grad():
        net.layers[-1].bias.add_(1.0)
    assert not np.array_equal(forward(net, np.ones(3)), forward(target, np.ones(3)))


# ==================== Action selection ====================


def test_greedy_picks_larger_value():
    net = create_constant_network(0.2, 0.7)
    assert act(net, np.zeros(1), 0.0) == (Action.GO, False)


def test_ties_choose_stop():
    assert greedy_action(np.array([0.3, 0.3])) == Action.STOP
    assert act(create_constant_network(0.5, 0.5), np.zeros(1), 0.0) == (Action.STOP, False)


def test_greedy_takes_no_draw():
    rng = np.random.default_rng(4)
    untouched = np.random.default_rng(4)
    act(create_constant_network(0.0, 1.0), np.zeros(1), 0.0, rng)
    assert rng.random() == untouched.random()


def test_full_exploration_is_random():
    rng = np.random.default_rng(0)
    picks = [act(create_constant_network(0.0, 1.0), np.zeros(1), 1.0, rng) for _ in range(50)]
    assert all(is_random for _, is_random in picks)
    assert {action for action, _ in picks} == {Action.STOP, Action.GO}


@pytest.mark.parametrize("epsilon", [-0.1, 1.5])
def test_epsilon_range(epsilon):
    with pytest.raises(ValueError, match="epsilon must be in"):
        act(create_constant_network(0.0, 1.0), np.zeros(1), epsilon, np.random.default_rng(0))


def test_exploration_needs_generator():
    with pytest.raises(ValueError, match="needs a random generator"):
        act(create_constant_network(0.0, 1.0), np.zeros(1), 0.5)


@pytest.mark.parametrize(
    "decisions, expected",
    [(0, 1.0), (50, 0.525), (100, 0.05), (1000, 0.05)],
)
def test_linear_epsilon_decay(decisions, expected):
    assert EpsilonSchedule(1.0, 0.05, 100).value(decisions) == pytest.approx(expected)


def test_no_decay_uses_end_value():
    assert EpsilonSchedule(1.0, 0.1, 0).value(0) == 0.1


def test_policies():
    net = create_constant_network(0.0, 1.0)
    assert GreedyPolicy(net).decide(np.zeros(1)) == (Action.GO, False)
    policy = ExplorationPolicy(net, EpsilonSchedule(0.0, 0.0, 10), np.random.default_rng(0))
    policy.decide(np.zeros(1))
    policy.decide(np.zeros(1))
    assert policy.decisions == 2
