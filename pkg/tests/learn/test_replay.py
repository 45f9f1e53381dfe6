import numpy as np
import pytest

from cxflow.learn import PrioritizedReplayBuffer, Transition, sample_prioritized, sample_uniform


def transition(value, action=1):
    return Transition(np.array([value]), action, float(value), np.array([value + 1.0]), 0.99)


def filled(capacity=4, count=3):
    buffer = PrioritizedReplayBuffer(capacity, obs_dim=1)
    for i in range(count):
        buffer.add(transition(float(i)))
    return buffer


# ==================== Storage ====================


def test_new_transitions_take_max_priority():
    buffer = filled(count=1)
    assert buffer.priorities[0] == 1.0
    buffer.update_priorities(np.array([0]), np.array([-3.0]))
    assert buffer.priorities[0] == pytest.approx(3.0 + 1e-6)
    slot = buffer.add(transition(9.0))
    assert buffer.priorities[slot] == pytest.approx(3.0 + 1e-6)


def test_oldest_evicted_when_full():
    buffer = filled(capacity=2, count=3)
    assert len(buffer) == 2
    assert buffer.obs[:, 0].tolist() == [2.0, 1.0]
    assert buffer.cursor == 1


def test_capacity_positive():
    with pytest.raises(ValueError, match="capacity must be positive"):
        PrioritizedReplayBuffer(0, 1)


# ==================== Sampling ====================


def test_proportional_probabilities():
    buffer = PrioritizedReplayBuffer(capacity=2, obs_dim=1)
    buffer.priorities[:2] = [4.0, 1.0]
    buffer.size = 2
    np.testing.assert_allclose(buffer.probabilities(0.5), [2 / 3, 1 / 3])
    np.testing.assert_allclose(buffer.probabilities(0.0), [0.5, 0.5])


def test_prioritized_batch_weights():
    buffer = filled()
    buffer.update_priorities(np.array([0, 1, 2]), np.array([1.0, 2.0, 4.0]))
    batch = sample_prioritized(buffer, 16, 1.0, 0.4, np.random.default_rng(0))
    assert len(batch) == 16
    assert batch.weights.max() == pytest.approx(1.0)
    assert batch.weights.min() > 0
    np.testing.assert_array_equal(batch.rewards, batch.obs[:, 0])
    np.testing.assert_array_equal(batch.next_obs[:, 0], batch.obs[:, 0] + 1.0)


def test_prioritized_frequencies_match_probabilities():
    """Over 10^5 draws each transition is picked at its p_i^alpha share, within four standard deviations."""
    buffer = filled(capacity=4, count=4)
    buffer.update_priorities(np.arange(4), np.array([0.5, 1.0, 2.0, 8.0]))
    n = 100_000
    batch = sample_prioritized(buffer, n, 0.6, 0.4, np.random.default_rng(17))
    frequencies = np.bincount(batch.indices, minlength=4) / n
    expected = buffer.probabilities(0.6)
    np.testing.assert_array_less(np.abs(frequencies - expected), 4.0 * np.sqrt(expected * (1.0 - expected) / n))


def test_uniform_batch_is_unweighted():
    batch = sample_uniform(filled(), 8, np.random.default_rng(0))
    assert batch.weights is None
    assert set(batch.indices.tolist()) <= {0, 1, 2}


@pytest.mark.parametrize(
    "sampler",
    [
        lambda b, r: sample_prioritized(b, 4, 0.5, 0.4, r),
        lambda b, r: sample_uniform(b, 4, r),
    ],
)
def test_empty_buffer(sampler):
    with pytest.raises(ValueError, match="empty replay buffer"):
        sampler(PrioritizedReplayBuffer(4, 1), np.random.default_rng(0))
