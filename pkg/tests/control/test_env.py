import numpy as np
import pytest

from cxflow.common.constants import STILL_SPEED
from cxflow.common.enums import Action, EventType
from cxflow.common.exceptions import ConfigError
from cxflow.control import ConstantPolicy, EventSpec
from cxflow.learn import GreedyPolicy, ValueNetwork, logged_rewards, recompute_rewards, reward
from cxflow.metrics import conflict_events
from tests.control.factories import create_dummy_env

# ==================== Construction ====================


def test_horizon_must_be_positive():
    with pytest.raises(ConfigError, match="horizon must be positive"):
        create_dummy_env(horizon=0)


def test_policy_controller_needs_policy():
    with pytest.raises(ConfigError, match="needs a checkpoint"):
        create_dummy_env(controller="policy")


def test_policy_successor_needs_policy():
    """A blackout handing over to the policy controller needs a policy up front."""
    with pytest.raises(ConfigError, match="needs a checkpoint"):
        create_dummy_env(events=[EventSpec(kind="blackout", at_step=5, successor="policy")])


def test_run_metadata():
    env = create_dummy_env()
    assert len(env.run_log.meta["streams"]) == 8
    assert env.run_log.meta["seed"] == 3
    assert env.run_log.meta["controller"] == "tl"


# ==================== Stepping ====================


def test_one_record_per_step():
    env = create_dummy_env(horizon=25)
    run_log = env.run()
    assert len(run_log) == 25
    assert [r.step for r in run_log] == list(range(25))
    assert [r.time for r in run_log][:3] == [0.0, 1.0, 2.0]
    with pytest.raises(RuntimeError, match="finished after 25 steps"):
        env.step()


def test_same_seed_same_log():
    first = create_dummy_env(controller="notl", horizon=60).run()
    second = create_dummy_env(controller="notl", horizon=60).run()
    assert first.to_bytes() == second.to_bytes()


def test_other_seed_other_log():
    first = create_dummy_env(horizon=60, seed=1).run()
    second = create_dummy_env(horizon=60, seed=2).run()
    assert first.to_bytes() != second.to_bytes()


def test_logged_vehicles_are_near_the_box():
    run_log = create_dummy_env(horizon=60).run()
    zones = {v.zone for r in run_log for v in r.vehicles}
    assert zones <= {"control_zone", "inside"}
    assert run_log.events(EventType.SPAWN)


def test_reward_oracle():
    """Logged rewards equal the ones recomputed from the post-step snapshots, and stay in [-2, 1]."""
    env = create_dummy_env(
        controller="policy",
        policy=ConstantPolicy(Action.GO),
        horizon=80,
        reward_fn=lambda decision, wait: reward(decision.action, wait, decision.conflict),
    )
    run_log = env.run()
    logged = logged_rewards(run_log)
    assert logged
    assert recompute_rewards(run_log) == logged
    assert all(-2.0 <= r <= 1.0 for r in logged)


def test_v2v_observations_track_estimation_error():
    env = create_dummy_env(controller="policy", policy=ConstantPolicy(Action.STOP), horizon=60, stats_source="v2v")
    env.run()
    assert env.estimation.errors["l"]
    assert env.estimation.errors["w"]


@pytest.mark.slow
def test_always_go_with_resolution_is_conflict_free():
    """With conflict resolution on, an always-Go policy never puts two crossing vehicles in a zone."""
    env = create_dummy_env(controller="policy", policy=ConstantPolicy(Action.GO), horizon=900, per_lane=900)
    run_log = env.run()
    assert conflict_events(run_log) == 0
    assert env.world.conflict_total == 0
    assert env.world.exited_total > 0


@pytest.mark.slow
@pytest.mark.parametrize("controller", ["notl", "policy"])
def test_random_traffic_never_overlaps_in_a_zone(controller):
    """Ten thousand steps of Poisson demand, with coin-flip Stop/Go decisions for the policy, stay conflict free."""
    rng = np.random.default_rng(9)
    coin_flip = GreedyPolicy(ValueNetwork(97, hidden=(4,), rng=rng), epsilon=1.0, rng=rng)
    env = create_dummy_env(
        controller=controller,
        policy=coin_flip if controller == "policy" else None,
        horizon=10_000,
        per_lane=600,
        seed=21,
    )
    run_log = env.run()
    assert conflict_events(run_log) == 0
    assert env.world.conflict_total == 0
    assert env.world.exited_total > 0


@pytest.mark.slow
@pytest.mark.parametrize("controller", ["tl", "notl"])
def test_queues_keep_standstill_gap(controller):
    """Stopped queued pairs never close below s0, and ordinary traffic causes no safety truncation."""
    env = create_dummy_env(controller=controller, horizon=400, per_lane=900)
    s0 = env.world.idm.s0
    stopped_pairs = 0
    while not env.done:
        env.step()
        for veh in env.world.vehicles.values():
            leader = env.world.leader_of(veh)
            if leader is None or veh.v >= STILL_SPEED or leader.vehicle.v >= STILL_SPEED:
                continue
            stopped_pairs += 1
            assert leader.gap >= s0 - 1e-6
    assert stopped_pairs > 0
    assert env.world.safety_total == 0
