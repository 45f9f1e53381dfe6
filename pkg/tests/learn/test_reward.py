import pytest

from cxflow.common.enums import Action
from cxflow.learn import RewardParams, logged_rewards, recompute_rewards, reward
from tests.metrics.factories import create_dummy_decision, create_dummy_run_log, create_dummy_vehicle_record


@pytest.mark.parametrize(
    "action, wait, conflict, params, expected",
    [
        (Action.STOP, 200.0, False, None, -1.0),
        (Action.GO, 100.0, True, None, -0.5),
        (Action.GO, 400.0, False, None, 1.0),
        (Action.STOP, 0.0, False, None, 0.0),
        (Action.GO, 100.0, False, RewardParams(go_sign=-1), -0.5),
        (Action.STOP, 100.0, False, RewardParams(lambda_L=2.0), -1.0),
        (Action.STOP, 50.0, True, RewardParams(w_max=100.0), -1.5),
    ],
)
def test_reward(action, wait, conflict, params, expected):
    assert reward(action, wait, conflict, params) == pytest.approx(expected)


def test_go_sign_must_be_unit():
    with pytest.raises(ValueError, match="go_sign must be 1 or -1"):
        RewardParams(go_sign=0)


def test_recompute_from_snapshots():
    """Rewards use the mean wait of the own direction's control zone vehicles after the step."""
    vehicles = [create_dummy_vehicle_record(1, wait=100.0), create_dummy_vehicle_record(2, wait=60.0)]
    run_log = create_dummy_run_log(
        [vehicles],
        decisions={0: [create_dummy_decision(1, action="stop"), create_dummy_decision(2, conflict=True)]},
    )
    assert recompute_rewards(run_log) == pytest.approx([-0.4, 0.4 - 1.0])
    assert logged_rewards(run_log) == []
