import numpy as np
import pandas as pd
import pytest

from cxflow.cli import (
    parse_config_text,
    run_eval,
    run_scenario,
    run_sweep,
    run_train,
    run_validate_demand,
    swept_config,
)
from cxflow.common.enums import ControllerKind, DirectionMode, SweepAxis
from cxflow.common.exceptions import ConfigError, RunLogError
from cxflow.learn import ValueNetwork, load_checkpoint, save_checkpoint

SMALL = """
demand.per_lane = 600
controller.kind = notl
horizon = 30
repeats = 2
seed = 5
"""


@pytest.fixture
def config():
    return parse_config_text(SMALL)


# ==================== Evaluation ====================


def test_eval_writes_outputs(config, tmp_path):
    result = run_eval(config, tmp_path)
    names = sorted(p.name for p in tmp_path.iterdir())
    assert names == [
        "manifest.txt",
        "rollout_0.csv",
        "rollout_0.msgpack",
        "rollout_1.csv",
        "rollout_1.msgpack",
        "summary.csv",
    ]
    assert len(result.logs) == 2
    assert result.summary["rollout"].tolist() == [0, 1, "mean", "std"]
    assert len(pd.read_csv(tmp_path / "rollout_0.csv")) == 30
    assert parse_config_text((tmp_path / "manifest.txt").read_text()) == config


def test_rollouts_run_on_consecutive_seeds(config):
    result = run_eval(config)
    assert [r.meta["seed"] for r in result.logs] == [5, 6]
    assert result.logs[0].to_bytes() != result.logs[1].to_bytes()


def test_eval_is_deterministic(config, tmp_path):
    run_eval(config, tmp_path / "a")
    run_eval(config, tmp_path / "b")
    for name in ("rollout_0.msgpack", "rollout_1.csv", "summary.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_signal_runs_report_calibrated_threshold(config):
    signal = config.controller.model_copy(update={"kind": ControllerKind.TL})
    result = run_eval(config.model_copy(update={"controller": signal}))
    assert "calibrated_threshold" in result.summary.columns
    assert np.isfinite(result.mean("calibrated_threshold"))


def test_policy_needs_checkpoint():
    with pytest.raises(ConfigError, match="needs a checkpoint") as info:
        run_eval(parse_config_text(SMALL.replace("notl", "policy")))
    assert info.value.key == "controller.checkpoint"


def test_greedy_policy_never_explores(tmp_path):
    path = tmp_path / "policy.cxf"
    save_checkpoint(path, ValueNetwork(97, hidden=(4,), rng=np.random.default_rng(0)), DirectionMode.EIGHT)
    config = parse_config_text(SMALL.replace("notl", "policy") + f'controller.checkpoint = "{path}"\n')
    result = run_eval(config)
    decisions = [d for run_log in result.logs for record in run_log.steps for d in record.decisions]
    assert not any(d.random for d in decisions)


# ==================== Scenarios ====================


def test_scenario_needs_events(config):
    with pytest.raises(ConfigError, match="at least one event") as info:
        run_scenario(config)
    assert info.value.key == "events"


def test_scenario_marks_event(tmp_path):
    text = SMALL.replace("notl", "tl") + "events.0.kind = blackout\nevents.0.at_step = 10\n"
    result = run_scenario(parse_config_text(text), tmp_path)
    frame = pd.read_csv(tmp_path / "rollout_0.csv", keep_default_na=False)
    assert frame.loc[10, "event"] == "blackout tl->notl"
    assert result.summary.loc[0, "event_step"] == 10
    assert "post_event_slope" in result.summary.columns


# ==================== Sweeps ====================


def test_swept_config():
    config = parse_config_text(SMALL + "demand.counts.N-C = 100\n")
    assert swept_config(config, SweepAxis.DEMAND, 300.0).demand.counts == {}
    assert swept_config(config, SweepAxis.DEMAND, 300.0).demand.per_lane == 300.0
    assert swept_config(config, SweepAxis.RV_RATE, 0.5).demand.rv_rate == 0.5
    assert swept_config(config, SweepAxis.PER, 0.2).comm.per == 0.2


def test_rv_rate_sweep(config, tmp_path):
    result = run_sweep(config, SweepAxis.RV_RATE, [1.0], tmp_path)
    assert result.table["value"].tolist() == [1.0]
    assert not result.table.loc[0, "congested"]
    assert result.min_safe_rate == 1.0
    assert (tmp_path / "sweep.csv").exists()
    assert (tmp_path / "rv_rate_1.0" / "summary.csv").exists()


def test_sweep_against_baseline(config):
    result = run_sweep(config, SweepAxis.DEMAND, [600.0], baseline=ControllerKind.TL)
    assert "baseline_awt" in result.table.columns
    assert result.min_safe_rate is None


def test_sweep_needs_values(config):
    with pytest.raises(ValueError, match="at least one value"):
        run_sweep(config, SweepAxis.PER, [])


@pytest.mark.slow
def test_notl_congestion_onset():
    """Uncontrolled entry flows at light demand and gridlocks from 300 vehicles per hour and lane upward."""
    config = parse_config_text("controller.kind = notl\nhorizon = 1000\nrepeats = 2\nseed = 5\n")
    result = run_sweep(config, SweepAxis.DEMAND, [50.0, 150.0, 300.0, 600.0, 900.0])
    assert result.table["congested"].tolist() == [False, False, True, True, True]


# ==================== Training and demand ====================


def test_train_writes_checkpoint(tmp_path):
    text = SMALL + "learn.episodes = 1\nlearn.hidden = 8\nlearn.batch = 4\nlearn.warmup = 8\n"
    text += "learn.buffer_capacity = 200\n"
    result = run_train(parse_config_text(text), tmp_path)
    assert len(pd.read_csv(tmp_path / "curves.csv")) == 1
    restored = load_checkpoint(tmp_path / "checkpoint.cxf", DirectionMode.EIGHT)
    assert restored.dims == result.network.dims


def test_validate_demand_needs_full_window(config):
    with pytest.raises(RunLogError, match="shorter than the validation window"):
        run_validate_demand(config)


@pytest.mark.slow
def test_light_poisson_demand_passes_geh():
    """Light NoTL traffic over two hours reproduces the configured hourly counts."""
    text = "demand.per_lane = 100\ncontroller.kind = notl\nhorizon = 7300\nseed = 3\n"
    report = run_validate_demand(parse_config_text(text), window=7200.0)
    assert report.passed
    assert report.mean < 5.0
