"""
Run drivers behind the command line: evaluation, sweeps, scenarios, training and demand validation.

Every driver writes ``manifest.txt`` first. Per-rollout files are written as rollouts finish; ``summary.csv`` is
written to a temporary name and renamed into place.
"""

import logging
import math
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence, Union

import pandas as pd

from cxflow.cli.config import ScenarioConfig, dump_manifest
from cxflow.common.enums import ControllerKind, EventKind, StatsSource, SweepAxis
from cxflow.common.exceptions import ConfigError
from cxflow.common.rng import RngStreams
from cxflow.comms.errors import EstimationErrorTracker
from cxflow.comms.models import CommConfig
from cxflow.control.env import IntersectionEnv
from cxflow.demand.geh import GehReport, validate_demand
from cxflow.learn.checkpoint import load_checkpoint, save_checkpoint
from cxflow.learn.models import LearnConfig
from cxflow.learn.network import GreedyPolicy, ValueNetwork
from cxflow.learn.trainer import TrainingResult, Trainer
from cxflow.metrics.evaluation import awt_reduction, calibrate_threshold
from cxflow.metrics.report import metrics_frame, summarize, write_csv
from cxflow.metrics.runlog import RunLog
from cxflow.sim.geometry import Intersection, build_intersection

log = logging.getLogger(__name__)

PathLike = Union[str, Path]


@dataclass
class EvalResult:
    """
    Attributes:
        logs (List[RunLog]): one run log per rollout.
        summary (pd.DataFrame): per-rollout rows plus mean and std rows.
        estimation (EstimationErrorTracker): V2V estimation errors of every rollout.
    """

    logs: List[RunLog]
    summary: pd.DataFrame
    estimation: EstimationErrorTracker = field(default_factory=EstimationErrorTracker)

    def mean(self, column: str) -> float:
        return float(self.summary.loc[self.summary["rollout"] == "mean", column].iloc[0])


@dataclass
class SweepResult:
    """
    Attributes:
        table (pd.DataFrame): one row per swept value.
        min_safe_rate (Optional[float]): for an ``rv_rate`` sweep, the smallest value with no congested rollout.
    """

    table: pd.DataFrame
    min_safe_rate: Optional[float] = None


def _prepare(out: Optional[PathLike]) -> Optional[Path]:
    if out is None:
        return None
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def write_manifest(config: ScenarioConfig, out: Optional[Path], **extra) -> None:
    if out is not None:
        (out / "manifest.txt").write_text(dump_manifest(config, extra), encoding="utf-8")


def write_atomic(frame: pd.DataFrame, path: Path) -> None:
    tmp = path.with_name(path.name + ".tmp")
    write_csv(frame, tmp)
    os.replace(tmp, path)


def needs_policy(config: ScenarioConfig) -> bool:
    return config.controller.kind == ControllerKind.POLICY or any(
        e.kind == EventKind.BLACKOUT and e.successor == ControllerKind.POLICY for e in config.events
    )


def load_network(config: ScenarioConfig, intersection: Intersection) -> Optional[ValueNetwork]:
    """
    Loads the policy network when the config runs the policy controller at any point.

    Raises:
        ConfigError: If the policy is needed but no checkpoint is configured.
        CheckpointError: If the checkpoint is missing or trained for another mode.
    """
    if not needs_policy(config):
        return None
    if not config.controller.checkpoint:
        raise ConfigError("the policy controller needs a checkpoint", key="controller.checkpoint")
    return load_checkpoint(config.controller.checkpoint, intersection.mode)


def make_env(
    config: ScenarioConfig,
    rollout: int,
    intersection: Optional[Intersection] = None,
    network: Optional[ValueNetwork] = None,
) -> IntersectionEnv:
    """Environment of rollout ``rollout``; it runs on seed ``config.seed + rollout``."""
    intersection = intersection or build_intersection(config.intersection, config.idm.vehicle_length)
    rng = RngStreams(config.seed).derive(rollout)
    policy = None
    if network is not None:
        policy = GreedyPolicy(network, config.controller.epsilon, rng.get("exploration"))
    return IntersectionEnv(
        intersection,
        config.demand,
        config.controller,
        config.horizon,
        rng,
        idm=config.idm,
        comm=config.comm,
        events=config.events,
        policy=policy,
        meta={"rollout": rollout, "base_seed": config.seed},
    )


def run_eval(config: ScenarioConfig, out: Optional[PathLike] = None) -> EvalResult:
    """
    Runs ``config.repeats`` rollouts on seeds ``seed, seed + 1, ...``.

    Writes ``manifest.txt``, ``rollout_<k>.csv`` with per-step metrics, ``rollout_<k>.msgpack`` with the run log and
    ``summary.csv`` when ``out`` is given. Under the signal controller the summary also carries the calibrated
    congestion threshold of every rollout.

    Raises:
        ConfigError: If the policy controller has no checkpoint.
        CheckpointError: If the checkpoint does not fit the intersection.
    """
    out_dir = _prepare(out)
    intersection = build_intersection(config.intersection, config.idm.vehicle_length)
    network = load_network(config, intersection)
    write_manifest(config, out_dir)
    metrics = config.metrics

    logs = []
    estimation = EstimationErrorTracker()
    for k in range(config.repeats):
        env = make_env(config, k, intersection, network)
        run_log = env.run()
        logs.append(run_log)
        estimation.extend(env.estimation)
        if out_dir is not None:
            write_csv(metrics_frame(run_log, metrics.threshold, metrics.waiting_mode), out_dir / f"rollout_{k}.csv")
            run_log.dump(out_dir / f"rollout_{k}.msgpack")

    summary = summarize(logs, metrics.waiting_mode, metrics.slope_window)
    if config.controller.kind == ControllerKind.TL:
        thresholds = [calibrate_threshold(run_log, metrics.waiting_mode) for run_log in logs]
        summary["calibrated_threshold"] = thresholds + [
            float(pd.Series(thresholds).mean()),
            float(pd.Series(thresholds).std(ddof=0)),
        ]
    if out_dir is not None:
        write_atomic(summary, out_dir / "summary.csv")
    log.info(f"evaluated {config.repeats} rollouts of {config.controller.kind.value}")
    return EvalResult(logs, summary, estimation)


def run_scenario(config: ScenarioConfig, out: Optional[PathLike] = None) -> EvalResult:
    """
    Evaluation with scripted events; the per-step CSV marks the events and the summary carries the AWT slopes before
    and after the first one.

    Raises:
        ConfigError: If the config has no events.
    """
    if not config.events:
        raise ConfigError("a scenario needs at least one event", key="events")
    return run_eval(config, out)


def swept_config(config: ScenarioConfig, axis: SweepAxis, value: float) -> ScenarioConfig:
    """The config of one sweep point."""
    data = config.model_dump()
    if axis == SweepAxis.DEMAND:
        data["demand"]["counts"] = {}
        data["demand"]["per_lane"] = value
    elif axis == SweepAxis.RV_RATE:
        data["demand"]["rv_rate"] = value
    else:
        comm = data.get("comm") or CommConfig().model_dump()
        comm["per"] = value
        data["comm"] = comm
        if config.controller.stats_source != StatsSource.V2V:
            log.warning("sweeping per while the controller reads ground truth statistics")
    return ScenarioConfig.model_validate(data)


def run_sweep(
    config: ScenarioConfig,
    axis: SweepAxis,
    values: Sequence[float],
    out: Optional[PathLike] = None,
    baseline: Optional[ControllerKind] = None,
) -> SweepResult:
    """
    One evaluation per value; each point writes its files under ``<out>/<axis>_<value>/`` and the table goes to
    ``<out>/sweep.csv``.

    Args:
        config: base config.
        axis: what to sweep.
        values: swept values.
        out: output directory.
        baseline: when given, every point also runs this controller and reports the AWT reduction against it.

    Raises:
        ValueError: If no values are given.
    """
    if not values:
        raise ValueError("a sweep needs at least one value")
    out_dir = _prepare(out)
    write_manifest(config, out_dir, axis=axis.value, values=", ".join(str(v) for v in values))

    rows = []
    for value in values:
        point = swept_config(config, axis, value)
        point_dir = out_dir / f"{axis.value}_{value}" if out_dir is not None else None
        result = run_eval(point, point_dir)
        share = result.mean("congested")
        row = {
            "value": value,
            "awt": result.mean("awt"),
            "congested": share >= 0.5,
            "congested_share": share,
            "avg_speed": result.mean("avg_speed"),
            "conflict_rate": result.mean("conflict_rate"),
            "throughput": result.mean("throughput"),
        }
        if axis == SweepAxis.PER:
            row["error_l"] = result.estimation.mean("l")
            row["error_w"] = result.estimation.mean("w")
        if baseline is not None:
            reference = point.model_copy(update={"controller": point.controller.model_copy(update={"kind": baseline})})
            base = run_eval(reference, None)
            base_awt = base.mean("awt")
            row["baseline_awt"] = base_awt
            row["awt_reduction"] = awt_reduction(row["awt"], base_awt) if base_awt > 0 else math.nan
        rows.append(row)
        log.info(f"sweep {axis.value}={value}: awt {row['awt']:.2f}, congested share {share:.2f}")

    table = pd.DataFrame(rows)
    min_safe = None
    if axis == SweepAxis.RV_RATE:
        safe = [r["value"] for r in rows if r["congested_share"] == 0]
        min_safe = min(safe) if safe else None
        log.info(f"minimum RV rate without congestion: {min_safe}")
    if out_dir is not None:
        write_atomic(table, out_dir / "sweep.csv")
    return SweepResult(table, min_safe)


def run_train(config: ScenarioConfig, out: Optional[PathLike] = None) -> TrainingResult:
    """
    Trains the shared policy on the scenario and writes ``checkpoint.cxf`` and ``curves.csv``.
    """
    out_dir = _prepare(out)
    intersection = build_intersection(config.intersection, config.idm.vehicle_length)
    learn = config.learn or LearnConfig()
    write_manifest(config, out_dir)
    trainer = Trainer(
        intersection,
        config.demand,
        config.horizon,
        learn,
        RngStreams(config.seed),
        controller=config.controller,
        idm=config.idm,
        comm=config.comm,
    )
    result = trainer.train()
    if out_dir is not None:
        save_checkpoint(out_dir / "checkpoint.cxf", result.network, intersection.mode)
        write_atomic(result.curves, out_dir / "curves.csv")
    return result


def run_validate_demand(config: ScenarioConfig, out: Optional[PathLike] = None, window: float = 3600.0) -> GehReport:
    """
    Simulates the first rollout and compares its hourly entry counts with the configured demand.

    Raises:
        RunLogError: If the horizon is shorter than the window.
    """
    out_dir = _prepare(out)
    intersection = build_intersection(config.intersection, config.idm.vehicle_length)
    network = load_network(config, intersection)
    write_manifest(config, out_dir, window=window)
    run_log = make_env(config, 0, intersection, network).run()
    report = validate_demand(run_log, config.demand, window=window)
    if out_dir is not None:
        write_atomic(report.to_frame(), out_dir / "geh.csv")
    log.info(f"mean GEH {report.mean:.2f}, {'pass' if report.passed else 'fail'}")
    return report
