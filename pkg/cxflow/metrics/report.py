"""
Per-step metric tables and run summaries.

The per-step CSV has a fixed header::

    step, awt_intersection, awt_<stream> for every direction of the mode in canonical order, avg_speed, throughput,
    conflict_rate_cum, cl_<stream> for every direction, event

Directions absent from the intersection keep their columns at 0. ``avg_speed`` and ``conflict_rate_cum`` are empty
when undefined. ``event`` joins the scenario events of the step with ``;``. Floats are written with six decimals.
"""

import logging
import math
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Union

import numpy as np
import pandas as pd

from cxflow.common.constants import DEFAULT_CL_THRESHOLD, DEFAULT_SLOPE_WINDOW
from cxflow.common.enums import EventType, WaitingTimeMode
from cxflow.metrics.evaluation import (
    WaitTracker,
    avg_speed,
    awt,
    awt_series,
    awt_slope,
    conflict_events,
    conflict_rate,
    congested,
    congestion_level,
    random_decisions,
    step_speed,
    throughput,
)
from cxflow.metrics.runlog import RunLog

log = logging.getLogger(__name__)

FLOAT_FORMAT = "%.6f"

SUMMARY_COLUMNS = [
    "rollout",
    "seed",
    "awt",
    "conflict_rate",
    "throughput",
    "avg_speed",
    "congested",
    "conflicts",
    "safety",
    "random_decisions",
]
SCENARIO_COLUMNS = ["event_step", "pre_event_slope", "post_event_slope"]


def frame_columns(slots: Sequence[str]) -> List[str]:
    return (
        ["step", "awt_intersection"]
        + [f"awt_{s}" for s in slots]
        + ["avg_speed", "throughput", "conflict_rate_cum"]
        + [f"cl_{s}" for s in slots]
        + ["event"]
    )


def metrics_frame(
    run_log: RunLog,
    threshold: float = DEFAULT_CL_THRESHOLD,
    mode: WaitingTimeMode = WaitingTimeMode.ACCUMULATED,
) -> pd.DataFrame:
    """
    One row per step with cumulative metrics from the start of the run to the end of the step.

    Args:
        run_log: the run.
        threshold: congestion level threshold, s.
        mode: accumulated or longest interval waiting.

    Returns:
        pd.DataFrame: columns as documented in this module.
    """
    slots = list(run_log.meta.get("slots", run_log.streams))
    active = set(run_log.streams)
    whole = WaitTracker(None, mode)
    per_stream = {s: WaitTracker(s, mode) for s in slots if s in active}
    exits = 0
    decisions = 0
    conflicting = 0
    rows = []
    for record in run_log:
        whole.add(record)
        for tracker in per_stream.values():
            tracker.add(record)
        exits += len(record.of_type(EventType.EXIT))
        decisions += len(record.decisions)
        conflicting += sum(1 for d in record.decisions if d.conflict)
        speed = step_speed(record)

        row: Dict[str, object] = {"step": record.step, "awt_intersection": whole.mean()}
        for s in slots:
            row[f"awt_{s}"] = per_stream[s].mean() if s in per_stream else 0.0
        row["avg_speed"] = speed if speed is not None else math.nan
        row["throughput"] = exits
        row["conflict_rate_cum"] = conflicting / decisions if decisions else math.nan
        for s in slots:
            row[f"cl_{s}"] = congestion_level(row[f"awt_{s}"], threshold)
        row["event"] = ";".join(e.detail for e in record.of_type(EventType.SCENARIO))
        rows.append(row)
    return pd.DataFrame(rows, columns=frame_columns(slots))


def write_csv(frame: pd.DataFrame, path: Union[str, Path]) -> None:
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT)
    log.debug(f"wrote {len(frame)} rows to {path}")


def event_step(run_log: RunLog) -> Optional[int]:
    """Index of the first step with a scenario event."""
    for record in run_log:
        if record.of_type(EventType.SCENARIO):
            return record.step
    return None


def event_slopes(
    run_log: RunLog,
    at_step: int,
    window: int = DEFAULT_SLOPE_WINDOW,
    mode: WaitingTimeMode = WaitingTimeMode.ACCUMULATED,
) -> Dict[str, float]:
    """
    Intersection AWT slope before an event and over the trailing window after it.

    Returns:
        Dict[str, float]: ``pre_event_slope`` and ``post_event_slope``, NaN where fewer than two points exist.
    """
    series = awt_series(run_log, mode=mode)
    before, after = series[:at_step], series[at_step:]
    out = {}
    for name, part in (("pre_event_slope", before), ("post_event_slope", after)):
        out[name] = awt_slope(part, window, run_log.dt) if len(part) >= 2 else math.nan
    return out


def summarize_run(
    run_log: RunLog,
    rollout: int = 0,
    mode: WaitingTimeMode = WaitingTimeMode.ACCUMULATED,
    slope_window: int = DEFAULT_SLOPE_WINDOW,
) -> Dict[str, object]:
    """Summary row of one rollout; scenario runs also get the event step and the slopes around it."""
    rate = conflict_rate(run_log)
    speed = avg_speed(run_log)
    row: Dict[str, object] = {
        "rollout": rollout,
        "seed": run_log.meta.get("seed"),
        "awt": awt(run_log, mode=mode),
        "conflict_rate": rate if rate is not None else math.nan,
        "throughput": throughput(run_log),
        "avg_speed": speed if speed is not None else math.nan,
        "congested": congested(run_log),
        "conflicts": conflict_events(run_log),
        "safety": sum(len(r.of_type(EventType.SAFETY)) for r in run_log),
        "random_decisions": random_decisions(run_log),
    }
    at_step = event_step(run_log)
    if at_step is not None:
        row["event_step"] = at_step
        row.update(event_slopes(run_log, at_step, slope_window, mode))
    return row


def summarize(
    logs: Sequence[RunLog],
    mode: WaitingTimeMode = WaitingTimeMode.ACCUMULATED,
    slope_window: int = DEFAULT_SLOPE_WINDOW,
) -> pd.DataFrame:
    """
    One row per rollout followed by ``mean`` and ``std`` rows over the numeric columns.

    ``congested`` aggregates to the share of congested rollouts.
    """
    rows = [summarize_run(run_log, k, mode, slope_window) for k, run_log in enumerate(logs)]
    columns = list(SUMMARY_COLUMNS)
    if any("event_step" in row for row in rows):
        columns += SCENARIO_COLUMNS
    frame = pd.DataFrame(rows, columns=columns)
    numeric = frame.drop(columns=["rollout", "seed"]).astype(np.float64)
    mean = numeric.mean(axis=0)
    std = numeric.std(axis=0, ddof=0)
    stats = pd.DataFrame([mean, std])
    stats.insert(0, "rollout", ["mean", "std"])
    stats.insert(1, "seed", [None, None])
    return pd.concat([frame.astype({"rollout": object}), stats], ignore_index=True)[columns]
