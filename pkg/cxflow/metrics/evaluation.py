"""
Evaluation quantities computed from a :class:`~cxflow.metrics.runlog.RunLog`.

Every function is pure over the log, so values recomputed from a persisted log equal the live ones exactly.

Example:
    >>> congestion_level(23.25, 46.5)
    0.5
    >>> awt_reduction(25.0, 100.0)
    75.0
"""

import logging
import statistics
from typing import Dict, Iterable, List, Optional, Sequence

import numpy as np

from cxflow.common.constants import CONGESTION_SPEED, CONGESTION_STEPS, DEFAULT_SLOPE_WINDOW
from cxflow.common.enums import EventType, WaitingTimeMode, Zone
from cxflow.common.exceptions import RunLogError
from cxflow.common.utils import mean_of
from cxflow.metrics.runlog import RunLog, StepRecord, VehicleRecord

log = logging.getLogger(__name__)

MEASURED_ZONES = (Zone.CONTROL_ZONE.value, Zone.INSIDE.value)


# ==================== Waiting time ====================


def waiting_time(vehicle: VehicleRecord, mode: WaitingTimeMode = WaitingTimeMode.ACCUMULATED) -> float:
    """Accumulated still time in the control zone, or the longest single still interval."""
    return vehicle.wait_accum if mode == WaitingTimeMode.ACCUMULATED else vehicle.longest_still


class WaitTracker:
    """
    Latest waiting time of every vehicle seen so far in one scope, in order of first appearance.

    Args:
        scope: a stream label, or None for the whole intersection.
        mode: accumulated or longest interval waiting.
    """

    def __init__(self, scope: Optional[str] = None, mode: WaitingTimeMode = WaitingTimeMode.ACCUMULATED):
        self.scope = scope
        self.mode = mode
        self.waits: Dict[int, float] = {}

    def add(self, record: StepRecord) -> None:
        for veh in record.vehicles:
            if veh.zone in MEASURED_ZONES and (self.scope is None or veh.stream == self.scope):
                self.waits[veh.id] = waiting_time(veh, self.mode)

    @property
    def empty(self) -> bool:
        return not self.waits

    def mean(self) -> float:
        return mean_of(list(self.waits.values()))

    def total(self) -> float:
        return sum(self.waits.values())


def _records(run_log: RunLog, start: Optional[float], end: Optional[float]) -> List[StepRecord]:
    if start is None and end is None:
        return list(run_log)
    return run_log.window(start, end)


def vehicle_waits(
    run_log: RunLog,
    scope: Optional[str] = None,
    start: Optional[float] = None,
    end: Optional[float] = None,
    mode: WaitingTimeMode = WaitingTimeMode.ACCUMULATED,
) -> Dict[int, float]:
    """Waiting time of every vehicle present in scope during ``[start, end)``, as of its last record there."""
    tracker = WaitTracker(scope, mode)
    for record in _records(run_log, start, end):
        tracker.add(record)
    return dict(tracker.waits)


def awt(
    run_log: RunLog,
    scope: Optional[str] = None,
    start: Optional[float] = None,
    end: Optional[float] = None,
    mode: WaitingTimeMode = WaitingTimeMode.ACCUMULATED,
    warn: bool = True,
) -> float:
    """
    Average waiting time over the vehicles present in a direction or the whole intersection during a window.

    Vehicles that never stop count with 0. An empty scope gives 0 and logs a warning.

    Args:
        run_log: the run.
        scope: stream label such as ``"E-L"``, or None for the intersection.
        start: window start time, s, inclusive.
        end: window end time, s, exclusive.
        mode: accumulated or longest interval waiting.
        warn: log empty scopes.

    Returns:
        float: seconds.
    """
    tracker = WaitTracker(scope, mode)
    for record in _records(run_log, start, end):
        tracker.add(record)
    if tracker.empty and warn:
        log.warning(f"no vehicles in scope {scope or 'intersection'} for the AWT window, reporting 0")
    return tracker.mean()


def awt_series(
    run_log: RunLog, scope: Optional[str] = None, mode: WaitingTimeMode = WaitingTimeMode.ACCUMULATED
) -> np.ndarray:
    """AWT from the start of the run up to the end of every step."""
    tracker = WaitTracker(scope, mode)
    values = []
    for record in run_log:
        tracker.add(record)
        values.append(tracker.mean())
    return np.asarray(values, dtype=np.float64)


def awt_slope(series: Sequence[float], window: int = DEFAULT_SLOPE_WINDOW, dt: float = 1.0) -> float:
    """
    Least squares slope of AWT against time over the trailing ``window`` points.

    Raises:
        ValueError: If fewer than two points are available.
    """
    values = np.asarray(series, dtype=np.float64)[-window:]
    if len(values) < 2:
        raise ValueError(f"awt_slope needs at least 2 points, got {len(values)}")
    times = np.arange(len(values), dtype=np.float64) * dt
    return float(np.polyfit(times, values, 1)[0])


def awt_reduction(method_awt: float, baseline_awt: float) -> float:
    """
    Percentage by which a method lowers the AWT of a baseline.

    Raises:
        ValueError: If the baseline AWT is not positive.
    """
    if baseline_awt <= 0:
        raise ValueError(f"baseline AWT must be positive, got {baseline_awt}")
    return (baseline_awt - method_awt) / baseline_awt * 100.0


# ==================== Congestion ====================


def congestion_level(awt_dir: float, threshold: float) -> float:
    """
    Saturating congestion index ``min(AWT / threshold, 1)``.

    Raises:
        ValueError: If the threshold is not positive.
    """
    if threshold <= 0:
        raise ValueError(f"threshold must be positive, got {threshold}")
    return min(max(awt_dir, 0.0) / threshold, 1.0)


def calibrate_threshold(
    tl_log: RunLog, mode: WaitingTimeMode = WaitingTimeMode.ACCUMULATED, streams: Optional[Iterable[str]] = None
) -> float:
    """
    Congestion threshold of a site: the median per-direction AWT under the fixed-time signal baseline.

    Raises:
        RunLogError: If the log names no directions.
    """
    labels = list(streams) if streams is not None else tl_log.streams
    if not labels:
        raise RunLogError("run log names no directions to calibrate on")
    per_direction = [awt(tl_log, scope=label, mode=mode, warn=False) for label in labels]
    threshold = float(statistics.median(per_direction))
    if threshold <= 0:
        log.warning("calibrated congestion threshold is 0; no direction waited under the signal baseline")
    return threshold


def step_speed(record: StepRecord) -> Optional[float]:
    """Mean speed of the vehicles in the control zone and the box, None when there is none."""
    speeds = [veh.v for veh in record.vehicles if veh.zone in MEASURED_ZONES]
    return mean_of(speeds) if speeds else None


def avg_speed(run_log: RunLog, start: Optional[float] = None, end: Optional[float] = None) -> Optional[float]:
    """Mean speed over every control zone and box vehicle sample in the window, None without samples."""
    speeds = [veh.v for r in _records(run_log, start, end) for veh in r.vehicles if veh.zone in MEASURED_ZONES]
    if not speeds:
        log.warning("no vehicles in the window, average speed is undefined")
        return None
    return mean_of(speeds)


class CongestionDetector:
    """Counts consecutive steps whose mean speed is below the congestion speed; steps without vehicles reset it."""

    def __init__(self, speed: float = CONGESTION_SPEED, steps: int = CONGESTION_STEPS):
        self.speed = speed
        self.steps = steps
        self.run = 0
        self.triggered = False

    def add(self, record: StepRecord) -> bool:
        speed = step_speed(record)
        self.run = self.run + 1 if speed is not None and speed < self.speed else 0
        if self.run >= self.steps:
            self.triggered = True
        return self.triggered


def congested(
    run_log: RunLog,
    start: Optional[float] = None,
    end: Optional[float] = None,
    speed: float = CONGESTION_SPEED,
    steps: int = CONGESTION_STEPS,
) -> bool:
    """True when the mean speed stays below ``speed`` for ``steps`` consecutive steps of the window."""
    detector = CongestionDetector(speed, steps)
    for record in _records(run_log, start, end):
        if detector.add(record):
            return True
    return False


# ==================== Counts ====================


def throughput(run_log: RunLog, start: Optional[float] = None, end: Optional[float] = None) -> int:
    """Vehicles that left the box during the window."""
    return sum(len(r.of_type(EventType.EXIT)) for r in _records(run_log, start, end))


def conflict_events(run_log: RunLog, start: Optional[float] = None, end: Optional[float] = None) -> int:
    """Conflict zone co-occupancies recorded by the simulator."""
    return sum(len(r.of_type(EventType.CONFLICT)) for r in _records(run_log, start, end))


def conflict_rate(run_log: RunLog, start: Optional[float] = None, end: Optional[float] = None) -> Optional[float]:
    """
    Conflicting Go decisions over all RV decisions in the window.

    Returns:
        Optional[float]: the ratio, or None with a warning when no RV decided.
    """
    decisions = [d for r in _records(run_log, start, end) for d in r.decisions]
    if not decisions:
        log.warning("no RV decisions in the window, conflict rate is undefined")
        return None
    return sum(1 for d in decisions if d.conflict) / len(decisions)


def random_decisions(run_log: RunLog) -> int:
    return sum(1 for r in run_log for d in r.decisions if d.random)
