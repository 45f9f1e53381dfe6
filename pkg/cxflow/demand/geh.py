import logging
import math
from dataclasses import dataclass
from typing import Dict

import pandas as pd

from cxflow.common.constants import GEH_PASS
from cxflow.common.enums import EventType
from cxflow.common.exceptions import RunLogError
from cxflow.common.streams import StreamId, parse_stream
from cxflow.demand.models import DemandProfile
from cxflow.metrics.runlog import RunLog

log = logging.getLogger(__name__)


def geh(m: float, c: float) -> float:
    """
    GEH flow similarity statistic, ``sqrt(2 (M - C)² / (M + C))``.

    Args:
        m: simulated hourly count.
        c: observed hourly count.

    Returns:
        float: the statistic, 0 when both counts are 0.
    """
    if m + c <= 0:
        return 0.0
    return math.sqrt(2.0 * (m - c) ** 2 / (m + c))


@dataclass
class GehReport:
    """
    Per-stream comparison of simulated and configured hourly flows.

    Attributes:
        simulated (Dict[StreamId, float]): simulated v/h.
        observed (Dict[StreamId, float]): configured v/h.
        values (Dict[StreamId, float]): GEH per stream.
        mean (float): mean GEH over the streams.
    """

    simulated: Dict[StreamId, float]
    observed: Dict[StreamId, float]
    values: Dict[StreamId, float]
    mean: float

    @property
    def passed(self) -> bool:
        """True when every stream has GEH below 5."""
        return all(value < GEH_PASS for value in self.values.values())

    def failing(self) -> Dict[StreamId, float]:
        return {s: v for s, v in self.values.items() if v >= GEH_PASS}

    def to_frame(self) -> pd.DataFrame:
        rows = [
            {
                "stream": str(s),
                "simulated": self.simulated[s],
                "observed": self.observed[s],
                "geh": self.values[s],
                "passed": self.values[s] < GEH_PASS,
            }
            for s in self.values
        ]
        frame = pd.DataFrame(rows, columns=["stream", "simulated", "observed", "geh", "passed"])
        mean_row = {"stream": "mean", "simulated": None, "observed": None, "geh": self.mean, "passed": self.passed}
        return pd.concat([frame, pd.DataFrame([mean_row])], ignore_index=True)


def validate_demand(run_log: RunLog, profile: DemandProfile, window: float = 3600.0, start: float = 0.0) -> GehReport:
    """
    Compares entries into the box over a window against the configured demand.

    Args:
        run_log: the run to check.
        profile: the demand it was generated from.
        window: counting window, s; hourly counts need at least 3600.
        start: window start, s, e.g. after a warm-up.

    Returns:
        GehReport: simulated and configured flows with GEH per stream.

    Raises:
        ValueError: If the window is shorter than an hour.
        RunLogError: If the run ends before the window does.
    """
    if window < 3600.0:
        raise ValueError(f"window must be at least 3600 s, got {window}")
    if run_log.end_time < start + window:
        raise RunLogError(
            f"run covers {run_log.end_time:.0f} s, shorter than the validation window ending at {start + window:.0f} s"
        )
    lanes = run_log.meta.get("lanes", {})
    streams = [parse_stream(s) for s in run_log.streams]
    entered = {s: 0 for s in streams}
    for record in run_log.window(start, start + window):
        for event in record.of_type(EventType.ENTER):
            stream = parse_stream(event.detail)
            entered[stream] = entered.get(stream, 0) + 1

    scale = 3600.0 / window
    simulated = {s: entered[s] * scale for s in streams}
    observed = {s: profile.count(s, int(lanes.get(str(s), 1))) for s in streams}
    values = {s: geh(simulated[s], observed[s]) for s in streams}
    mean = sum(values.values()) / len(values) if values else 0.0
    report = GehReport(simulated=simulated, observed=observed, values=values, mean=mean)
    if not report.passed:
        log.warning(f"GEH check failed on {', '.join(str(s) for s in report.failing())}")
    return report
