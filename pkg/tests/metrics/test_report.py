import math

import pandas as pd
import pytest

from cxflow.common.enums import DirectionMode
from cxflow.common.streams import canonical_streams, stream_labels
from cxflow.metrics import EventRecord, event_slopes, frame_columns, metrics_frame, summarize, write_csv
from tests.metrics.factories import create_dummy_decision, create_dummy_run_log, create_dummy_vehicle_record

SLOTS = stream_labels(canonical_streams(DirectionMode.EIGHT))
GOLDEN_HEADER = (
    "step,awt_intersection,awt_E-L,awt_E-C,awt_W-L,awt_W-C,awt_N-L,awt_N-C,awt_S-L,awt_S-C,"
    "avg_speed,throughput,conflict_rate_cum,cl_E-L,cl_E-C,cl_W-L,cl_W-C,cl_N-L,cl_N-C,cl_S-L,cl_S-C,event"
)


def waiting_log(waits, streams=("N-C",), events=None):
    steps = [[create_dummy_vehicle_record(1, wait=w)] for w in waits]
    return create_dummy_run_log(steps, streams=streams, events=events)


# ==================== Per-step frame ====================


def test_frame_header():
    """Step, intersection AWT, J direction AWTs, speed, throughput, conflict rate, J levels and the event."""
    frame = metrics_frame(waiting_log([0.0, 1.0], streams=SLOTS))
    assert len(frame.columns) == 22
    assert ",".join(frame.columns) == GOLDEN_HEADER
    assert len(frame) == 2


def test_csv_header_is_stable(tmp_path):
    path = tmp_path / "rollout_0.csv"
    write_csv(metrics_frame(waiting_log([0.0, 1.0], streams=SLOTS)), path)
    assert path.read_text().splitlines()[0] == GOLDEN_HEADER


def test_frame_values():
    run_log = waiting_log([0.0, 23.25])
    frame = metrics_frame(run_log, threshold=46.5)
    assert frame["awt_N-C"].tolist() == [0.0, 23.25]
    assert frame["cl_N-C"].tolist() == [0.0, 0.5]
    assert frame["avg_speed"].tolist() == [0.0, 0.0]
    assert math.isnan(frame["conflict_rate_cum"].iloc[0])


def test_frame_cumulative_conflict_rate():
    decisions = {0: [create_dummy_decision(1, conflict=True)], 1: [create_dummy_decision(1)]}
    run_log = create_dummy_run_log([[], []], decisions=decisions)
    assert metrics_frame(run_log)["conflict_rate_cum"].tolist() == [1.0, 0.5]


def test_frame_event_column():
    events = {1: [EventRecord("scenario", detail="blackout tl->notl")]}
    frame = metrics_frame(waiting_log([0.0, 0.0], events=events))
    assert frame["event"].tolist() == ["", "blackout tl->notl"]


def test_csv_uses_fixed_precision(tmp_path):
    path = tmp_path / "rollout_0.csv"
    write_csv(metrics_frame(waiting_log([1.0 / 3.0])), path)
    assert "0.333333" in path.read_text()
    columns = list(pd.read_csv(path).columns)
    assert columns == frame_columns(["N-C"])


# ==================== Summaries ====================


def test_summary_has_mean_and_std_rows():
    summary = summarize([waiting_log([2.0]), waiting_log([4.0])])
    assert summary["rollout"].tolist() == [0, 1, "mean", "std"]
    assert summary["awt"].tolist() == [2.0, 4.0, 3.0, 1.0]


def test_congested_share():
    slow = waiting_log([0.0] * 60)
    free = create_dummy_run_log([[create_dummy_vehicle_record(1, v=5.0)]])
    summary = summarize([slow, free])
    assert summary.loc[2, "congested"] == 0.5


def test_scenario_summary_has_slopes():
    events = {5: [EventRecord("scenario", detail="rv_drop 1.0->0.0 converted 3")]}
    run_log = waiting_log([0.0] * 5 + [float(t) for t in range(5)], events=events)
    summary = summarize([run_log])
    assert summary.loc[0, "event_step"] == 5
    assert summary.loc[0, "pre_event_slope"] == pytest.approx(0.0, abs=1e-12)
    assert summary.loc[0, "post_event_slope"] == pytest.approx(1.0)


def test_event_slopes_with_short_tail():
    slopes = event_slopes(waiting_log([0.0, 1.0, 2.0]), at_step=2)
    assert slopes["pre_event_slope"] == pytest.approx(1.0)
    assert math.isnan(slopes["post_event_slope"])
