import pytest

from cxflow.common.exceptions import RunLogError
from cxflow.common.streams import parse_stream
from cxflow.demand import DemandProfile, geh, validate_demand
from cxflow.metrics.runlog import EventRecord
from tests.metrics.factories import create_dummy_run_log


def _entering_log(steps, every, stream="N-C"):
    events = {i: [EventRecord("enter", vehicle=i, detail=stream)] for i in range(0, steps, every)}
    return create_dummy_run_log([[] for _ in range(steps)], streams=(stream,), events=events)


@pytest.mark.parametrize(
    "m, c, expected",
    [
        (100.0, 100.0, 0.0),
        (0.0, 0.0, 0.0),
        (350.0, 700.0, 15.275),
    ],
)
def test_geh(m, c, expected):
    assert geh(m, c) == pytest.approx(expected, abs=1e-3)


def test_geh_is_symmetric():
    assert geh(300.0, 400.0) == pytest.approx(geh(400.0, 300.0))


def test_matching_flow_passes():
    """One entry every 10 s over an hour matches 360 v/h exactly."""
    report = validate_demand(_entering_log(3600, 10), DemandProfile(counts={"N-C": 360}))
    assert report.simulated[parse_stream("N-C")] == 360.0
    assert report.values[parse_stream("N-C")] == 0.0
    assert report.passed


def test_half_flow_fails():
    report = validate_demand(_entering_log(3600, 10), DemandProfile(counts={"N-C": 720}))
    assert not report.passed
    assert list(report.failing()) == [parse_stream("N-C")]


def test_report_frame_has_mean_row():
    frame = validate_demand(_entering_log(3600, 10), DemandProfile(counts={"N-C": 360})).to_frame()
    assert list(frame["stream"]) == ["N-C", "mean"]
    assert frame.iloc[-1]["geh"] == 0.0


def test_short_window_rejected():
    with pytest.raises(ValueError, match="at least 3600"):
        validate_demand(_entering_log(3600, 10), DemandProfile(), window=600.0)


def test_short_run_rejected():
    with pytest.raises(RunLogError, match="shorter than the validation window"):
        validate_demand(_entering_log(100, 10), DemandProfile())
