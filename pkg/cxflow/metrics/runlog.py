"""
Append-only per-step log of a run, persisted with msgpack.

Every metric is computed from a :class:`RunLog`, so recomputing from a log loaded from disk gives the same values as
the live run. Records are named tuples of plain values; msgpack writes them as arrays and 64-bit floats, which
makes a dump/load cycle exact.

Example:
    >>> log = RunLog(meta={"streams": ["E-L"]})
    >>> log.append(StepRecord(step=0, time=0.0, controller="tl"))
    >>> len(log)
    1
"""

import logging
from typing import Any, Dict, Iterator, List, NamedTuple, Optional, Sequence, Tuple

import msgpack

from cxflow.common.enums import EventType, Zone
from cxflow.common.exceptions import RunLogError
from cxflow.common.utils import mean_of

log = logging.getLogger(__name__)

RUNLOG_FORMAT = 1


class VehicleRecord(NamedTuple):
    """Post-step snapshot of one vehicle."""

    id: int
    kind: str
    stream: str
    lane: int
    s: float
    v: float
    zone: str
    wait_accum: float
    longest_still: float
    offline: bool


class DecisionRecord(NamedTuple):
    """
    One Stop/Go decision of a controlled RV.

    ``conflict`` is the raw conflict predicate on the policy output, before resolution. ``reward`` is filled in when
    the run is collecting transitions and is None otherwise.
    """

    vehicle: int
    stream: str
    action: str
    is_front: bool
    conflict: bool
    granted: bool
    random: bool
    reward: Optional[float] = None


class EventRecord(NamedTuple):
    type: str
    vehicle: Optional[int] = None
    other: Optional[int] = None
    detail: str = ""


class StepRecord(NamedTuple):
    """Everything logged for one step; ``time`` is the clock at the start of the step."""

    step: int
    time: float
    controller: str
    vehicles: Tuple[VehicleRecord, ...] = ()
    decisions: Tuple[DecisionRecord, ...] = ()
    grants: Tuple[int, ...] = ()
    events: Tuple[EventRecord, ...] = ()

    def of_type(self, event_type: EventType) -> List[EventRecord]:
        return [e for e in self.events if e.type == event_type.value]


def stream_wait(vehicles: Sequence[VehicleRecord], stream: str) -> float:
    """Mean accumulated wait of the control zone vehicles of one direction in a snapshot, 0 when there is none."""
    return mean_of([v.wait_accum for v in vehicles if v.stream == stream and v.zone == Zone.CONTROL_ZONE.value])


class RunLog:
    """
    Ordered step records plus run metadata.

    Args:
        meta: run level facts needed to interpret the records (streams, lanes, mode, radius, dt, seed).
    """

    def __init__(self, meta: Optional[Dict[str, Any]] = None):
        self.meta: Dict[str, Any] = dict(meta or {})
        self._steps: List[StepRecord] = []

    def __len__(self) -> int:
        return len(self._steps)

    def __iter__(self) -> Iterator[StepRecord]:
        return iter(self._steps)

    def __getitem__(self, index):
        return self._steps[index]

    @property
    def steps(self) -> Tuple[StepRecord, ...]:
        return tuple(self._steps)

    @property
    def streams(self) -> List[str]:
        return list(self.meta.get("streams", []))

    @property
    def dt(self) -> float:
        return float(self.meta.get("dt", 1.0))

    @property
    def end_time(self) -> float:
        return self._steps[-1].time + self.dt if self._steps else 0.0

    def append(self, record: StepRecord) -> None:
        """
        Appends one step.

        Raises:
            RunLogError: If the step index does not increase.
        """
        if self._steps and record.step <= self._steps[-1].step:
            raise RunLogError(f"step {record.step} does not follow step {self._steps[-1].step}")
        self._steps.append(record)

    def window(self, start: Optional[float] = None, end: Optional[float] = None) -> List[StepRecord]:
        """Records whose start time lies in ``[start, end)``."""
        lo = float("-inf") if start is None else start
        hi = float("inf") if end is None else end
        return [r for r in self._steps if lo <= r.time < hi]

    def events(self, event_type: EventType) -> List[Tuple[StepRecord, EventRecord]]:
        return [(r, e) for r in self._steps for e in r.events if e.type == event_type.value]

    # ==================== Persistence ====================

    def to_bytes(self) -> bytes:
        payload = {"format": RUNLOG_FORMAT, "meta": self.meta, "steps": self._steps}
        return msgpack.packb(payload, use_bin_type=True)

    @classmethod
    def from_bytes(cls, data: bytes) -> "RunLog":
        """
        Rebuilds a log written by :meth:`to_bytes`.

        Raises:
            RunLogError: If the payload is not a run log of a known format.
        """
        try:
            payload = msgpack.unpackb(data, raw=False, strict_map_key=False)
        except (msgpack.ExtraData, msgpack.FormatError, msgpack.StackError, ValueError) as e:
            raise RunLogError(f"run log is not valid msgpack: {e}") from e
        if not isinstance(payload, dict) or payload.get("format") != RUNLOG_FORMAT:
            raise RunLogError("run log format is missing or unsupported")
        run_log = cls(payload.get("meta", {}))
        for raw in payload.get("steps", []):
            step, time, controller, vehicles, decisions, grants, events = raw
            run_log.append(
                StepRecord(
                    step=step,
                    time=time,
                    controller=controller,
                    vehicles=tuple(VehicleRecord(*v) for v in vehicles),
                    decisions=tuple(DecisionRecord(*d) for d in decisions),
                    grants=tuple(grants),
                    events=tuple(EventRecord(*e) for e in events),
                )
            )
        return run_log

    def dump(self, path) -> None:
        with open(path, "wb") as f:
            f.write(self.to_bytes())
        log.debug(f"wrote run log with {len(self)} steps to {path}")

    @classmethod
    def load(cls, path) -> "RunLog":
        with open(path, "rb") as f:
            return cls.from_bytes(f.read())
