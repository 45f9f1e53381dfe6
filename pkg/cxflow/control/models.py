from dataclasses import dataclass
from typing import FrozenSet, List, Optional

from pydantic import Field, field_validator, model_validator

from cxflow.common.constants import DEFAULT_ALL_RED, DEFAULT_GREEN, DEFAULT_YELLOW
from cxflow.common.enums import Action, ControllerKind, EventKind, StatsSource
from cxflow.common.models import ConfigModel
from cxflow.common.streams import StreamId, parse_stream
from cxflow.common.utils import split_csv
from cxflow.sim.geometry import ConflictTable


@dataclass
class Decision:
    """
    One Stop/Go decision of a controlled RV in the control zone.

    Attributes:
        vehicle (int): vehicle id.
        stream (StreamId): its direction.
        lane (int): its lane.
        action (Action): the raw policy output.
        is_front (bool): no vehicle between it and the entrance in its lane.
        arriving (bool): a front vehicle close enough to reach the entrance this step.
        random (bool): the action came from exploration.
        conflict (bool): the raw output conflicts with the interior or with another front Go.
        granted (bool): entry was granted this step.
    """

    vehicle: int
    stream: StreamId
    lane: int
    action: Action
    is_front: bool
    arriving: bool = False
    random: bool = False
    conflict: bool = False
    granted: bool = False


class Phase(ConfigModel):
    """
    One signal phase.

    Attributes:
        streams (List[str]): streams that are green, e.g. ``N-C, S-C``.
        green (float): s.
        yellow (float): s.
        all_red (float): s.
    """

    streams: List[str]
    green: float = Field(DEFAULT_GREEN, gt=0)
    yellow: float = Field(DEFAULT_YELLOW, ge=0)
    all_red: float = Field(DEFAULT_ALL_RED, ge=0)

    @field_validator("streams", mode="before")
    def split_streams(cls, value):
        return split_csv(value)

    @field_validator("streams")
    def streams_valid(cls, value: List[str]) -> List[str]:
        return [str(parse_stream(s)) for s in value]

    @property
    def duration(self) -> float:
        return self.green + self.yellow + self.all_red

    def green_set(self) -> FrozenSet[StreamId]:
        return frozenset(parse_stream(s) for s in self.streams)


class PhasePlan(ConfigModel):
    """Ordered fixed-time phases; the cycle repeats forever from t = 0."""

    phases: List[Phase]

    @field_validator("phases")
    def not_empty(cls, value: List[Phase]) -> List[Phase]:
        if not value:
            raise ValueError("phases must contain at least one phase")
        return value

    @property
    def cycle(self) -> float:
        return sum(p.duration for p in self.phases)

    def check_conflict_free(self, table: ConflictTable) -> None:
        """
        Raises:
            ValueError: If a phase turns two conflicting streams green together.
        """
        for index, phase in enumerate(self.phases):
            if not table.pairwise_free(phase.green_set()):
                raise ValueError(f"phases.{index} turns conflicting streams green: {', '.join(phase.streams)}")


class EventSpec(ConfigModel):
    """
    A scripted scenario event.

    Attributes:
        kind (EventKind): blackout or RV rate drop.
        at_step (int): step at which it applies.
        target_rate (Optional[float]): new RV rate of a rate drop.
        successor (ControllerKind): controller taking over after a blackout.
    """

    kind: EventKind
    at_step: int = Field(ge=0)
    target_rate: Optional[float] = Field(None, ge=0, le=1)
    successor: ControllerKind = ControllerKind.NOTL

    @model_validator(mode="after")
    def params_match_kind(self) -> "EventSpec":
        if self.kind == EventKind.RV_DROP and self.target_rate is None:
            raise ValueError("target_rate is required for an rv_drop event")
        if self.kind == EventKind.BLACKOUT and self.successor == ControllerKind.TL:
            raise ValueError("successor of a blackout must be notl or policy")
        return self


class ControllerConfig(ConfigModel):
    """
    Which controller runs and how.

    Attributes:
        kind (ControllerKind): tl, notl or policy.
        checkpoint (Optional[str]): network file for the policy controller.
        stats_source (StatsSource): where observations take per-direction statistics from.
        epsilon (float): exploration rate during evaluation.
        resolution (bool): post-process Go decisions with conflict resolution.
        plan (Optional[PhasePlan]): signal plan for tl; the default protected-left plan when omitted.
    """

    kind: ControllerKind = ControllerKind.TL
    checkpoint: Optional[str] = None
    stats_source: StatsSource = StatsSource.GROUND_TRUTH
    epsilon: float = Field(0.0, ge=0, le=1)
    resolution: bool = True
    plan: Optional[PhasePlan] = None
