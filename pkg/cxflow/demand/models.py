from typing import Dict, Optional

from pydantic import Field, field_validator

from cxflow.common.enums import ArrivalModel
from cxflow.common.models import ConfigModel
from cxflow.common.streams import StreamId, parse_stream


class DemandProfile(ConfigModel):
    """
    Turning count demand of one intersection.

    Attributes:
        counts (Dict[str, float]): vehicles per hour per stream label, e.g. ``{"N-C": 300}``.
        per_lane (Optional[float]): vehicles per hour per lane for every active stream missing from ``counts``.
        arrival_model (ArrivalModel): Poisson (default) or uniform headways.
        rv_rate (float): fraction of spawned vehicles that are robot vehicles.
    """

    counts: Dict[str, float] = Field(default_factory=dict)
    per_lane: Optional[float] = Field(None, ge=0)
    arrival_model: ArrivalModel = ArrivalModel.POISSON
    rv_rate: float = Field(1.0, ge=0, le=1)

    @field_validator("counts")
    def counts_non_negative(cls, value: Dict[str, float]) -> Dict[str, float]:
        for key, count in value.items():
            parse_stream(key)
            if count < 0:
                raise ValueError(f"counts.{key} must be >= 0, got {count}")
        return value

    def count(self, stream: StreamId, lanes: int = 1) -> float:
        """Hourly demand of one stream."""
        if str(stream) in self.counts:
            return float(self.counts[str(stream)])
        if self.per_lane is not None:
            return float(self.per_lane) * lanes
        return 0.0

    def streams(self) -> Dict[StreamId, float]:
        return {parse_stream(key): float(count) for key, count in self.counts.items()}
