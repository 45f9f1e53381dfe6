from typing import Dict, List, Optional

from pydantic import Field, field_validator, model_validator

from cxflow.common.constants import (
    CONFLICT_CLEARANCE,
    DEFAULT_APPROACH_LENGTH,
    DEFAULT_COMFORT_DECEL,
    DEFAULT_CONTROL_ZONE_RADIUS,
    DEFAULT_DELTA,
    DEFAULT_DESIRED_SPEED,
    DEFAULT_EMERGENCY_DECEL,
    DEFAULT_EXIT_LENGTH,
    DEFAULT_LANE_WIDTH,
    DEFAULT_MAX_ACCEL,
    DEFAULT_STANDSTILL_GAP,
    DEFAULT_TIME_HEADWAY,
    DEFAULT_VEHICLE_LENGTH,
    MIN_INNER_PATH_LENGTH,
    V_LEN,
)
from cxflow.common.enums import Approach, DirectionMode, Movement
from cxflow.common.models import ConfigModel
from cxflow.common.streams import StreamId, canonical_streams, parse_stream
from cxflow.common.utils import split_csv


class IdmParams(ConfigModel):
    """
    Car following parameters shared by every vehicle.

    Attributes:
        v0 (float): desired speed, m/s.
        T (float): desired time headway, s.
        delta (float): acceleration exponent.
        s0 (float): standstill gap, m.
        a_max (float): maximum acceleration, m/s².
        b (float): comfortable deceleration, m/s².
        b_emergency (float): hardest braking a vehicle can apply, m/s².
        vehicle_length (float): body length, m. Together with s0 it must span one queue slot of 5 m.
    """

    v0: float = Field(DEFAULT_DESIRED_SPEED, gt=0)
    T: float = Field(DEFAULT_TIME_HEADWAY, gt=0)
    delta: float = Field(DEFAULT_DELTA, gt=0)
    s0: float = Field(DEFAULT_STANDSTILL_GAP, gt=0)
    a_max: float = Field(DEFAULT_MAX_ACCEL, gt=0)
    b: float = Field(DEFAULT_COMFORT_DECEL, gt=0)
    b_emergency: float = Field(DEFAULT_EMERGENCY_DECEL, gt=0)
    vehicle_length: float = Field(DEFAULT_VEHICLE_LENGTH, gt=0)

    @model_validator(mode="after")
    def footprint_matches_queue_slot(self) -> "IdmParams":
        if abs(self.vehicle_length + self.s0 - V_LEN) > 1e-9:
            raise ValueError(
                f"vehicle_length + s0 must equal {V_LEN} m, got {self.vehicle_length + self.s0}"
            )
        if self.b_emergency < self.b:
            raise ValueError("b_emergency must be at least the comfortable deceleration b")
        return self


class ZoneOverride(ConfigModel):
    """
    An explicit conflict zone for one ordered stream pair, replacing the one derived from path crossings.

    Attributes:
        own_start, own_end: interval on the first stream's path, m.
        other_start, other_end: interval on the second stream's path, m.
    """

    own_start: float = Field(ge=0)
    own_end: float = Field(ge=0)
    other_start: float = Field(ge=0)
    other_end: float = Field(ge=0)

    @model_validator(mode="after")
    def intervals_ordered(self) -> "ZoneOverride":
        if self.own_end <= self.own_start or self.other_end <= self.other_start:
            raise ValueError("conflict zone intervals must have end > start")
        return self

    def mirrored(self) -> "ZoneOverride":
        return ZoneOverride(
            own_start=self.other_start,
            own_end=self.other_end,
            other_start=self.own_start,
            other_end=self.own_end,
        )


def parse_pair(key: str) -> List[StreamId]:
    parts = key.split("/")
    if len(parts) != 2:
        raise ValueError(f"conflict zone key '{key}' must look like 'E-L/N-C'")
    return [parse_stream(p) for p in parts]


class IntersectionSpec(ConfigModel):
    """
    Topology of a single intersection.

    Attributes:
        approaches (List[Approach]): the arms present, 3 or 4 of N, S, E, W.
        mode (DirectionMode): 8-direction (right turns uncontrolled and not simulated) or 12-direction.
        lanes_per_movement (Dict[str, int]): lanes per stream label such as ``"N-L"``; streams not listed get 1 lane.
          0 removes a stream.
        approach_length (float): length of each inbound approach, m.
        exit_length (float): length of each outbound link before vehicles leave the world, m.
        control_zone_radius (float): distance before the entrance where robot vehicles decide, m.
        lane_width (float): m.
        box_side (Optional[float]): side of the square intersection box. Defaults to the widest approach cross
          section, but never below 24 m.
        inner_path_length (Dict[str, float]): per stream override of the inner path length, m.
        conflict_zones (Dict[str, ZoneOverride]): explicit zones keyed ``"A/B"``; both orders must be present.
    """

    approaches: List[Approach] = Field(default_factory=lambda: [Approach.N, Approach.S, Approach.E, Approach.W])
    mode: DirectionMode = DirectionMode.EIGHT
    lanes_per_movement: Dict[str, int] = Field(default_factory=dict)
    approach_length: float = Field(DEFAULT_APPROACH_LENGTH, gt=0)
    exit_length: float = Field(DEFAULT_EXIT_LENGTH, gt=0)
    control_zone_radius: float = Field(DEFAULT_CONTROL_ZONE_RADIUS, gt=0)
    lane_width: float = Field(DEFAULT_LANE_WIDTH, gt=CONFLICT_CLEARANCE)
    box_side: Optional[float] = Field(None, gt=0)
    inner_path_length: Dict[str, float] = Field(default_factory=dict)
    conflict_zones: Dict[str, ZoneOverride] = Field(default_factory=dict)

    @field_validator("approaches", mode="before")
    def split_approaches(cls, value):
        return split_csv(value)

    @field_validator("approaches")
    def three_or_four_arms(cls, value: List[Approach]) -> List[Approach]:
        if len(set(value)) != len(value):
            raise ValueError("approaches must not repeat")
        if len(value) not in (3, 4):
            raise ValueError(f"approaches must list 3 or 4 arms, got {len(value)}")
        return value

    @field_validator("lanes_per_movement")
    def lanes_valid(cls, value: Dict[str, int]) -> Dict[str, int]:
        for key, lanes in value.items():
            parse_stream(key)
            if lanes < 0:
                raise ValueError(f"lanes_per_movement.{key} must be >= 0, got {lanes}")
        return value

    @field_validator("inner_path_length")
    def path_lengths_valid(cls, value: Dict[str, float]) -> Dict[str, float]:
        for key, length in value.items():
            parse_stream(key)
            if length < MIN_INNER_PATH_LENGTH:
                raise ValueError(
                    f"inner_path_length.{key} must be >= {MIN_INNER_PATH_LENGTH} m, got {length}"
                )
        return value

    @field_validator("conflict_zones")
    def zones_symmetric(cls, value: Dict[str, ZoneOverride]) -> Dict[str, ZoneOverride]:
        for key, zone in value.items():
            a, b = parse_pair(key)
            mirror_key = f"{b}/{a}"
            if mirror_key not in value:
                raise ValueError(f"conflict_zones.{key} has no mirrored entry {mirror_key}")
            if value[mirror_key] != zone.mirrored():
                raise ValueError(f"conflict_zones.{key} and {mirror_key} intervals are not mirrored")
        return value

    @model_validator(mode="after")
    def some_lanes_exist(self) -> "IntersectionSpec":
        if self.approach_length < self.control_zone_radius:
            raise ValueError("approach_length must be at least control_zone_radius")
        if not self.active_streams():
            raise ValueError("lanes_per_movement leaves no active stream (zero lanes everywhere)")
        return self

    def lanes(self, stream: StreamId) -> int:
        return self.lanes_per_movement.get(str(stream), 1)

    def active_streams(self) -> List[StreamId]:
        """Streams that carry traffic: both arms present and at least one lane, in canonical order."""
        present = set(self.approaches)
        return [
            s
            for s in canonical_streams(self.mode)
            if s.approach in present and s.exit_arm in present and self.lanes(s) > 0
        ]

    def inbound_lanes(self, approach: Approach) -> List[StreamId]:
        """Inbound lane owners of one arm ordered from the centre line outwards: lefts, throughs, rights."""
        order = [Movement.L, Movement.C, Movement.R]
        active = set(self.active_streams())
        lanes = []
        for movement in order:
            stream = StreamId(approach, movement)
            if stream in active:
                lanes.extend([stream] * self.lanes(stream))
        return lanes
