"""
Intersection geometry and the conflict table derived from it.

The box is a square centred on the origin with right-hand traffic. Each (stream, lane) owns one inner path from its
entry point on the arriving edge to its exit point on the leaving edge: a straight chord for through movements and a
quarter ellipse around the nearest box corner for turns. Two paths conflict when they pass within
``CONFLICT_CLEARANCE`` of each other; the conflict zone on each path is the stretch where that happens, widened by
half a vehicle length on both sides.

Example:
    >>> from cxflow.sim.geometry import build_intersection
    >>> from cxflow.sim.models import IntersectionSpec
    >>> inter = build_intersection(IntersectionSpec())
    >>> len(inter.conflict_table.conflict_free)
    8
"""

import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, List, Optional, Set, Tuple

import numpy as np

from cxflow.common.constants import (
    CONFLICT_CLEARANCE,
    DEFAULT_VEHICLE_LENGTH,
    MIN_BOX_SIDE,
    MIN_INNER_PATH_LENGTH,
    PATH_SAMPLE_SPACING,
)
from cxflow.common.enums import Approach, Movement
from cxflow.common.exceptions import GeometryError
from cxflow.common.streams import StreamId, canonical_streams
from cxflow.common.types import Interval, PathKey
from cxflow.sim.models import IntersectionSpec, parse_pair

log = logging.getLogger(__name__)

ExitLink = Tuple[Approach, int]

_ENTRY = {
    Approach.N: (lambda o, h: (-o, h), (0.0, -1.0)),
    Approach.S: (lambda o, h: (o, -h), (0.0, 1.0)),
    Approach.E: (lambda o, h: (h, o), (-1.0, 0.0)),
    Approach.W: (lambda o, h: (-h, -o), (1.0, 0.0)),
}

_EXIT = {
    Approach.N: (lambda o, h: (o, h), (0.0, 1.0)),
    Approach.S: (lambda o, h: (-o, -h), (0.0, -1.0)),
    Approach.E: (lambda o, h: (h, -o), (1.0, 0.0)),
    Approach.W: (lambda o, h: (-h, o), (-1.0, 0.0)),
}


@dataclass
class InnerPath:
    """
    The route of one lane of one stream across the box.

    ``length`` is the declared path length in meters and is what vehicle positions are measured in; the sampled
    geometry is stretched onto it when an override length is configured.
    """

    stream: StreamId
    lane: int
    length: float
    points: np.ndarray
    arc: np.ndarray
    entry_xy: np.ndarray
    entry_heading: np.ndarray
    exit_xy: np.ndarray
    exit_heading: np.ndarray
    exit_link: ExitLink

    @property
    def key(self) -> PathKey:
        return (str(self.stream), self.lane)

    @property
    def geometric_length(self) -> float:
        return float(self.arc[-1])

    def point_at(self, s: float) -> np.ndarray:
        """2-D point at position s (meters along the declared length). Positions outside the box extrapolate."""
        if s <= 0:
            return self.entry_xy + s * self.entry_heading
        if s >= self.length:
            return self.exit_xy + (s - self.length) * self.exit_heading
        g = s * self.geometric_length / self.length
        return np.array(
            [np.interp(g, self.arc, self.points[:, 0]), np.interp(g, self.arc, self.points[:, 1])]
        )


@dataclass(frozen=True)
class ConflictZone:
    """One half of a conflict zone pair: the interval on the owning path and the matching one on the other path."""

    own: Interval
    other_key: PathKey
    other: Interval


@dataclass
class ConflictTable:
    """
    Stream level conflict relation over the active streams.

    Attributes:
        streams: active streams in canonical order.
        conflict_free: unordered pairs of distinct streams whose paths never come close.
        conflicting: the complement over distinct active streams.
    """

    streams: List[StreamId]
    conflict_free: FrozenSet[FrozenSet[StreamId]]
    conflicting: FrozenSet[FrozenSet[StreamId]]
    _partners: Dict[StreamId, FrozenSet[StreamId]] = field(default_factory=dict, repr=False)

    def __post_init__(self):
        partners: Dict[StreamId, Set[StreamId]] = {s: set() for s in self.streams}
        for pair in self.conflicting:
            a, b = tuple(pair)
            partners[a].add(b)
            partners[b].add(a)
        self._partners = {s: frozenset(p) for s, p in partners.items()}

    def conflicts(self, a: StreamId, b: StreamId) -> bool:
        return frozenset((a, b)) in self.conflicting

    def conflicting_with(self, stream: StreamId) -> FrozenSet[StreamId]:
        return self._partners.get(stream, frozenset())

    def pairwise_free(self, streams: Iterable[StreamId]) -> bool:
        """True when no two of the given streams conflict."""
        unique = sorted(set(streams), key=str)
        return not any(self.conflicts(a, b) for a, b in itertools.combinations(unique, 2))


class Intersection:
    """
    Built topology of one intersection: active streams, inner paths per lane, conflict zones and the conflict
    table. Created with :func:`build_intersection`; read-only afterwards.
    """

    def __init__(
        self,
        spec: IntersectionSpec,
        half_side: float,
        paths: Dict[PathKey, InnerPath],
        zones: Dict[PathKey, List[ConflictZone]],
        conflict_table: ConflictTable,
    ):
        self.spec = spec
        self.mode = spec.mode
        self.half_side = half_side
        self.paths = paths
        self.zones = zones
        self.conflict_table = conflict_table
        self.streams: List[StreamId] = list(conflict_table.streams)
        self.slots: Tuple[StreamId, ...] = canonical_streams(spec.mode)
        self.lanes: Dict[StreamId, int] = {s: spec.lanes(s) for s in self.streams}

    @property
    def directions(self) -> int:
        return len(self.slots)

    def path(self, stream: StreamId, lane: int) -> InnerPath:
        return self.paths[(str(stream), lane)]

    def stream_paths(self, stream: StreamId) -> List[InnerPath]:
        return [self.paths[(str(stream), k)] for k in range(self.lanes.get(stream, 0))]

    def zones_on(self, key: PathKey) -> List[ConflictZone]:
        return self.zones.get(key, [])

    def first_zone(self, key: PathKey) -> Optional[ConflictZone]:
        zones = self.zones.get(key)
        return zones[0] if zones else None

    def box_side(self) -> float:
        return 2 * self.half_side


def _box_half_side(spec: IntersectionSpec) -> float:
    if spec.box_side is not None:
        return spec.box_side / 2
    widest = max(2 * len(spec.inbound_lanes(a)) * spec.lane_width for a in spec.approaches)
    return max(widest, MIN_BOX_SIDE) / 2


def _sample(stream: StreamId, entry: np.ndarray, exit_: np.ndarray) -> np.ndarray:
    if stream.movement == Movement.C:
        return np.vstack([entry, exit_])
    if stream.approach in (Approach.N, Approach.S):
        centre = np.array([exit_[0], entry[1]])
    else:
        centre = np.array([entry[0], exit_[1]])
    theta = np.linspace(0.0, math.pi / 2, 721)[:, None]
    return centre + (entry - centre) * np.cos(theta) + (exit_ - centre) * np.sin(theta)


def _resample(raw: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    seg = np.linalg.norm(np.diff(raw, axis=0), axis=1)
    arc = np.concatenate([[0.0], np.cumsum(seg)])
    n = max(int(math.ceil(arc[-1] / PATH_SAMPLE_SPACING)), 2) + 1
    even = np.linspace(0.0, arc[-1], n)
    points = np.column_stack([np.interp(even, arc, raw[:, 0]), np.interp(even, arc, raw[:, 1])])
    return points, even


def _build_paths(spec: IntersectionSpec, h: float) -> Dict[PathKey, InnerPath]:
    w = spec.lane_width
    paths: Dict[PathKey, InnerPath] = {}
    for approach in spec.approaches:
        inbound = spec.inbound_lanes(approach)
        if (len(inbound) - 0.5) * w >= h:
            raise GeometryError(f"box_side {2 * h} is too narrow for {len(inbound)} inbound lanes on {approach.value}")
        seen: Dict[StreamId, int] = {}
        for position, stream in enumerate(inbound):
            lane = seen.get(stream, 0)
            seen[stream] = lane + 1
            entry_fn, entry_heading = _ENTRY[approach]
            exit_fn, exit_heading = _EXIT[stream.exit_arm]
            entry = np.array(entry_fn((position + 0.5) * w, h))
            exit_ = np.array(exit_fn((lane + 0.5) * w, h))
            points, arc = _resample(_sample(stream, entry, exit_))
            override = spec.inner_path_length.get(str(stream))
            length = float(override) if override is not None else float(arc[-1])
            if length < MIN_INNER_PATH_LENGTH:
                raise GeometryError(
                    f"inner_path_length.{stream} is {length:.2f} m, below {MIN_INNER_PATH_LENGTH} m; "
                    "increase box_side"
                )
            path = InnerPath(
                stream=stream,
                lane=lane,
                length=length,
                points=points,
                arc=arc,
                entry_xy=entry,
                entry_heading=np.array(entry_heading),
                exit_xy=exit_,
                exit_heading=np.array(exit_heading),
                exit_link=(stream.exit_arm, lane),
            )
            paths[path.key] = path
    return paths


def _derived_zone(a: InnerPath, b: InnerPath, half_length: float) -> Optional[Tuple[Interval, Interval]]:
    diff = a.points[:, None, :] - b.points[None, :, :]
    close = np.sqrt((diff**2).sum(axis=2)) < CONFLICT_CLEARANCE
    if not close.any():
        return None
    ia, ib = np.nonzero(close)
    scale_a = a.length / a.geometric_length
    scale_b = b.length / b.geometric_length
    own = (
        max(0.0, float(a.arc[ia.min()]) * scale_a - half_length),
        min(a.length, float(a.arc[ia.max()]) * scale_a + half_length),
    )
    other = (
        max(0.0, float(b.arc[ib.min()]) * scale_b - half_length),
        min(b.length, float(b.arc[ib.max()]) * scale_b + half_length),
    )
    return own, other


def build_intersection(spec: IntersectionSpec, vehicle_length: float = DEFAULT_VEHICLE_LENGTH) -> Intersection:
    """
    Builds paths, conflict zones and the conflict table for a spec.

    Args:
        spec: a validated intersection spec.
        vehicle_length: body length used to widen conflict zones.

    Returns:
        Intersection: the built topology.

    Raises:
        GeometryError: If the box cannot hold the configured lanes or a path comes out shorter than 10 m.
    """
    h = _box_half_side(spec)
    paths = _build_paths(spec, h)
    overrides = {tuple(parse_pair(k)): z for k, z in spec.conflict_zones.items()}

    zones: Dict[PathKey, List[ConflictZone]] = {key: [] for key in paths}
    conflicting: Set[FrozenSet[StreamId]] = set()
    for ka, kb in itertools.combinations(sorted(paths), 2):
        a, b = paths[ka], paths[kb]
        if a.stream == b.stream:
            continue
        override = overrides.get((a.stream, b.stream))
        if override is not None:
            pair = ((override.own_start, override.own_end), (override.other_start, override.other_end))
        elif (b.stream, a.stream) in overrides:
            mirror = overrides[(b.stream, a.stream)]
            pair = ((mirror.other_start, mirror.other_end), (mirror.own_start, mirror.own_end))
        else:
            pair = _derived_zone(a, b, vehicle_length / 2)
        if pair is None:
            continue
        own, other = pair
        zones[ka].append(ConflictZone(own=own, other_key=kb, other=other))
        zones[kb].append(ConflictZone(own=other, other_key=ka, other=own))
        conflicting.add(frozenset((a.stream, b.stream)))

    for key in zones:
        zones[key].sort(key=lambda z: (z.own[0], z.other_key))

    streams = spec.active_streams()
    conflict_free = frozenset(
        frozenset(pair)
        for pair in itertools.combinations(streams, 2)
        if frozenset(pair) not in conflicting
    )
    table = ConflictTable(streams=streams, conflict_free=conflict_free, conflicting=frozenset(conflicting))
    log.debug(
        f"built intersection with {len(streams)} streams, {len(paths)} paths, "
        f"{len(conflicting)} conflicting pairs, box side {2 * h:.1f} m"
    )
    return Intersection(spec, h, paths, zones, table)
