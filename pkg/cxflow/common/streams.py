"""
Traffic stream identifiers and their canonical ordering.

A stream is an (approach, movement) pair written as ``"E-L"``. Every per-direction array in cxflow (observation
slots, metric columns, priority tables) follows the canonical order returned by :func:`canonical_streams`.

Example:
    >>> from cxflow.common.enums import DirectionMode
    >>> from cxflow.common.streams import canonical_streams, parse_stream
    >>> [str(s) for s in canonical_streams(DirectionMode.EIGHT)][:2]
    ['E-L', 'E-C']
    >>> parse_stream("N-C").approach
    <Approach.N: 'N'>
"""

from dataclasses import dataclass
from typing import Dict, List, Tuple, Union

from cxflow.common.enums import Approach, DirectionMode, Movement


@dataclass(frozen=True)
class StreamId:
    """One traffic stream: the arm it arrives from and the turn it makes."""

    approach: Approach
    movement: Movement

    def __str__(self) -> str:
        return f"{self.approach.value}-{self.movement.value}"

    @property
    def label(self) -> str:
        return str(self)

    @property
    def exit_arm(self) -> Approach:
        """The arm this stream leaves the intersection on (right-hand traffic)."""
        return _EXIT_ARM[(self.approach, self.movement)]


_EXIT_ARM: Dict[Tuple[Approach, Movement], Approach] = {
    (Approach.N, Movement.C): Approach.S,
    (Approach.N, Movement.L): Approach.E,
    (Approach.N, Movement.R): Approach.W,
    (Approach.S, Movement.C): Approach.N,
    (Approach.S, Movement.L): Approach.W,
    (Approach.S, Movement.R): Approach.E,
    (Approach.E, Movement.C): Approach.W,
    (Approach.E, Movement.L): Approach.S,
    (Approach.E, Movement.R): Approach.N,
    (Approach.W, Movement.C): Approach.E,
    (Approach.W, Movement.L): Approach.N,
    (Approach.W, Movement.R): Approach.S,
}

_APPROACH_ORDER = (Approach.E, Approach.W, Approach.N, Approach.S)

_EIGHT = tuple(
    StreamId(approach, movement)
    for approach in _APPROACH_ORDER
    for movement in (Movement.L, Movement.C)
)
# right turns go after the eight base slots so the first eight positions mean the same in both modes
_TWELVE = _EIGHT + tuple(StreamId(approach, Movement.R) for approach in _APPROACH_ORDER)


def canonical_streams(mode: DirectionMode) -> Tuple[StreamId, ...]:
    """
    Returns every stream slot of a mode in canonical order.

    Args:
        mode: the direction mode.

    Returns:
        Tuple[StreamId, ...]: 8 or 12 streams.
    """
    return _EIGHT if mode == DirectionMode.EIGHT else _TWELVE


def slot_index(mode: DirectionMode) -> Dict[StreamId, int]:
    return {stream: i for i, stream in enumerate(canonical_streams(mode))}


def parse_stream(value: Union[str, StreamId]) -> StreamId:
    """
    Parses a stream label like ``"W-C"``.

    Raises:
        ValueError: If the label is not ``<approach>-<movement>``.
    """
    if isinstance(value, StreamId):
        return value
    text = str(value).strip().upper()
    parts = text.split("-")
    if len(parts) != 2:
        raise ValueError(f"invalid stream '{value}', expected e.g. 'E-L'")
    try:
        return StreamId(Approach(parts[0]), Movement(parts[1]))
    except ValueError:
        raise ValueError(f"invalid stream '{value}', expected e.g. 'E-L'") from None


def stream_labels(streams: List[StreamId]) -> List[str]:
    return [str(s) for s in streams]
