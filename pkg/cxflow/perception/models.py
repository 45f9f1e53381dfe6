import math
from dataclasses import dataclass
from typing import NamedTuple, Tuple

import numpy as np

from cxflow.common.constants import OCCUPANCY_SEGMENTS, V_LEN, W_MAX
from cxflow.common.enums import DirectionMode


class StreamStats(NamedTuple):
    """Queue length (vehicles) and mean waiting time (s) of one direction."""

    l: float = 0.0  # noqa: E741
    w: float = 0.0


EMPTY_STATS = StreamStats(0.0, 0.0)
EMPTY_OCCUPANCY: Tuple[int, ...] = (0,) * OCCUPANCY_SEGMENTS


def queue_capacity(lanes: int, radius: float) -> float:
    """Vehicles that fit in the control zone of a direction."""
    return lanes * math.floor(radius / V_LEN)


@dataclass(frozen=True)
class Observation:
    """
    What one robot vehicle sees when it decides.

    Attributes:
        mode (DirectionMode): fixes the number of directions J.
        stats (Tuple[StreamStats, ...]): per direction in canonical order, zero for absent directions.
        occupancy (Tuple[Tuple[int, ...], ...]): per direction, 10 interior segment flags.
        d (float): the ego's distance to the entrance, m.
        lanes (Tuple[int, ...]): lanes per direction, 0 for absent ones.
        radius (float): control zone radius, m.
    """

    mode: DirectionMode
    stats: Tuple[StreamStats, ...]
    occupancy: Tuple[Tuple[int, ...], ...]
    d: float
    lanes: Tuple[int, ...]
    radius: float

    @staticmethod
    def length(mode: DirectionMode) -> int:
        """Encoded width, 12 J + 1."""
        return (2 + OCCUPANCY_SEGMENTS) * mode.directions + 1

    def to_vector(self) -> np.ndarray:
        """
        Scaled network input: every direction's ``(l / l_cap, w / 200)``, then every occupancy map, then ``d / R``.

        Returns:
            np.ndarray: float64 vector of length :meth:`length`.
        """
        scaled = []
        for stats, lanes in zip(self.stats, self.lanes):
            cap = queue_capacity(lanes, self.radius)
            scaled.append(stats.l / cap if cap > 0 else 0.0)
            scaled.append(stats.w / W_MAX)
        flags = [float(f) for occ in self.occupancy for f in occ]
        return np.asarray(scaled + flags + [self.d / self.radius], dtype=np.float64)
