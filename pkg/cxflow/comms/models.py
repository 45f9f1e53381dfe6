from typing import NamedTuple

from pydantic import Field

from cxflow.common.constants import DEFAULT_HOP_RANGE, DEFAULT_LONG_RANGE_RADIUS, DEFAULT_MAX_HOPS
from cxflow.common.enums import Protocol
from cxflow.common.models import ConfigModel


class CommConfig(ConfigModel):
    """
    V2V network model.

    Attributes:
        protocol (Protocol): long range one hop, or short range clustered relaying.
        long_range_radius (float): vehicles within this distance of the intersection centre reach each other, m.
        hop_range (float): longest single short range hop, m.
        max_hops (int): longest relay chain.
        per (float): packet error rate of one hop.
    """

    protocol: Protocol = Protocol.LONG_RANGE
    long_range_radius: float = Field(DEFAULT_LONG_RANGE_RADIUS, gt=0)
    hop_range: float = Field(DEFAULT_HOP_RANGE, gt=0)
    max_hops: int = Field(DEFAULT_MAX_HOPS, ge=1)
    per: float = Field(0.0, ge=0, le=1)


class CommMessage(NamedTuple):
    """
    One shared ego estimate as seen by a receiver.

    ``hop_count`` is the relay chain length it travelled; a freshly built message carries 1.
    """

    sender: int
    stream: str
    pos: float
    ego_w: float
    ego_l: float
    hop_count: int = 1
