"""
V2V link construction, lossy delivery and aggregation of shared ego estimates.

Two link models are supported. Long range: any two participating RVs within ``long_range_radius`` of the
intersection centre reach each other in one hop. Short range: the RVs of one direction inside the control zone form a
cluster whose front-most member is the master; traffic between clusters is relayed master to master, and every hop
must be within ``hop_range``.

Example:
    >>> import numpy as np
    >>> msg = CommMessage(sender=1, stream="N-C", pos=10.0, ego_w=4.0, ego_l=2.0)
    >>> deliver([msg], {(1, 2): 1}, 0.0, np.random.default_rng(0))
    {2: [CommMessage(sender=1, stream='N-C', pos=10.0, ego_w=4.0, ego_l=2.0, hop_count=1)]}
"""

import logging
from dataclasses import dataclass
from typing import Dict, Iterable, List, Mapping, Optional, Sequence

import numpy as np

from cxflow.common.enums import Protocol, Zone
from cxflow.common.streams import StreamId, parse_stream
from cxflow.common.types import LinkMap, VehicleId
from cxflow.common.utils import mean_of
from cxflow.comms.models import CommConfig, CommMessage
from cxflow.perception.models import StreamStats
from cxflow.perception.observation import ego_estimates
from cxflow.sim.world import Vehicle, World, position_xy

log = logging.getLogger(__name__)


@dataclass
class ClusterView:
    """The RVs of one direction in the control zone, front-most first; the first one is the master node."""

    stream: StreamId
    members: List[VehicleId]

    @property
    def master(self) -> VehicleId:
        return self.members[0]


def participants(world: World, protocol: Protocol) -> List[Vehicle]:
    """Online RVs that take part in V2V sharing, in id order."""
    allowed = (Zone.UPSTREAM, Zone.CONTROL_ZONE) if protocol == Protocol.LONG_RANGE else (Zone.CONTROL_ZONE,)
    return [veh for veh in world.vehicles.values() if veh.controlled and veh.zone in allowed]


def clusters(world: World) -> Dict[StreamId, ClusterView]:
    """Short range clusters per direction."""
    grouped: Dict[StreamId, List[Vehicle]] = {}
    for veh in participants(world, Protocol.SHORT_RANGE):
        grouped.setdefault(veh.stream, []).append(veh)
    return {
        stream: ClusterView(stream, [v.id for v in sorted(members, key=lambda v: (-v.s, v.id))])
        for stream, members in grouped.items()
    }


def _distance(a: Vehicle, b: Vehicle, world: World) -> float:
    return float(np.linalg.norm(position_xy(a, world) - position_xy(b, world)))


def build_links(world: World, cfg: CommConfig) -> LinkMap:
    """
    Hop counts between every ordered pair of participating RVs that can reach each other.

    Returns:
        LinkMap: ``(sender, receiver) -> hops``; unreachable pairs are absent.
    """
    links: LinkMap = {}
    if cfg.protocol == Protocol.LONG_RANGE:
        nearby = [
            veh
            for veh in participants(world, Protocol.LONG_RANGE)
            if float(np.linalg.norm(position_xy(veh, world))) <= cfg.long_range_radius
        ]
        for sender in nearby:
            for receiver in nearby:
                if sender.id != receiver.id:
                    links[(sender.id, receiver.id)] = 1
        return links

    views = clusters(world)
    cluster_of = {vid: view for view in views.values() for vid in view.members}
    vehicles = world.vehicles
    for sender_id, sender_view in sorted(cluster_of.items()):
        for receiver_id, receiver_view in sorted(cluster_of.items()):
            if sender_id == receiver_id:
                continue
            chain = [sender_id]
            if sender_id != sender_view.master:
                chain.append(sender_view.master)
            if receiver_view.master != chain[-1]:
                chain.append(receiver_view.master)
            if receiver_id != chain[-1]:
                chain.append(receiver_id)
            hops = len(chain) - 1
            if hops > cfg.max_hops:
                continue
            if all(
                _distance(vehicles[a], vehicles[b], world) <= cfg.hop_range for a, b in zip(chain, chain[1:])
            ):
                links[(sender_id, receiver_id)] = hops
    return links


def build_messages(world: World) -> List[CommMessage]:
    """Ego estimates of every stopped online RV in the control zone, in id order."""
    messages = []
    for veh in world.vehicles.values():
        estimate = ego_estimates(veh)
        if estimate is not None:
            messages.append(
                CommMessage(sender=veh.id, stream=str(veh.stream), pos=veh.distance, ego_w=estimate.w, ego_l=estimate.l)
            )
    return sorted(messages, key=lambda m: m.sender)


def deliver(
    messages: Sequence[CommMessage], links: LinkMap, per: float, rng: np.random.Generator
) -> Dict[VehicleId, List[CommMessage]]:
    """
    Samples which messages reach which receivers.

    Every reachable (message, receiver) pair consumes exactly one uniform draw, senders in order and receivers by id,
    whatever the error rate, so changing the rate never shifts later draws.

    Args:
        messages: one message per sender.
        links: hop counts from :func:`build_links`.
        per: per hop packet error rate.
        rng: the ``comms`` substream.

    Returns:
        Dict[VehicleId, List[CommMessage]]: received messages per receiver, each stamped with its hop count.
    """
    if not 0.0 <= per <= 1.0:
        raise ValueError(f"per must be in [0, 1], got {per}")
    receivers_of: Dict[VehicleId, List[VehicleId]] = {}
    for sender, receiver in links:
        receivers_of.setdefault(sender, []).append(receiver)
    received: Dict[VehicleId, List[CommMessage]] = {}
    for message in sorted(messages, key=lambda m: m.sender):
        for receiver in sorted(receivers_of.get(message.sender, [])):
            hops = links[(message.sender, receiver)]
            if rng.random() < (1.0 - per) ** hops:
                received.setdefault(receiver, []).append(message._replace(hop_count=hops))
    return received


def aggregate_estimates(received: Iterable[CommMessage]) -> Dict[StreamId, StreamStats]:
    """
    Per-direction statistics from received ego estimates: the largest queue length and the mean waiting time.

    Directions without messages are absent and read as ``(0, 0)``.
    """
    lengths: Dict[StreamId, List[float]] = {}
    waits: Dict[StreamId, List[float]] = {}
    for message in received:
        stream = parse_stream(message.stream)
        lengths.setdefault(stream, []).append(message.ego_l)
        waits.setdefault(stream, []).append(message.ego_w)
    return {stream: StreamStats(max(lengths[stream]), mean_of(waits[stream])) for stream in lengths}


def share_estimates(
    world: World, cfg: CommConfig, rng: np.random.Generator, receivers: Optional[Iterable[VehicleId]] = None
) -> Dict[VehicleId, Dict[StreamId, StreamStats]]:
    """
    Runs one round of sharing and returns what every receiver knows. A receiver that is itself a sender always knows
    its own estimate.

    Args:
        world: the current world.
        cfg: network model.
        rng: the ``comms`` substream.
        receivers: vehicles to aggregate for, by default every participant.

    Returns:
        Dict[VehicleId, Dict[StreamId, StreamStats]]: aggregated statistics per receiver.
    """
    messages = build_messages(world)
    links = build_links(world, cfg)
    received = deliver(messages, links, cfg.per, rng)
    own: Mapping[VehicleId, CommMessage] = {m.sender: m for m in messages}
    targets = receivers if receivers is not None else [v.id for v in participants(world, cfg.protocol)]
    estimates = {}
    for vid in targets:
        inbox = list(received.get(vid, []))
        if vid in own:
            inbox.append(own[vid])
        estimates[vid] = aggregate_estimates(inbox)
    log.debug(f"shared {len(messages)} estimates over {len(links)} links")
    return estimates
