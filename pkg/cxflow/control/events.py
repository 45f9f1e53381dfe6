"""
Scripted robustness events: a signal blackout that hands control to a successor controller, and a sudden drop of the
RV rate that turns online RVs into human-behaved ones.
"""

import logging
from typing import TYPE_CHECKING, Optional

import numpy as np

from cxflow.common.enums import ControllerKind, EventKind, VehicleKind
from cxflow.common.exceptions import EventError
from cxflow.control.models import EventSpec

if TYPE_CHECKING:  # pragma: no cover
    from cxflow.control.env import IntersectionEnv

log = logging.getLogger(__name__)

RATE_TOLERANCE = 1e-12


def conversion_probability(current_rate: float, target_rate: float) -> float:
    """
    Probability that an RV goes offline when the RV rate drops from ``current_rate`` to ``target_rate``.

    Raises:
        EventError: If the target rate exceeds the current one.
    """
    if target_rate > current_rate + RATE_TOLERANCE:
        raise EventError(f"rv_drop cannot raise the RV rate from {current_rate} to {target_rate}")
    if current_rate <= 0:
        return 0.0
    return max(0.0, (current_rate - target_rate) / current_rate)


def apply_event(env: "IntersectionEnv", event: EventSpec, rng: np.random.Generator) -> Optional[str]:
    """
    Applies a scenario event to a running environment.

    A blackout switches the environment to the event's successor controller. An RV drop turns every existing online
    RV offline with probability ``(r0 - r1) / r0``, drawing in id order from ``rng``, and applies the same probability
    to every RV spawned later.

    Args:
        env: the environment, updated in place.
        event: the event to apply.
        rng: the ``events`` substream.

    Returns:
        Optional[str]: a description for the run log, or None when the event changed nothing.

    Raises:
        EventError: If an RV drop would raise the rate.
    """
    if event.kind == EventKind.BLACKOUT:
        previous = env.controller.kind
        if previous != ControllerKind.TL:
            log.warning(f"blackout at step {event.at_step} while running {previous.value}")
        env.switch_controller(event.successor)
        log.info(f"blackout at step {event.at_step}: {previous.value} -> {event.successor.value}")
        return f"blackout {previous.value}->{event.successor.value}"

    current = env.rv_rate
    probability = conversion_probability(current, event.target_rate)
    if probability == 0.0:
        log.info(f"rv_drop at step {event.at_step} keeps the rate at {current}")
        return None
    converted = 0
    for vid in sorted(env.world.vehicles):
        veh = env.world.vehicles[vid]
        if veh.kind != VehicleKind.RV or veh.offline:
            continue
        if rng.random() < probability:
            veh.offline = True
            veh.current_action = None
            converted += 1
    env.spawner.add_drop(probability)
    env.rv_rate = event.target_rate
    log.info(f"rv_drop at step {event.at_step}: {current} -> {event.target_rate}, {converted} RVs offline")
    return f"rv_drop {current}->{event.target_rate} converted {converted}"
