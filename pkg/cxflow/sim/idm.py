"""
Car following laws used by every vehicle.

:func:`idm_accel` is the plain intelligent driver model. :func:`safe_speed_cap` bounds any proposed acceleration so
that the follower can still stop ``s0`` behind its leader when both brake as hard as they can from the next step on.
:func:`stopline_accel` treats a stop line as a standing obstacle placed ``s0`` past the line so the vehicle comes to
rest exactly on it.

Example:
    >>> from cxflow.sim.idm import idm_accel
    >>> from cxflow.sim.models import IdmParams
    >>> round(idm_accel(10.0, 20.0, 10.0, IdmParams()), 3)
    1.115
"""

import logging
import math
from typing import Optional

from cxflow.common.constants import DT
from cxflow.sim.models import IdmParams

log = logging.getLogger(__name__)

_BISECTION_STEPS = 60


def idm_accel(v: float, gap: Optional[float], leader_v: Optional[float], p: IdmParams) -> float:
    """
    Intelligent driver model acceleration.

    Args:
        v: follower speed, m/s.
        gap: bumper to bumper distance to the leader, m. ``None`` or ``math.inf`` for a free road.
        leader_v: leader speed, m/s. Ignored on a free road.
        p: model parameters.

    Returns:
        float: acceleration clamped to ``[-b_emergency, a_max]``. A non-positive gap returns ``-b_emergency``.
    """
    free_term = (v / p.v0) ** p.delta
    if gap is None or math.isinf(gap):
        return max(-p.b_emergency, min(p.a_max, p.a_max * (1.0 - free_term)))
    if gap <= 0:
        log.debug(f"idm called with non-positive gap {gap:.3f}, emergency braking")
        return -p.b_emergency
    lead = v if leader_v is None else leader_v
    s_star = p.s0 + max(0.0, v * p.T + v * (v - lead) / (2.0 * math.sqrt(p.a_max * p.b)))
    accel = p.a_max * (1.0 - free_term - (s_star / gap) ** 2)
    return max(-p.b_emergency, min(p.a_max, accel))


def equilibrium_gap(v: float, p: IdmParams) -> float:
    """Gap at which a follower travelling at the leader's constant speed v has zero acceleration."""
    s_star = p.s0 + v * p.T
    return s_star / math.sqrt(1.0 - (v / p.v0) ** p.delta)


def _braking_distance(u: float, b: float, dt: float) -> float:
    # distance covered from speed u when braking at b every step from the next one on, semi-implicit updates
    total = 0.0
    k = 1
    while u - k * b * dt > 0:
        total += (u - k * b * dt) * dt
        k += 1
    return total


def safe_speed_cap(
    proposed_a: float,
    v: float,
    gap: Optional[float],
    leader_v: Optional[float],
    p: IdmParams,
    dt: float = DT,
) -> float:
    """
    Caps a proposed acceleration so the follower keeps the standstill gap under worst-case braking.

    The next speed v' is admissible when, after moving ``v'·dt`` this step and braking at ``b_emergency`` from the
    next step on, the follower stops at least ``s0`` behind where the leader would stop if it too braked at
    ``b_emergency`` starting now. The largest admissible v' is found by bisection.

    Args:
        proposed_a: the acceleration the controller wants, m/s².
        v: follower speed, m/s.
        gap: bumper to bumper distance to the leader, m. ``None`` or ``math.inf`` disables the cap.
        leader_v: leader speed, m/s.
        p: model parameters.
        dt: step length, s.

    Returns:
        float: ``min(proposed_a, a_safe)``, never below ``-b_emergency``.
    """
    if gap is None or math.isinf(gap):
        return proposed_a
    b_e = p.b_emergency
    lead = 0.0 if leader_v is None else leader_v
    lead_next = max(0.0, lead - b_e * dt)
    room = gap - p.s0
    budget = room + lead_next * dt + _braking_distance(lead_next, b_e, dt)

    def admissible(u: float) -> bool:
        return u * dt <= room + lead_next * dt and u * dt + _braking_distance(u, b_e, dt) <= budget

    high = max(0.0, v + p.a_max * dt)
    if admissible(high):
        v_max = high
    elif not admissible(0.0):
        v_max = 0.0
    else:
        low = 0.0
        for _ in range(_BISECTION_STEPS):
            mid = 0.5 * (low + high)
            if admissible(mid):
                low = mid
            else:
                high = mid
        v_max = low
    a_safe = max(-b_e, (v_max - v) / dt)
    return max(-b_e, min(proposed_a, a_safe))


def stopline_accel(v: float, distance: float, p: IdmParams) -> float:
    """
    IDM braking towards a stop line ``distance`` meters ahead, modelled as a stopped obstacle ``s0`` beyond it.

    A vehicle already on or past the line gets the value for a zero distance, which holds a stopped vehicle at 0 and
    brakes a moving one.
    """
    return idm_accel(v, max(0.0, distance) + p.s0, 0.0, p)
