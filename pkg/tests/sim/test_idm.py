import math

import pytest

from cxflow.sim.idm import equilibrium_gap, idm_accel, safe_speed_cap, stopline_accel
from cxflow.sim.models import IdmParams

# ==================== Car following ====================


def test_idm_reference_value(idm):
    """Hand-evaluated IDM at v = 10, gap = 20, equal speeds."""
    assert idm_accel(10.0, 20.0, 10.0, idm) == pytest.approx(1.115, abs=1e-3)


def test_free_road_from_rest(idm):
    assert idm_accel(0.0, None, None, idm) == idm.a_max
    assert idm_accel(0.0, math.inf, 5.0, idm) == idm.a_max


def test_free_road_at_desired_speed(idm):
    assert idm_accel(idm.v0, None, None, idm) == pytest.approx(0.0, abs=1e-12)


def test_non_positive_gap_brakes_hard(idm):
    assert idm_accel(5.0, 0.0, 0.0, idm) == -idm.b_emergency
    assert idm_accel(5.0, -1.0, 0.0, idm) == -idm.b_emergency


def test_equilibrium_gap_gives_zero_accel(idm):
    v = 8.0
    assert idm_accel(v, equilibrium_gap(v, idm), v, idm) == pytest.approx(0.0, abs=1e-9)


def test_accel_clamped(idm):
    """Closing fast on a near leader never exceeds emergency braking."""
    assert idm_accel(idm.v0, 1.0, 0.0, idm) == -idm.b_emergency


def test_follower_settles_at_equilibrium_gap(idm):
    """Behind a leader cruising at 10 m/s the follower converges to s*(10) within 300 s."""
    v, gap, leader_v = 5.0, 30.0, 10.0
    for _ in range(300):
        a = safe_speed_cap(idm_accel(v, gap, leader_v, idm), v, gap, leader_v, idm)
        v = max(0.0, v + a)
        gap += leader_v - v
    assert equilibrium_gap(leader_v, idm) == pytest.approx(12.8627, abs=1e-3)
    assert gap == pytest.approx(equilibrium_gap(leader_v, idm), abs=1e-3)
    assert v == pytest.approx(leader_v, abs=1e-3)


# ==================== Safety cap and stop lines ====================


def test_safe_cap_without_leader_passes_through(idm):
    assert safe_speed_cap(1.7, 10.0, None, None, idm) == 1.7


def test_safe_cap_keeps_stopping_distance(idm):
    """Behind a stopped leader the capped speed still allows stopping s0 short of its rear."""
    gap, v = 12.0, 10.0
    a = safe_speed_cap(idm.a_max, v, gap, 0.0, idm)
    v_next = max(0.0, v + a)
    travelled = v_next
    u = v_next
    while u - idm.b_emergency > 0:
        u -= idm.b_emergency
        travelled += u
    assert travelled <= gap - idm.s0 + 1e-6


def test_safe_cap_never_below_emergency(idm):
    assert safe_speed_cap(-100.0, 10.0, 0.5, 0.0, idm) == -idm.b_emergency


def test_safe_cap_holds_inside_standstill_gap(idm):
    """A still follower already closer than s0 to a stopped leader may not creep forward."""
    assert safe_speed_cap(idm.a_max, 0.0, 0.8 * idm.s0, 0.0, idm) == 0.0
    assert safe_speed_cap(idm.a_max, 0.0, idm.s0 + 0.5, 0.0, idm) == pytest.approx(0.5)


def test_stopline_holds_stopped_vehicle(idm):
    """A still vehicle on the line gets zero acceleration."""
    assert stopline_accel(0.0, 0.0, idm) == pytest.approx(0.0, abs=1e-12)


def test_stopline_brakes_moving_vehicle(idm):
    assert stopline_accel(10.0, 5.0, idm) < 0


# ==================== Parameters ====================


def test_footprint_must_match_queue_slot():
    """Vehicle length plus standstill gap is the 5 m queue slot."""
    with pytest.raises(ValueError, match="must equal 5.0"):
        IdmParams(vehicle_length=5.0)


def test_emergency_below_comfort_rejected():
    with pytest.raises(ValueError, match="b_emergency"):
        IdmParams(b_emergency=1.0)
