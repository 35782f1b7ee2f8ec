import math

import numpy as np
import pytest

from uavsec.kinematics import (UavKinState, check_separation,
                               eavesdropper_position, normalize_heading,
                               step_motion)

V_MAX = 20.0
A_MIN, A_MAX = -5.0, 5.0


def make_state(pos=(0.0, 0.0), speed=0.0, heading=0.0, energy=13000.0):
    return UavKinState(position=np.array(pos, dtype=float), speed=speed,
                       heading=heading, energy_j=energy)


def step(state, cmd_speed, cmd_heading, dt=1.0):
    return step_motion(state, cmd_speed, cmd_heading, dt, A_MIN, A_MAX, V_MAX)


def test_constant_speed_straight_line():
    out = step(make_state(speed=10.0), 10.0, 0.0)
    assert out.implied_accel_mps2 == 0.0
    assert not out.accel_violated
    assert not out.clamped
    np.testing.assert_allclose(out.new_state.position, [10.0, 0.0])
    assert out.new_state.speed == 10.0


def test_acceleration_clamped_and_flagged():
    out = step(make_state(speed=0.0), 20.0, 0.0)
    assert out.implied_accel_mps2 == 20.0
    assert out.accel_violated
    assert out.clamped
    assert out.new_state.speed == 5.0
    np.testing.assert_allclose(out.new_state.position, [2.5, 0.0])


def test_deceleration_at_limit_not_flagged():
    out = step(make_state(speed=10.0), 5.0, 0.0)
    assert out.implied_accel_mps2 == -5.0
    assert not out.accel_violated
    assert out.new_state.speed == 5.0
    np.testing.assert_allclose(out.new_state.position, [7.5, 0.0])


def test_displacement_along_commanded_azimuth():
    out = step(make_state(speed=8.0, heading=0.0), 8.0, math.pi / 2)
    np.testing.assert_allclose(out.new_state.position, [0.0, 8.0], atol=1e-12)
    assert out.new_state.heading == pytest.approx(math.pi / 2)


def test_energy_untouched_by_motion():
    out = step(make_state(speed=3.0, energy=5000.0), 6.0, 1.0)
    assert out.new_state.energy_j == 5000.0


def test_cmd_speed_out_of_range_is_callers_bug():
    with pytest.raises(ValueError):
        step(make_state(), V_MAX + 0.1, 0.0)
    with pytest.raises(ValueError):
        step(make_state(), -0.1, 0.0)


def test_speed_stays_in_bounds_randomized():
    rng = np.random.default_rng(42)
    state = make_state()
    for _ in range(500):
        cmd_v = rng.uniform(0, V_MAX)
        cmd_h = rng.uniform(-math.pi, math.pi)
        out = step(state, cmd_v, cmd_h)
        assert 0.0 <= out.new_state.speed <= V_MAX
        disp = np.linalg.norm(out.new_state.position - state.position)
        assert disp <= V_MAX * 1.0 + 0.5 * A_MAX * 1.0 + 1e-9
        assert -math.pi < out.new_state.heading <= math.pi
        state = out.new_state


def test_heading_normalization():
    assert normalize_heading(0.0) == 0.0
    assert normalize_heading(3 * math.pi) == pytest.approx(math.pi)
    assert normalize_heading(-math.pi) == pytest.approx(math.pi)
    assert normalize_heading(math.pi / 3) == pytest.approx(math.pi / 3)


def test_eavesdropper_endpoints_and_midpoint():
    start, end = (0.0, 300.0), (510.0, 300.0)
    np.testing.assert_allclose(eavesdropper_position(0, start, end, 124), [0, 300])
    np.testing.assert_allclose(eavesdropper_position(124, start, end, 124), [510, 300])
    np.testing.assert_allclose(eavesdropper_position(62, start, end, 124), [255, 300])


def test_eavesdropper_path_collinear():
    start, end = np.array([13.0, -7.0]), np.array([400.0, 250.0])
    line = end - start
    for n in range(0, 101):
        p = eavesdropper_position(n, start, end, 100)
        cross = line[0] * (p[1] - start[1]) - line[1] * (p[0] - start[0])
        assert abs(cross) < 1e-9 * np.linalg.norm(line) ** 2


def test_eavesdropper_slot_bounds():
    with pytest.raises(ValueError):
        eavesdropper_position(-1, (0, 0), (1, 1), 10)
    with pytest.raises(ValueError):
        eavesdropper_position(11, (0, 0), (1, 1), 10)


def test_separation_simple_cases():
    assert check_separation([(0, 0), (60, 0)], 50.0) == []
    assert check_separation([(0, 0), (49, 0)], 50.0) == [(0, 1)]
    tri = [(0, 0), (10, 0), (5, 8.66)]
    assert len(check_separation(tri, 50.0)) == 3


def test_separation_matches_brute_force():
    rng = np.random.default_rng(3)
    pts = rng.uniform(0, 200, size=(8, 2))
    expected = [(i, j) for i in range(8) for j in range(i + 1, 8)
                if np.linalg.norm(pts[i] - pts[j]) < 80.0]
    assert check_separation(pts, 80.0) == expected
