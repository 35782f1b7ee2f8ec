"""Per-slot UAV motion integration, eavesdropper path, and separation checks."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np


def normalize_heading(heading_rad: float) -> float:
    """Wrap an angle into (-pi, pi]."""
    h = math.atan2(math.sin(heading_rad), math.cos(heading_rad))
    if h <= -math.pi:
        h = math.pi
    return h


@dataclass(frozen=True)
class UavKinState:
    """Snapshot of one UAV at a slot boundary: position (m), speed (m/s),
    heading (rad, in (-pi, pi]), residual energy (J)."""

    position: np.ndarray
    speed: float
    heading: float
    energy_j: float


@dataclass(frozen=True)
class MotionOutcome:
    new_state: UavKinState
    implied_accel_mps2: float
    accel_violated: bool
    clamped: bool


def step_motion(state: UavKinState, cmd_speed: float, cmd_heading: float,
                slot_s: float, accel_min: float, accel_max: float,
                v_max: float) -> MotionOutcome:
    """Advance one UAV by one slot toward a commanded speed and azimuth.

    The implied acceleration (cmd_speed - speed)/dt is clamped into
    [accel_min, accel_max]; an out-of-range value raises the violation flag
    but never aborts the move. Displacement is speed*dt + 0.5*a*dt^2 along
    the commanded azimuth. Energy is not touched here.
    """
    if not 0.0 <= cmd_speed <= v_max:
        raise ValueError(f"commanded speed {cmd_speed} outside [0, {v_max}]")
    a_raw = (cmd_speed - state.speed) / slot_s
    violated = not accel_min <= a_raw <= accel_max
    a = min(max(a_raw, accel_min), accel_max)
    new_speed = state.speed + a * slot_s
    # Clamping only shrinks the move toward cmd_speed, so the bound holds;
    # guard against float rounding at the edges.
    new_speed = min(max(new_speed, 0.0), v_max)
    magnitude = state.speed * slot_s + 0.5 * a * slot_s * slot_s
    heading = normalize_heading(cmd_heading)
    direction = np.array([math.cos(heading), math.sin(heading)])
    new_state = replace(
        state,
        position=state.position + magnitude * direction,
        speed=new_speed,
        heading=heading,
    )
    return MotionOutcome(
        new_state=new_state,
        implied_accel_mps2=a_raw,
        accel_violated=violated,
        clamped=a != a_raw,
    )


def eavesdropper_position(slot: int, start, end, max_slots: int) -> np.ndarray:
    """Eavesdropper position at a slot: linear start-to-end traversal over the horizon."""
    if not 0 <= slot <= max_slots:
        raise ValueError(f"slot {slot} outside [0, {max_slots}]")
    frac = slot / max_slots
    start = np.asarray(start, dtype=float)
    end = np.asarray(end, dtype=float)
    return start + frac * (end - start)


def check_separation(positions, min_sep_m: float) -> list[tuple[int, int]]:
    """All unordered index pairs closer than the minimum separation."""
    violations = []
    n = len(positions)
    for i in range(n):
        for j in range(i + 1, n):
            dx = positions[i][0] - positions[j][0]
            dy = positions[i][1] - positions[j][1]
            if math.hypot(dx, dy) < min_sep_m:
                violations.append((i, j))
    return violations
