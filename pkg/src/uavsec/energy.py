"""Rotary-wing propulsion power, residual energy, and characteristic speeds."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

# Defaults follow the standard rotary-wing energy model for a small rotorcraft.
DEFAULT_P_BLADE_W = 79.86
DEFAULT_P_INDUCED_W = 88.63
DEFAULT_TIP_SPEED_MPS = 120.0
DEFAULT_HOVER_INDUCED_MPS = 4.03
DEFAULT_BODY_DRAG_RATIO = 0.6
DEFAULT_ROTOR_SOLIDITY = 0.05
DEFAULT_AIR_DENSITY = 1.225
DEFAULT_DISK_AREA_M2 = 0.503

# Upper bracket for the characteristic-speed searches (m/s). Twice the usual
# flight-speed cap; the power curve is strictly increasing well before this.
SPEED_SEARCH_MAX_MPS = 40.0

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class RotorcraftParams:
    """Constants of the propulsion power model. All strictly positive."""

    p_blade_w: float = DEFAULT_P_BLADE_W
    p_induced_w: float = DEFAULT_P_INDUCED_W
    tip_speed_mps: float = DEFAULT_TIP_SPEED_MPS
    hover_induced_mps: float = DEFAULT_HOVER_INDUCED_MPS
    body_drag_ratio: float = DEFAULT_BODY_DRAG_RATIO
    rotor_solidity: float = DEFAULT_ROTOR_SOLIDITY
    air_density_kg_m3: float = DEFAULT_AIR_DENSITY
    disk_area_m2: float = DEFAULT_DISK_AREA_M2

    def __post_init__(self):
        for name, value in vars(self).items():
            if not value > 0.0:
                raise ValueError(f"rotor parameter {name} must be positive, got {value}")

    @property
    def parasite_coeff(self) -> float:
        """Coefficient of the cubic parasite-drag term, 0.5*d0*rho*s*A."""
        return 0.5 * self.body_drag_ratio * self.air_density_kg_m3 \
            * self.rotor_solidity * self.disk_area_m2


def propulsion_power(v: float, rotor: RotorcraftParams) -> float:
    """Propulsion power in watts at horizontal speed v (m/s).

    Sum of blade-profile, induced, and parasite terms. At v=0 the parasite
    term vanishes and the result is exactly p_blade_w + p_induced_w.
    """
    if v < 0.0:
        raise ValueError(f"speed must be nonnegative, got {v}")
    v2 = v * v
    blade = rotor.p_blade_w * (1.0 + 3.0 * v2 / rotor.tip_speed_mps**2)
    v0_2 = rotor.hover_induced_mps**2
    induced = rotor.p_induced_w * math.sqrt(
        math.sqrt(1.0 + v2 * v2 / (4.0 * v0_2 * v0_2)) - v2 / (2.0 * v0_2)
    )
    parasite = rotor.parasite_coeff * v2 * v
    return blade + induced + parasite


def residual_energy(prev_j: float, v: float, slot_s: float, rotor: RotorcraftParams) -> float:
    """Energy left after flying one slot of slot_s seconds at speed v."""
    return prev_j - propulsion_power(v, rotor) * slot_s


def _golden_section_min(f, lo: float, hi: float, tol: float = 1e-3) -> float:
    """Golden-section minimizer for a unimodal f on [lo, hi]."""
    a, b = lo, hi
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


@lru_cache(maxsize=None)
def min_power_speed(rotor: RotorcraftParams) -> float:
    """Speed (m/s) minimizing propulsion power. ~10.2 m/s for the defaults."""
    return _golden_section_min(lambda v: propulsion_power(v, rotor), 0.0, SPEED_SEARCH_MAX_MPS)


@lru_cache(maxsize=None)
def max_range_speed(rotor: RotorcraftParams) -> float:
    """Speed (m/s) minimizing energy per meter, argmin P(v)/v. ~18.3 m/s for the defaults."""
    return _golden_section_min(
        lambda v: propulsion_power(v, rotor) / v, 1e-3, SPEED_SEARCH_MAX_MPS
    )


def adaptive_threshold(pos, endpoint, rotor: RotorcraftParams, e0_j: float) -> float:
    """Return-energy threshold: energy to fly home at the max-range speed plus a margin.

    Affine in the distance to the endpoint with slope P(v_mr)/v_mr.
    """
    dist = math.hypot(pos[0] - endpoint[0], pos[1] - endpoint[1])
    v_mr = max_range_speed(rotor)
    return propulsion_power(v_mr, rotor) * dist / v_mr + e0_j
