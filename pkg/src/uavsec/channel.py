"""Radio link math: probabilistic-LoS air-to-ground links, free-space air-to-air
links, interference-limited rates, and the secrecy rate."""

from __future__ import annotations

import math
from dataclasses import dataclass

SPEED_OF_LIGHT_MPS = 299_792_458.0


@dataclass(frozen=True)
class LinkBudget:
    """One air-to-ground link: 3D distance, LoS probability, mean loss, linear gain."""

    distance_3d_m: float
    p_los: float
    path_loss_db: float
    gain_linear: float


def los_probability(horizontal_dist_m: float, altitude_m: float,
                    eta_a: float, eta_b: float) -> float:
    """LoS probability of an air-to-ground link.

    Sigmoid in the elevation angle, which is evaluated in degrees; the
    eta_a/eta_b constants are calibrated for degrees.
    """
    if altitude_m <= 0.0:
        raise ValueError(f"altitude must be positive, got {altitude_m}")
    d = math.hypot(altitude_m, horizontal_dist_m)
    elev_deg = math.degrees(math.asin(altitude_m / d))
    return 1.0 / (1.0 + eta_a * math.exp(-eta_b * (elev_deg - eta_a)))


def free_space_loss_db(distance_m: float, carrier_hz: float) -> float:
    """Free-space path loss in dB: 20log10(d) + 20log10(f) + 20log10(4pi/c)."""
    return (20.0 * math.log10(distance_m) + 20.0 * math.log10(carrier_hz)
            + 20.0 * math.log10(4.0 * math.pi / SPEED_OF_LIGHT_MPS))


def a2g_gain(uav_pos, user_pos, altitude_m: float, carrier_hz: float,
             eta_a: float, eta_b: float, eta_los_db: float, eta_nlos_db: float) -> LinkBudget:
    """Mean air-to-ground link budget between a UAV and a ground user.

    The mean loss mixes the excess LoS/NLoS losses by the LoS probability on
    top of free-space loss at the 3D distance.
    """
    r = math.hypot(uav_pos[0] - user_pos[0], uav_pos[1] - user_pos[1])
    d = math.hypot(altitude_m, r)
    p_los = los_probability(r, altitude_m, eta_a, eta_b)
    loss_db = free_space_loss_db(d, carrier_hz) \
        + (eta_los_db - eta_nlos_db) * p_los + eta_nlos_db
    return LinkBudget(
        distance_3d_m=d,
        p_los=p_los,
        path_loss_db=loss_db,
        gain_linear=10.0 ** (-loss_db / 10.0),
    )


def a2a_gain(pos_a, pos_b, beta0_db: float) -> float:
    """Air-to-air channel gain, inverse-square from the 1 m reference gain.

    Both ends fly at the common altitude, so the distance is horizontal.
    """
    dist_sq = (pos_a[0] - pos_b[0]) ** 2 + (pos_a[1] - pos_b[1]) ** 2
    if dist_sq == 0.0:
        raise ValueError("coincident positions give an infinite air-to-air gain")
    return 10.0 ** (beta0_db / 10.0) / dist_sq


def sinr_rate(signal_w: float, interference_w: float, noise_w: float,
              bandwidth_hz: float) -> float:
    """Shannon rate in bits/s for a signal over noise plus interference."""
    return bandwidth_hz * math.log2(1.0 + signal_w / (noise_w + interference_w))


def user_rate(target_uav: int, tx_powers_w, jam_power_w: float,
              gains_to_target, jam_gain_to_target: float,
              noise_w: float, bandwidth_hz: float) -> float:
    """Downlink rate from one communication UAV to a user, in bits/s.

    All other communication UAVs plus the jammer count as interference.
    gains_to_target holds the per-communication-UAV linear gains to this user.
    """
    signal = tx_powers_w[target_uav] * gains_to_target[target_uav]
    interference = jam_power_w * jam_gain_to_target
    for i, (p, g) in enumerate(zip(tx_powers_w, gains_to_target)):
        if i != target_uav:
            interference += p * g
    return sinr_rate(signal, interference, noise_w, bandwidth_hz)


def eve_rate(target_uav: int, tx_powers_w, jam_power_w: float,
             gains_to_eve, jam_gain_to_eve: float,
             noise_w: float, bandwidth_hz: float) -> float:
    """Rate at which the eavesdropper overhears one communication UAV, in bits/s.

    Same structure as the user rate with the eavesdropper-side gains.
    """
    return user_rate(target_uav, tx_powers_w, jam_power_w, gains_to_eve,
                     jam_gain_to_eve, noise_w, bandwidth_hz)


def secrecy_rate(r_user: float, r_eve: float) -> float:
    """Secrecy rate [r_user - r_eve]^+ in bits/s."""
    if r_user < 0.0 or r_eve < 0.0:
        raise ValueError("rates must be nonnegative")
    return max(r_user - r_eve, 0.0)


def noise_power_w(noise_psd_dbm_hz: float, bandwidth_hz: float) -> float:
    """Total noise power in watts from a PSD in dBm/Hz and a bandwidth in Hz."""
    return 10.0 ** (noise_psd_dbm_hz / 10.0) * 1e-3 * bandwidth_hz
