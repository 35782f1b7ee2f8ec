"""Scenario configuration: parameter table, defaults, validation, user placement.

The configuration document is JSON with a top-level ``schema_version`` key.
Every key is optional; absent keys fall back to the defaults below, which
reproduce the reference scenario (two communication UAVs, one jammer, one
moving eavesdropper, ten users). See README for the full schema.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field, asdict

import numpy as np

from .energy import RotorcraftParams, min_power_speed, propulsion_power

SCHEMA_VERSION = 1

MODE_SCTPD = "SCTPD"   # fair scheduling, jammer present
MODE_BEN1 = "BEN1"     # fairness-blind scheduling, jammer present
MODE_BEN2 = "BEN2"     # fair scheduling, no jammer
MODES = (MODE_SCTPD, MODE_BEN1, MODE_BEN2)

MIN_USER_SPACING_M = 1.0
_PLACEMENT_TRIES_PER_USER = 10_000


class ConfigError(ValueError):
    """Invalid or unparsable configuration document."""


@dataclass(frozen=True)
class RewardWeights:
    """Reward-term scale constants. kappa_th must exceed kappa_nth so the
    secrecy reward shrinks once a UAV has to head home; the penalty weights
    are nonpositive."""

    kappa_ec: float = 0.001
    kappa_rd1: float = 1.0
    kappa_rd2: float = 10.0
    kappa_rd3: float = 0.05
    kappa_ar: float = 100.0
    kappa_nar: float = -100.0
    kappa_th: float = 25.0
    kappa_nth: float = 1.0
    kappa_a: float = -5.0
    kappa_l: float = -10.0


@dataclass(frozen=True)
class StartEndPositions:
    """Start/end waypoints (meters). Communication UAVs and the jammer park
    where they started; the eavesdropper sweeps start to end."""

    comm: tuple = (((200.0, 0.0), (200.0, 0.0)), ((300.0, 0.0), (300.0, 0.0)))
    jammer: tuple = ((250.0, 250.0), (250.0, 250.0))
    eve: tuple = ((0.0, 300.0), (510.0, 300.0))


@dataclass(frozen=True)
class TrainParams:
    """MADDPG hyperparameters and run-length knobs."""

    episodes: int = 1500
    gamma: float = 0.9
    actor_lr: float = 0.001
    critic_lr: float = 0.001
    tau: float = 0.01
    batch_size: int = 512
    buffer_capacity: int = 40_000
    noise_std: float = 0.1
    hidden_dims: tuple = (256, 128, 64)
    expand_width: int = 2
    update_every: int = 1
    checkpoint_interval: int = 500


@dataclass(frozen=True)
class SimConfig:
    m_comm_uavs: int = 2
    k_users: int = 10
    altitude_m: float = 70.0
    slot_s: float = 1.0
    max_speed_mps: float = 20.0
    accel_min_mps2: float = -5.0
    accel_max_mps2: float = 5.0
    p_comm_max_w: float = 1.0
    p_jam_max_w: float = 0.3
    min_sep_m: float = 50.0
    e_max_j: float = 13_000.0
    e0_compensation_j: float = 200.0
    fairness_target: float = 0.95
    decay_kgp: float = 0.1
    r_max_threshold: float = 150.0        # megabits of cumulative secrecy throughput
    bandwidth_hz: float = 1e6
    noise_psd_dbm_hz: float = -170.0
    beta0_db: float = -50.0
    carrier_hz: float = 2e9
    eta_a: float = 12.08
    eta_b: float = 0.11
    eta_los_db: float = 1.6
    eta_nlos_db: float = 23.0
    arrival_radius_m: float = 10.0
    start_end_positions: StartEndPositions = field(default_factory=StartEndPositions)
    reward_weights: RewardWeights = field(default_factory=RewardWeights)
    mode: str = MODE_SCTPD
    seed: int = 0
    max_slots: int = 0                    # 0 = derive from the energy budget
    rotor: RotorcraftParams = field(default_factory=RotorcraftParams)
    user_area: tuple = ((0.0, 0.0), (500.0, 300.0))
    user_positions: tuple = ()            # optional literal layout override
    train: TrainParams = field(default_factory=TrainParams)

    @property
    def has_jammer(self) -> bool:
        return self.mode != MODE_BEN2

    @property
    def n_agents(self) -> int:
        return self.m_comm_uavs + (1 if self.has_jammer else 0)

    @property
    def noise_w(self) -> float:
        return 10.0 ** (self.noise_psd_dbm_hz / 10.0) * 1e-3 * self.bandwidth_hz

    def arena_diagonal_m(self) -> float:
        """Diagonal of the bounding box of the user area and all waypoints;
        the observation length scale."""
        pts = [self.user_area[0], self.user_area[1]]
        for start, end in self.start_end_positions.comm:
            pts += [start, end]
        pts += list(self.start_end_positions.jammer)
        pts += list(self.start_end_positions.eve)
        arr = np.asarray(pts, dtype=float)
        span = arr.max(axis=0) - arr.min(axis=0)
        return float(np.hypot(span[0], span[1]))


@dataclass(frozen=True)
class UserLayout:
    positions: tuple   # K (x, y) pairs, meters

    def as_array(self) -> np.ndarray:
        return np.asarray(self.positions, dtype=float)


def default_max_slots(cfg: SimConfig) -> int:
    """Horizon long enough to outlast the battery at the most frugal speed."""
    v_mp = min_power_speed(cfg.rotor)
    per_slot = propulsion_power(v_mp, cfg.rotor) * cfg.slot_s
    return math.ceil(cfg.e_max_j / per_slot) + 20


def _positive(cfg: SimConfig, name: str) -> None:
    if not getattr(cfg, name) > 0:
        raise ConfigError(f"{name} must be positive, got {getattr(cfg, name)}")


def validate(cfg: SimConfig) -> SimConfig:
    """Check every invariant; returns cfg (with max_slots derived if unset)."""
    if cfg.m_comm_uavs < 1:
        raise ConfigError(f"m_comm_uavs must be >= 1, got {cfg.m_comm_uavs}")
    if cfg.k_users < cfg.m_comm_uavs:
        raise ConfigError(
            f"k_users ({cfg.k_users}) must be >= m_comm_uavs ({cfg.m_comm_uavs})")
    for name in ("altitude_m", "slot_s", "max_speed_mps", "p_comm_max_w",
                 "p_jam_max_w", "min_sep_m", "e_max_j", "bandwidth_hz",
                 "carrier_hz", "decay_kgp", "r_max_threshold", "arrival_radius_m"):
        _positive(cfg, name)
    if not cfg.accel_min_mps2 < 0.0 < cfg.accel_max_mps2:
        raise ConfigError(
            f"need accel_min_mps2 < 0 < accel_max_mps2, got "
            f"accel_min_mps2={cfg.accel_min_mps2}, accel_max_mps2={cfg.accel_max_mps2}")
    if not 0.0 < cfg.fairness_target <= 1.0:
        raise ConfigError(f"fairness_target must be in (0, 1], got {cfg.fairness_target}")
    if cfg.e0_compensation_j < 0.0:
        raise ConfigError(f"e0_compensation_j must be >= 0, got {cfg.e0_compensation_j}")
    w = cfg.reward_weights
    if not w.kappa_th > w.kappa_nth:
        raise ConfigError(
            f"kappa_th ({w.kappa_th}) must exceed kappa_nth ({w.kappa_nth})")
    for name in ("kappa_nar", "kappa_a", "kappa_l"):
        if getattr(w, name) > 0.0:
            raise ConfigError(f"{name} must be <= 0, got {getattr(w, name)}")
    if cfg.mode not in MODES:
        raise ConfigError(f"mode must be one of {MODES}, got {cfg.mode!r}")
    if len(cfg.start_end_positions.comm) != cfg.m_comm_uavs:
        raise ConfigError(
            f"start_end_positions.comm has {len(cfg.start_end_positions.comm)} "
            f"entries for {cfg.m_comm_uavs} communication UAVs")
    (xmin, ymin), (xmax, ymax) = cfg.user_area
    if not (xmax > xmin and ymax > ymin):
        raise ConfigError(f"user_area is degenerate: {cfg.user_area}")
    if cfg.user_positions and len(cfg.user_positions) != cfg.k_users:
        raise ConfigError(
            f"user_positions has {len(cfg.user_positions)} entries for "
            f"{cfg.k_users} users")
    if cfg.max_slots < 0:
        raise ConfigError(f"max_slots must be >= 0, got {cfg.max_slots}")
    if cfg.max_slots == 0:
        cfg = replace_fields(cfg, max_slots=default_max_slots(cfg))
    return cfg


def replace_fields(cfg: SimConfig, **changes) -> SimConfig:
    from dataclasses import replace
    return replace(cfg, **changes)


# -- document <-> SimConfig -------------------------------------------------

def _tuplify(obj):
    if isinstance(obj, (list, tuple)):
        return tuple(_tuplify(x) for x in obj)
    return obj


def _build(section: dict, cls, label: str):
    known = {f for f in cls.__dataclass_fields__}
    extra = set(section) - known
    if extra:
        raise ConfigError(f"unknown {label} keys: {sorted(extra)}")
    try:
        return cls(**{k: _tuplify(v) for k, v in section.items()})
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad {label} section: {exc}") from exc


def config_from_dict(doc: dict) -> SimConfig:
    """Build and validate a SimConfig from a parsed document."""
    doc = dict(doc)
    version = doc.pop("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise ConfigError(f"unsupported schema_version {version}")
    nested = {
        "rotor": RotorcraftParams,
        "reward_weights": RewardWeights,
        "start_end_positions": StartEndPositions,
        "train": TrainParams,
    }
    kwargs = {}
    for key, value in doc.items():
        if key in nested:
            if not isinstance(value, dict):
                raise ConfigError(f"{key} must be a mapping")
            kwargs[key] = _build(value, nested[key], key)
        elif key in SimConfig.__dataclass_fields__:
            kwargs[key] = _tuplify(value)
        else:
            raise ConfigError(f"unknown config key: {key}")
    try:
        cfg = SimConfig(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    return validate(cfg)


def _listify(obj):
    if isinstance(obj, (list, tuple)):
        return [_listify(x) for x in obj]
    if isinstance(obj, dict):
        return {k: _listify(v) for k, v in obj.items()}
    return obj


def config_to_dict(cfg: SimConfig) -> dict:
    """JSON-native document, round-trip stable through config_from_dict."""
    doc = _listify(asdict(cfg))
    doc["schema_version"] = SCHEMA_VERSION
    return doc


def load_config(source: str) -> SimConfig:
    """Parse a JSON document (text) into a validated SimConfig."""
    try:
        doc = json.loads(source)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config does not parse as JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError("config document must be a JSON object")
    return config_from_dict(doc)


def load_config_file(path) -> SimConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return load_config(fh.read())


def serialize(cfg: SimConfig) -> str:
    return json.dumps(config_to_dict(cfg), indent=2, sort_keys=True)


def config_hash(cfg: SimConfig) -> str:
    """Content hash of the canonical serialized config."""
    canon = json.dumps(config_to_dict(cfg), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()


def apply_overrides(doc: dict, overrides: list[str]) -> dict:
    """Apply repeated --set KEY=VALUE pairs onto a raw document.

    Keys may be dotted paths into nested sections (e.g. rotor.p_blade_w,
    train.episodes). Values parse as JSON, falling back to a bare string.
    """
    doc = json.loads(json.dumps(doc))  # deep copy, keeps plain types
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        key, _, raw = item.partition("=")
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        node = doc
        parts = key.split(".")
        for part in parts[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise ConfigError(f"cannot descend into non-mapping key {part!r}")
        node[parts[-1]] = value
    return doc


# -- user placement ----------------------------------------------------------

def place_users(cfg: SimConfig, seed: int | None = None) -> UserLayout:
    """K user positions, uniform in the user area with >= 1 m pairwise spacing.

    Deterministic under the seed (cfg.seed unless overridden). A literal
    user_positions list in the config pins the layout instead.
    """
    if cfg.user_positions:
        pts = np.asarray(cfg.user_positions, dtype=float)
        _check_layout(pts, cfg)
        return UserLayout(positions=_tuplify(pts.tolist()))
    (xmin, ymin), (xmax, ymax) = cfg.user_area
    rng = np.random.default_rng([cfg.seed if seed is None else seed, 0x75])
    placed: list[np.ndarray] = []
    budget = _PLACEMENT_TRIES_PER_USER * cfg.k_users
    while len(placed) < cfg.k_users:
        if budget <= 0:
            raise ConfigError(
                f"could not place {cfg.k_users} users >= {MIN_USER_SPACING_M} m "
                f"apart in area {cfg.user_area}")
        budget -= 1
        cand = rng.uniform((xmin, ymin), (xmax, ymax))
        if all(np.hypot(*(cand - p)) >= MIN_USER_SPACING_M for p in placed):
            placed.append(cand)
    return UserLayout(positions=_tuplify([p.tolist() for p in placed]))


def _check_layout(pts: np.ndarray, cfg: SimConfig) -> None:
    (xmin, ymin), (xmax, ymax) = cfg.user_area
    if np.any(pts[:, 0] < xmin) or np.any(pts[:, 0] > xmax) \
            or np.any(pts[:, 1] < ymin) or np.any(pts[:, 1] > ymax):
        raise ConfigError("user_positions outside user_area")
    for i in range(len(pts)):
        for j in range(i + 1, len(pts)):
            if np.allclose(pts[i], pts[j]):
                raise ConfigError(f"users {i} and {j} are coincident")
