"""Per-slot simulation of the secure multi-UAV downlink.

Composes kinematics, channel, energy, and fairness into a multi-agent
environment: each communication UAV and the jammer (when present) supplies a
raw action triple per slot and receives an observation vector and a scalar
reward. Everything is deterministic given the configuration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import channel, kinematics
from .clustering import ClusterAssignment
from .config import MODE_BEN1, SimConfig, UserLayout
from .energy import (adaptive_threshold, max_range_speed, propulsion_power)
from .fairness import ThroughputLedger, instantaneous_fst, schedule

ROLE_COMM = "comm"
ROLE_JAMMER = "jammer"


@dataclass(frozen=True)
class Observation:
    """Normalized per-agent view: positions of every UAV and the eavesdropper,
    (communication UAVs only) own-cluster cumulative throughputs, then
    distance to endpoint, speed, and residual energy."""

    values: np.ndarray
    role: str
    agent: int


@dataclass(frozen=True)
class ActionTriple:
    """Raw network output in [-1, 1]^3 and its physical mapping."""

    raw: np.ndarray
    speed_mps: float
    azimuth_rad: float
    power_w: float


def map_action(raw, v_max: float, p_max: float) -> ActionTriple:
    """Affine map from [-1, 1]^3 to speed [0, v_max], azimuth (-pi, pi],
    and transmit power [0, p_max]."""
    raw = np.clip(np.asarray(raw, dtype=float), -1.0, 1.0)
    return ActionTriple(
        raw=raw,
        speed_mps=0.5 * (raw[0] + 1.0) * v_max,
        azimuth_rad=kinematics.normalize_heading(0.5 * (raw[1] + 1.0) * 2.0 * math.pi - math.pi),
        power_w=0.5 * (raw[2] + 1.0) * p_max,
    )


@dataclass
class SlotMetrics:
    slot: int
    positions: np.ndarray        # (A, 2) controllable UAVs after the move
    eve_pos: np.ndarray
    speeds: np.ndarray           # (A,)
    powers_w: np.ndarray         # (A,)
    energies_j: np.ndarray       # (A,)
    selections: list             # per cluster, scheduled user id
    selected_rates_bps: list     # per cluster, that user's secrecy rate
    r_ins_bits: float            # reward-facing fair secrecy throughput
    fst_bits: float              # true-factor fair secrecy throughput
    st_bits: float               # unweighted secrecy throughput
    jain: np.ndarray             # (M,) after this slot's accrual


@dataclass
class StepOutcome:
    next_obs: list
    rewards: np.ndarray
    reward_terms: list           # per agent: dict of r_ec/r_rd/r_ar/r_sec/r_a/r_l
    xi_rd: np.ndarray
    xi_a: np.ndarray
    xi_l: np.ndarray
    xi_ar: np.ndarray
    terminal: bool
    slot_metrics: SlotMetrics = field(default=None)


class SecrecyEnv:
    """One episode at a time; call reset() then step() until terminal.

    Agents are the M communication UAVs (indices 0..M-1) followed by the
    jammer (index M) unless the benchmark mode removes it. The eavesdropper
    is scripted, not an agent.
    """

    def __init__(self, cfg: SimConfig, users: UserLayout, clusters: ClusterAssignment):
        self.cfg = cfg
        self.users = users.as_array()
        m = cfg.m_comm_uavs
        self.cluster_users = [clusters.users_of_uav(i) for i in range(m)]
        self.n_agents = cfg.n_agents
        self.has_jammer = cfg.has_jammer
        self.agent_names = [f"d{i + 1}" for i in range(m)] + (["j"] if self.has_jammer else [])

        pos = cfg.start_end_positions
        starts = [np.asarray(s, dtype=float) for s, _ in pos.comm]
        ends = [np.asarray(e, dtype=float) for _, e in pos.comm]
        if self.has_jammer:
            starts.append(np.asarray(pos.jammer[0], dtype=float))
            ends.append(np.asarray(pos.jammer[1], dtype=float))
        self.starts = starts
        self.ends = ends
        self.eve_start = np.asarray(pos.eve[0], dtype=float)
        self.eve_end = np.asarray(pos.eve[1], dtype=float)

        self.diag = cfg.arena_diagonal_m()
        self.noise_w = cfg.noise_w
        self.rmax_bits = cfg.r_max_threshold * 1e6
        self.v_mr = max_range_speed(cfg.rotor)
        self.slot = 0
        self.terminal = True   # until reset

    # -- observation layout ---------------------------------------------------

    def role_of(self, agent: int) -> str:
        return ROLE_COMM if agent < self.cfg.m_comm_uavs else ROLE_JAMMER

    def obs_dim(self, agent: int) -> int:
        base = 2 * self.n_agents + 2 + 3
        if self.role_of(agent) == ROLE_COMM:
            return base + len(self.cluster_users[agent])
        return base

    def p_max_of(self, agent: int) -> float:
        return self.cfg.p_comm_max_w if self.role_of(agent) == ROLE_COMM \
            else self.cfg.p_jam_max_w

    def _observation(self, agent: int) -> Observation:
        cfg = self.cfg
        vals = []
        for p in self.positions:
            vals += [p[0] / self.diag, p[1] / self.diag]
        vals += [self.eve_pos[0] / self.diag, self.eve_pos[1] / self.diag]
        role = self.role_of(agent)
        if role == ROLE_COMM:
            for u in self.cluster_users[agent]:
                vals.append(self.ledger.per_user_cum_bits[u] / self.rmax_bits)
        dist = float(np.hypot(*(self.positions[agent] - self.ends[agent])))
        vals += [dist / self.diag,
                 self.speeds[agent] / cfg.max_speed_mps,
                 self.energies[agent] / cfg.e_max_j]
        return Observation(values=np.asarray(vals), role=role, agent=agent)

    def observations(self) -> list:
        return [self._observation(i) for i in range(self.n_agents)]

    # -- episode lifecycle -----------------------------------------------------

    def reset(self) -> list:
        self.positions = [s.copy() for s in self.starts]
        self.speeds = np.zeros(self.n_agents)
        self.headings = np.zeros(self.n_agents)
        self.energies = np.full(self.n_agents, self.cfg.e_max_j)
        self.frozen = np.zeros(self.n_agents, dtype=bool)
        self.ledger = ThroughputLedger(self.cluster_users, self.cfg.k_users)
        self.slot = 0
        self.eve_pos = self.eve_start.copy()
        self.terminal = False
        return self.observations()

    def step(self, raw_actions) -> StepOutcome:
        if self.terminal:
            raise RuntimeError("step() after terminal; call reset()")
        cfg = self.cfg
        w = cfg.reward_weights
        raw_actions = np.asarray(raw_actions, dtype=float).reshape(self.n_agents, 3)
        active = ~self.frozen
        new_slot = self.slot + 1

        # 1-2. map actions and integrate motion; the eavesdropper follows its line
        actions = [map_action(raw_actions[i], cfg.max_speed_mps, self.p_max_of(i))
                   for i in range(self.n_agents)]
        xi_a = np.zeros(self.n_agents, dtype=bool)
        dist_before = np.array([np.hypot(*(self.positions[i] - self.ends[i]))
                                for i in range(self.n_agents)])
        for i in range(self.n_agents):
            if not active[i]:
                continue
            state = kinematics.UavKinState(
                position=self.positions[i], speed=self.speeds[i],
                heading=self.headings[i], energy_j=self.energies[i])
            out = kinematics.step_motion(
                state, actions[i].speed_mps, actions[i].azimuth_rad, cfg.slot_s,
                cfg.accel_min_mps2, cfg.accel_max_mps2, cfg.max_speed_mps)
            self.positions[i] = out.new_state.position
            self.speeds[i] = out.new_state.speed
            self.headings[i] = out.new_state.heading
            xi_a[i] = out.accel_violated
        self.eve_pos = kinematics.eavesdropper_position(
            new_slot, self.eve_start, self.eve_end, cfg.max_slots)
        dist_after = np.array([np.hypot(*(self.positions[i] - self.ends[i]))
                               for i in range(self.n_agents)])

        # 3. pairwise separation, eavesdropper included
        all_pos = list(self.positions) + [self.eve_pos]
        xi_l = np.zeros(self.n_agents, dtype=bool)
        for i, j in kinematics.check_separation(all_pos, cfg.min_sep_m):
            if i < self.n_agents:
                xi_l[i] = True
            if j < self.n_agents:
                xi_l[j] = True

        # 4. channel gains and rates at the new geometry
        m = cfg.m_comm_uavs
        tx_powers = [actions[i].power_w if active[i] else 0.0 for i in range(m)]
        jam_power = actions[m].power_w if (self.has_jammer and active[m]) else 0.0
        gain_mu = np.zeros((m, cfg.k_users))
        for i in range(m):
            for k in range(cfg.k_users):
                gain_mu[i, k] = channel.a2g_gain(
                    self.positions[i], self.users[k], cfg.altitude_m, cfg.carrier_hz,
                    cfg.eta_a, cfg.eta_b, cfg.eta_los_db, cfg.eta_nlos_db).gain_linear
        gain_ju = np.zeros(cfg.k_users)
        if self.has_jammer:
            for k in range(cfg.k_users):
                gain_ju[k] = channel.a2g_gain(
                    self.positions[m], self.users[k], cfg.altitude_m, cfg.carrier_hz,
                    cfg.eta_a, cfg.eta_b, cfg.eta_los_db, cfg.eta_nlos_db).gain_linear
        gain_me = np.array([channel.a2a_gain(self.positions[i], self.eve_pos, cfg.beta0_db)
                            for i in range(m)])
        gain_je = channel.a2a_gain(self.positions[m], self.eve_pos, cfg.beta0_db) \
            if self.has_jammer else 0.0

        sec_rates = []   # per cluster: secrecy rate of each member, bits/s
        for i in range(m):
            r_eve = channel.eve_rate(i, tx_powers, jam_power, gain_me, gain_je,
                                     self.noise_w, cfg.bandwidth_hz)
            rates = []
            for k in self.cluster_users[i]:
                r_user = channel.user_rate(i, tx_powers, jam_power, gain_mu[:, k],
                                           gain_ju[k], self.noise_w, cfg.bandwidth_hz)
                rates.append(channel.secrecy_rate(r_user, r_eve))
            sec_rates.append(np.asarray(rates))

        # 5-6. fair scheduling on slot-start factors, then accrual
        self.ledger.latch_step(cfg.fairness_target)
        selections, sel_rates, sel_true_f, sel_sched_f = [], [], [], []
        for i in range(m):
            users_i = self.cluster_users[i]
            true_f = self.ledger.factors(i, cfg.r_max_threshold, cfg.decay_kgp)
            sched_f = np.ones_like(true_f) if cfg.mode == MODE_BEN1 else true_f
            cum = self.ledger.cluster_cum_bits(i)
            sel = schedule(users_i, sched_f, sec_rates[i], cum)
            pos_in_cluster = users_i.index(sel)
            selections.append(sel)
            sel_rates.append(float(sec_rates[i][pos_in_cluster]))
            sel_true_f.append(float(true_f[pos_in_cluster]))
            sel_sched_f.append(float(sched_f[pos_in_cluster]))
        r_ins_bits = instantaneous_fst(sel_sched_f, sel_rates, cfg.slot_s)
        fst_bits = instantaneous_fst(sel_true_f, sel_rates, cfg.slot_s)
        st_bits = sum(sel_rates) * cfg.slot_s
        for i in range(m):
            self.ledger.accrue(i, selections[i], sel_rates[i], cfg.slot_s)
        self.ledger.refresh_jain()

        # 7. energy drain at the post-acceleration speed, return-threshold flags
        powers = np.zeros(self.n_agents)
        xi_rd = np.zeros(self.n_agents, dtype=bool)
        for i in range(self.n_agents):
            if not active[i]:
                continue
            powers[i] = propulsion_power(self.speeds[i], cfg.rotor)
            self.energies[i] -= powers[i] * cfg.slot_s
            e_min = adaptive_threshold(self.positions[i], self.ends[i],
                                       cfg.rotor, cfg.e0_compensation_j)
            xi_rd[i] = self.energies[i] <= e_min

        newly_empty = active & (self.energies <= 0.0)
        self.terminal = bool(new_slot >= cfg.max_slots
                             or np.all(self.frozen | (self.energies <= 0.0)))

        # 8. rewards; the secrecy term is the shared cooperative signal
        r_ins_mbits = r_ins_bits / 1e6
        xi_ar = np.array([dist_after[i] <= cfg.arrival_radius_m
                          for i in range(self.n_agents)])
        rewards = np.zeros(self.n_agents)
        terms = []
        for i in range(self.n_agents):
            t = {"r_ec": 0.0, "r_rd": 0.0, "r_ar": 0.0,
                 "r_sec": 0.0, "r_a": 0.0, "r_l": 0.0}
            if active[i]:
                t["r_ec"] = -w.kappa_ec * powers[i] * cfg.slot_s
                if xi_rd[i]:
                    t["r_rd"] = (w.kappa_rd1 * (dist_before[i] - dist_after[i])
                                 + w.kappa_rd2 / (1.0 + w.kappa_rd3 * dist_before[i]))
                t["r_sec"] = ((1.0 - xi_rd[i]) * w.kappa_th
                              + xi_rd[i] * w.kappa_nth) * r_ins_mbits
                t["r_a"] = w.kappa_a if xi_a[i] else 0.0
                t["r_l"] = w.kappa_l if xi_l[i] else 0.0
            if self.terminal:
                t["r_ar"] = w.kappa_ar if xi_ar[i] else w.kappa_nar
            rewards[i] = sum(t.values())
            terms.append(t)

        # 9. landing: an empty battery parks the UAV for the rest of the episode
        for i in np.flatnonzero(newly_empty):
            self.frozen[i] = True
            self.speeds[i] = 0.0

        metrics = SlotMetrics(
            slot=new_slot,
            positions=np.array([p.copy() for p in self.positions]),
            eve_pos=self.eve_pos.copy(),
            speeds=self.speeds.copy(),
            powers_w=np.array([a.power_w if act else 0.0
                               for a, act in zip(actions, active)]),
            energies_j=self.energies.copy(),
            selections=selections,
            selected_rates_bps=sel_rates,
            r_ins_bits=r_ins_bits,
            fst_bits=fst_bits,
            st_bits=st_bits,
            jain=self.ledger.jain_per_cluster.copy(),
        )
        self.slot = new_slot
        return StepOutcome(
            next_obs=self.observations(),
            rewards=rewards,
            reward_terms=terms,
            xi_rd=xi_rd, xi_a=xi_a, xi_l=xi_l, xi_ar=xi_ar,
            terminal=self.terminal,
            slot_metrics=metrics,
        )
