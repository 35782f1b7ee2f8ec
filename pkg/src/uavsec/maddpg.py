"""MADDPG training loop: per-agent actors and centralized critics with target
networks, a shared FIFO replay buffer, Gaussian exploration noise, and greedy
evaluation rollouts. Deterministic under the run seed."""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from .clustering import cluster_users
from .config import SimConfig, place_users
from .env import SecrecyEnv, StepOutcome
from .nets import (Adam, ExpandedMlp, LINEAR, TANH, load_params, save_params,
                   soft_update)


@dataclass(frozen=True)
class Transition:
    """One slot of joint experience: concatenated raw observations and raw
    action triples, per-agent rewards, and the successor state."""

    joint_state: np.ndarray
    joint_action: np.ndarray
    rewards: np.ndarray
    next_joint_state: np.ndarray
    terminal: bool


class ReplayBuffer:
    """Fixed-capacity FIFO ring of transitions; the oldest entry is evicted
    when full. Backed by flat arrays for fast batched sampling."""

    def __init__(self, capacity: int, state_dim: int, action_dim: int, n_agents: int):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = capacity
        self._s = np.zeros((capacity, state_dim))
        self._a = np.zeros((capacity, action_dim))
        self._r = np.zeros((capacity, n_agents))
        self._s2 = np.zeros((capacity, state_dim))
        self._done = np.zeros(capacity)
        self._count = 0

    def __len__(self) -> int:
        return min(self._count, self.capacity)

    def push(self, t: Transition) -> None:
        i = self._count % self.capacity
        self._s[i] = t.joint_state
        self._a[i] = t.joint_action
        self._r[i] = t.rewards
        self._s2[i] = t.next_joint_state
        self._done[i] = float(t.terminal)
        self._count += 1

    def _slot_of_oldest(self, i: int) -> int:
        if not 0 <= i < len(self):
            raise IndexError(i)
        if self._count <= self.capacity:
            return i
        return (self._count + i) % self.capacity

    def peek(self, i: int) -> Transition:
        """The i-th oldest stored transition (0 = oldest surviving)."""
        j = self._slot_of_oldest(i)
        return Transition(self._s[j].copy(), self._a[j].copy(), self._r[j].copy(),
                          self._s2[j].copy(), bool(self._done[j]))

    def sample(self, batch_size: int, rng: np.random.Generator) -> dict:
        if len(self) == 0:
            raise ValueError("cannot sample from an empty buffer")
        if batch_size > len(self):
            raise ValueError(f"batch {batch_size} exceeds buffer size {len(self)}")
        idx = rng.choice(len(self), size=batch_size, replace=False)
        if self._count > self.capacity:
            idx = (self._count + idx) % self.capacity
        return {"s": self._s[idx], "a": self._a[idx], "r": self._r[idx],
                "s2": self._s2[idx], "done": self._done[idx]}


class Agent:
    """One agent's four networks plus optimizer state."""

    def __init__(self, index: int, obs_dims: list[int], cfg: SimConfig,
                 rng: np.random.Generator):
        tp = cfg.train
        self.index = index
        self.obs_dims = list(obs_dims)
        self.n_agents = len(obs_dims)
        action_dim = 3 * self.n_agents
        self.actor = ExpandedMlp([obs_dims[index]], 0, tp.hidden_dims, 3,
                                 TANH, tp.expand_width, rng)
        self.critic = ExpandedMlp(obs_dims, action_dim, tp.hidden_dims, 1,
                                  LINEAR, tp.expand_width, rng)
        self.target_actor = ExpandedMlp([obs_dims[index]], 0, tp.hidden_dims, 3,
                                        TANH, tp.expand_width, rng)
        self.target_critic = ExpandedMlp(obs_dims, action_dim, tp.hidden_dims, 1,
                                         LINEAR, tp.expand_width, rng)
        self.target_actor.set_params([p.copy() for p in self.actor.params])
        self.target_critic.set_params([p.copy() for p in self.critic.params])
        self.actor_opt = Adam(self.actor.params, lr=tp.actor_lr)
        self.critic_opt = Adam(self.critic.params, lr=tp.critic_lr)
        self.noise_std = tp.noise_std
        self.tau = tp.tau

    def act(self, obs_values, explore: bool, rng: np.random.Generator | None = None):
        """Raw action triple in [-1, 1]; Gaussian noise added when exploring."""
        raw, _ = self.actor.forward(np.asarray(obs_values, dtype=float))
        if explore:
            raw = raw + rng.normal(0.0, self.noise_std, size=raw.shape)
        return np.clip(raw, -1.0, 1.0)

    def critic_update(self, batch: dict, gamma: float, all_agents: list["Agent"],
                      obs_offsets: list[int]) -> float:
        """One TD step on the centralized critic; returns the MSE loss."""
        s2 = batch["s2"]
        next_actions = []
        for j, other in enumerate(all_agents):
            o2 = s2[:, obs_offsets[j]:obs_offsets[j] + other.obs_dims[j]]
            a2, _ = other.target_actor.forward(o2)
            next_actions.append(a2)
        a2 = np.concatenate(next_actions, axis=1)
        q2, _ = self.target_critic.forward(s2, a2)
        y = batch["r"][:, self.index] + gamma * (1.0 - batch["done"]) * q2[:, 0]
        q, cache = self.critic.forward(batch["s"], batch["a"])
        err = q[:, 0] - y
        loss = float(np.mean(err * err))
        dq = (2.0 / len(err)) * err[:, None]
        grads, _ = self.critic.backward(cache, dq)
        self.critic_opt.step(self.critic.params, grads)
        return loss

    def actor_update(self, batch: dict, obs_offsets: list[int]) -> float:
        """Ascend the critic in this agent's action slot; returns -mean Q."""
        s = batch["s"]
        o = s[:, obs_offsets[self.index]:obs_offsets[self.index] + self.obs_dims[self.index]]
        a_own, acache = self.actor.forward(o)
        a_joint = batch["a"].copy()
        a_joint[:, 3 * self.index:3 * self.index + 3] = a_own
        q, ccache = self.critic.forward(s, a_joint)
        loss = float(-np.mean(q))
        dq = np.full((len(q), 1), -1.0 / len(q))
        _, (_, dact) = self.critic.backward(ccache, dq)
        da_own = dact[:, 3 * self.index:3 * self.index + 3]
        agrads, _ = self.actor.backward(acache, da_own)
        self.actor_opt.step(self.actor.params, agrads)
        return loss

    def update_targets(self) -> None:
        soft_update(self.target_actor.params, self.actor.params, self.tau)
        soft_update(self.target_critic.params, self.critic.params, self.tau)

    def networks(self) -> dict:
        return {"actor": self.actor, "critic": self.critic,
                "target_actor": self.target_actor,
                "target_critic": self.target_critic}


@dataclass
class EpisodeStats:
    episode: int
    n_slots: int
    rewards_per_agent: np.ndarray
    avg_cum_reward: float
    avg_cum_st_mbits: float
    avg_fairness: float
    fst_mbits: float
    st_mbits: float
    avg_speed: float
    accel_violation_rate: float
    dist_violation_rate: float
    actor_loss: float
    critic_loss: float
    arrivals: np.ndarray


@dataclass
class TrainResult:
    stats: list
    trace: list                      # greedy final-episode SlotMetrics+flags rows
    greedy: EpisodeStats
    checkpoint_dir: str | None = None
    cluster_sizes: tuple = ()


def build_env(cfg: SimConfig, layout_seed: int | None = None) -> SecrecyEnv:
    """Place users, cluster them, and assemble the environment."""
    layout = place_users(cfg, seed=layout_seed)
    starts = [s for s, _ in cfg.start_end_positions.comm]
    clusters = cluster_users(layout.as_array(), starts, cfg.m_comm_uavs, cfg.seed)
    return SecrecyEnv(cfg, layout, clusters)


def make_agents(cfg: SimConfig, env: SecrecyEnv) -> list[Agent]:
    obs_dims = [env.obs_dim(i) for i in range(env.n_agents)]
    return [Agent(i, obs_dims, cfg,
                  np.random.default_rng([cfg.seed, 0x6E65, i]))
            for i in range(env.n_agents)]


def _joint(obs_list) -> np.ndarray:
    return np.concatenate([o.values for o in obs_list])


def _episode_stats(episode: int, env: SecrecyEnv, outcomes: list[StepOutcome],
                   actor_losses: list, critic_losses: list) -> EpisodeStats:
    n_slots = len(outcomes)
    a = env.n_agents
    rewards = np.sum([o.rewards for o in outcomes], axis=0)
    fst_bits = sum(o.slot_metrics.fst_bits for o in outcomes)
    st_bits = sum(o.slot_metrics.st_bits for o in outcomes)
    jain_sum = sum(float(np.sum(o.slot_metrics.jain)) for o in outcomes)
    speeds = np.mean([o.slot_metrics.speeds for o in outcomes])
    xi_a = sum(int(np.sum(o.xi_a)) for o in outcomes)
    xi_l = sum(int(np.sum(o.xi_l)) for o in outcomes)
    return EpisodeStats(
        episode=episode,
        n_slots=n_slots,
        rewards_per_agent=rewards,
        avg_cum_reward=float(np.mean(rewards)),
        avg_cum_st_mbits=float(np.mean(env.ledger.per_cluster_cum_bits)) / 1e6,
        avg_fairness=jain_sum / (env.cfg.m_comm_uavs * n_slots),
        fst_mbits=fst_bits / 1e6,
        st_mbits=st_bits / 1e6,
        avg_speed=float(speeds),
        accel_violation_rate=xi_a / (a * n_slots),
        dist_violation_rate=xi_l / (a * n_slots),
        actor_loss=float(np.mean(actor_losses)) if actor_losses else 0.0,
        critic_loss=float(np.mean(critic_losses)) if critic_losses else 0.0,
        arrivals=outcomes[-1].xi_ar.copy(),
    )


def run_episode(env: SecrecyEnv, agents: list[Agent], explore: bool,
                noise_rng: np.random.Generator | None = None,
                on_step=None) -> list[StepOutcome]:
    """Roll one episode; returns every StepOutcome in slot order."""
    obs = env.reset()
    outcomes = []
    while not env.terminal:
        raw = np.stack([agents[i].act(obs[i].values, explore, noise_rng)
                        for i in range(env.n_agents)])
        outcome = env.step(raw)
        if on_step is not None:
            on_step(obs, raw, outcome)
        outcomes.append(outcome)
        obs = outcome.next_obs
    return outcomes


def greedy_episode(env: SecrecyEnv, agents: list[Agent],
                   episode_index: int = -1) -> tuple[list[StepOutcome], EpisodeStats]:
    outcomes = run_episode(env, agents, explore=False)
    return outcomes, _episode_stats(episode_index, env, outcomes, [], [])


def save_checkpoint(dirpath: str, agents: list[Agent], env: SecrecyEnv,
                    cfg_hash: str, seed: int, episode: int) -> None:
    import json
    os.makedirs(dirpath, exist_ok=True)
    for agent, name in zip(agents, env.agent_names):
        for kind, net in agent.networks().items():
            save_params(os.path.join(dirpath, f"{kind}_{name}.npz"), net.params,
                        meta={"agent": name, "kind": kind,
                              "obs_dims": agent.obs_dims})
    with open(os.path.join(dirpath, "checkpoint.json"), "w", encoding="utf-8") as fh:
        json.dump({"seed": seed, "config_hash": cfg_hash, "episode": episode},
                  fh, indent=2, sort_keys=True)


def load_checkpoint(dirpath: str, cfg: SimConfig, env: SecrecyEnv) -> list[Agent]:
    agents = make_agents(cfg, env)
    for agent, name in zip(agents, env.agent_names):
        for kind, net in agent.networks().items():
            params, _ = load_params(os.path.join(dirpath, f"{kind}_{name}.npz"))
            net.set_params(params)
    return agents


def train(cfg: SimConfig, run_dir: str | None = None, episodes: int | None = None,
          progress=None) -> TrainResult:
    """Full training run per the driving algorithm: explore, store, update
    critics and actors from the shared buffer, soft-update targets.

    Writes periodic and final checkpoints under run_dir/checkpoints when a
    run directory is given. Returns per-episode statistics plus a greedy
    final-policy trace.
    """
    from .config import config_hash

    tp = cfg.train
    n_episodes = tp.episodes if episodes is None else episodes
    env = build_env(cfg)
    agents = make_agents(cfg, env)
    obs_dims = [env.obs_dim(i) for i in range(env.n_agents)]
    obs_offsets = np.concatenate([[0], np.cumsum(obs_dims)])[:-1].tolist()
    buffer = ReplayBuffer(tp.buffer_capacity, sum(obs_dims), 3 * env.n_agents,
                          env.n_agents)
    noise_rng = np.random.default_rng([cfg.seed, 0x6E6F])
    sample_rng = np.random.default_rng([cfg.seed, 0x7361])
    cfg_sha = config_hash(cfg)
    ckpt_root = os.path.join(run_dir, "checkpoints") if run_dir else None

    stats: list[EpisodeStats] = []
    for ep in range(n_episodes):
        actor_losses, critic_losses = [], []
        slot_counter = [0]

        def on_step(obs, raw, outcome, _losses=(actor_losses, critic_losses)):
            buffer.push(Transition(
                joint_state=_joint(obs),
                joint_action=raw.reshape(-1).copy(),
                rewards=outcome.rewards.copy(),
                next_joint_state=_joint(outcome.next_obs),
                terminal=outcome.terminal,
            ))
            slot_counter[0] += 1
            if len(buffer) >= tp.batch_size and slot_counter[0] % tp.update_every == 0:
                for agent in agents:
                    batch = buffer.sample(tp.batch_size, sample_rng)
                    _losses[1].append(agent.critic_update(batch, tp.gamma, agents,
                                                          obs_offsets))
                    _losses[0].append(agent.actor_update(batch, obs_offsets))
                    agent.update_targets()

        outcomes = run_episode(env, agents, explore=True, noise_rng=noise_rng,
                               on_step=on_step)
        stats.append(_episode_stats(ep, env, outcomes, actor_losses, critic_losses))
        if progress is not None:
            progress(stats[-1])
        if ckpt_root and tp.checkpoint_interval > 0 \
                and (ep + 1) % tp.checkpoint_interval == 0 and (ep + 1) < n_episodes:
            save_checkpoint(os.path.join(ckpt_root, f"ep_{ep + 1:06d}"),
                            agents, env, cfg_sha, cfg.seed, ep + 1)

    final_dir = None
    if ckpt_root:
        final_dir = os.path.join(ckpt_root, "final")
        save_checkpoint(final_dir, agents, env, cfg_sha, cfg.seed, n_episodes)

    greedy_outcomes, greedy_stats = greedy_episode(env, agents, n_episodes)
    return TrainResult(
        stats=stats,
        trace=greedy_outcomes,
        greedy=greedy_stats,
        checkpoint_dir=final_dir,
        cluster_sizes=tuple(len(c) for c in env.cluster_users),
    )
