"""On-policy trajectory sampling."""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..autodiff import MlpPolicy
from ..game import ContractError, NumericError
from ..envs.base import MultiAgentEnv

CHUNK = 64
MAX_FAULTS_PER_EPISODE = 10
_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


@dataclass
class Episode:
    obs: list[np.ndarray]  # per player, (T, obs_dim)
    actions: list[np.ndarray]  # per player, (T,)
    logp: list[np.ndarray]  # behaviour log-probabilities, per player (T,)
    rewards: np.ndarray  # (T, n)
    keys: list = field(default_factory=list)
    values: np.ndarray | None = None  # (T + 1, n); last row is 0 (terminal)

    @property
    def length(self) -> int:
        return self.rewards.shape[0]

    def returns(self, gamma: float = 1.0) -> np.ndarray:
        disc = gamma ** np.arange(self.length)
        return disc @ self.rewards


@dataclass
class TrajectoryBuffer:
    episodes: list[Episode]
    gamma: float = 1.0
    lam: float = 1.0
    resampled: int = 0
    advantages: list[np.ndarray] | None = None  # per episode, (T, n)
    value_targets: list[np.ndarray] | None = None

    def __post_init__(self):
        if not 0 < self.gamma <= 1:
            raise ContractError("discount must lie in (0, 1]")
        if not 0 <= self.lam <= 1:
            raise ContractError("GAE lambda must lie in [0, 1]")
        for ep in self.episodes:
            T = ep.length
            if any(o.shape[0] != T for o in ep.obs) or any(a.shape[0] != T for a in ep.actions):
                raise ContractError("per-step arrays must share the episode length")
        if self.episodes:
            finite = np.isfinite(np.concatenate([lp for ep in self.episodes for lp in ep.logp]))
            if not finite.all() or not np.isfinite(np.concatenate([ep.rewards.ravel() for ep in self.episodes])).all():
                raise NumericError("non-finite log-probabilities or rewards in buffer")

    def __len__(self):
        return len(self.episodes)

    @property
    def n_players(self) -> int:
        return self.episodes[0].rewards.shape[1]

    def mean_returns(self) -> np.ndarray:
        return np.mean([ep.returns(self.gamma) for ep in self.episodes], axis=0)

    def lengths(self) -> np.ndarray:
        return np.array([ep.length for ep in self.episodes])


def _sample_action(policy: MlpPolicy, out: np.ndarray, rng: np.random.Generator):
    # plain floats: outputs are tiny and numpy call overhead dominates here
    if policy.head == "categorical":
        vals = out.tolist()
        m = max(vals)
        e = [math.exp(v - m) for v in vals]
        total = sum(e)
        u = rng.random() * total
        a, acc = len(e) - 1, 0.0
        for k, ek in enumerate(e):
            acc += ek
            if u < acc:
                a = k
                break
        return a, vals[a] - m - math.log(total)
    mean = float(out[0])
    s = policy.sigma
    a = mean + s * rng.standard_normal()
    return a, -0.5 * ((a - mean) / s) ** 2 - math.log(s) - _LOG_SQRT_2PI


def _run_episode(env: MultiAgentEnv, policies, layers, rng: np.random.Generator) -> Episode:
    n = env.n_players
    obs = [[] for _ in range(n)]
    act = [[] for _ in range(n)]
    logp = [[] for _ in range(n)]
    rew, keys = [], []
    state = env.reset(rng)
    while True:
        acts = []
        for i in range(n):
            o = np.asarray(env.observe(state, i), dtype=np.float64)
            a, lp = _sample_action(policies[i], policies[i].apply_layers(layers[i], o), rng)
            obs[i].append(o)
            act[i].append(a)
            logp[i].append(lp)
            acts.append(a)
        keys.append(env.state_key(state))
        state, rewards, done = env.step(state, acts, rng)
        rew.append(np.asarray(rewards, dtype=np.float64))
        if done or len(rew) >= env.max_steps:
            break
    return Episode(obs=[np.array(o) for o in obs], actions=[np.array(a) for a in act],
                   logp=[np.array(lp) for lp in logp], rewards=np.stack(rew), keys=keys)


def _run_chunk(env: MultiAgentEnv, policies, params, seed: int, first: int, count: int):
    """Sample episodes ``first .. first+count-1``.

    Each episode owns a generator seeded by ``(seed, episode, attempt)``, so
    results do not depend on how episodes are split into chunks.  An episode
    whose environment step raises is discarded and redrawn with the next
    attempt number.
    """
    layers = [pol.layers(th) for pol, th in zip(policies, params)]
    episodes, faults = [], 0
    for ep in range(first, first + count):
        for attempt in range(MAX_FAULTS_PER_EPISODE):
            try:
                episodes.append(_run_episode(env, policies, layers, np.random.default_rng([seed, ep, attempt])))
                break
            except Exception:
                faults += 1
                if attempt + 1 == MAX_FAULTS_PER_EPISODE:
                    raise
    return episodes, faults


def sample_trajectories(env: MultiAgentEnv, policies: Sequence[MlpPolicy], params: Sequence[np.ndarray],
                        batch: int, seed: int, gamma: float = 1.0, lam: float = 1.0,
                        workers: int = 1) -> TrajectoryBuffer:
    """Sample ``batch`` episodes with every player acting from its own policy.

    Episodes run in fixed chunks of 64; with ``workers > 1`` chunks go to a
    process pool and are merged back in episode order, giving the same buffer
    as a serial run.
    """
    if batch < 1:
        raise ContractError("batch must be at least 1")
    if len(policies) != env.n_players or len(params) != env.n_players:
        raise ContractError("need one policy and parameter block per player")
    jobs = [(first, min(CHUNK, batch - first)) for first in range(0, batch, CHUNK)]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_run_chunk, env, policies, params, seed, f, c) for f, c in jobs]
            results = [fut.result() for fut in futures]
    else:
        results = [_run_chunk(env, policies, params, seed, f, c) for f, c in jobs]
    episodes = [ep for eps, _ in results for ep in eps]
    faults = sum(f for _, f in results)
    return TrajectoryBuffer(episodes, gamma, lam, resampled=faults)
