"""Tabular multi-agent MDPs small enough to enumerate every trajectory."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..game import ContractError
from .base import MultiAgentEnv

ENUMERATION_CAP = 10_000


@dataclass(frozen=True)
class TabularState:
    s: int
    t: int


class ScriptedMDP(MultiAgentEnv):
    """Finite-horizon tabular game.

    ``transitions`` has shape ``(S, A_1, ..., A_n, S)`` and ``rewards`` shape
    ``(S, A_1, ..., A_n, n)``.  Episodes last exactly ``horizon`` steps.  Each
    player observes a one-hot encoding of the current state.
    """

    action_kind = "discrete"

    def __init__(self, initial, transitions, rewards, horizon: int):
        self.initial = np.asarray(initial, dtype=np.float64)
        self.transitions = np.asarray(transitions, dtype=np.float64)
        self.rewards = np.asarray(rewards, dtype=np.float64)
        self.horizon = int(horizon)
        S = self.initial.shape[0]
        n = self.rewards.shape[-1]
        self.n_states = S
        self.n_players = n
        self.n_actions = tuple(self.rewards.shape[1:-1])
        if self.initial.ndim != 1 or not np.isclose(self.initial.sum(), 1.0) or np.any(self.initial < 0):
            raise ContractError("initial must be a probability vector")
        if len(self.n_actions) != n:
            raise ContractError(f"rewards shape {self.rewards.shape} does not match {n} players")
        if self.transitions.shape != (S, *self.n_actions, S):
            raise ContractError(f"transitions must have shape {(S, *self.n_actions, S)}")
        if self.rewards.shape[0] != S:
            raise ContractError("rewards first axis must index states")
        if np.any(self.transitions < 0) or not np.allclose(self.transitions.sum(axis=-1), 1.0):
            raise ContractError("transition rows must be probability vectors")
        if self.horizon < 1:
            raise ContractError("horizon must be at least 1")
        self.obs_dims = (S,) * n
        self.max_steps = self.horizon
        self._eye = np.eye(S)

    def reset(self, rng):
        return TabularState(int(self._draw(rng, self.initial)), 0)

    @staticmethod
    def _draw(rng, p):
        if len(p) == 1:
            return 0
        u = rng.random()
        acc = 0.0
        for k, pk in enumerate(p.tolist()):
            acc += pk
            if u < acc:
                return k
        return len(p) - 1

    def observe(self, state, player):
        return self._eye[state.s]

    def step(self, state, actions, rng):
        idx = (state.s, *(int(a) for a in actions))
        rewards = self.rewards[idx].copy()
        nxt = self._draw(rng, self.transitions[idx])
        t = state.t + 1
        return TabularState(nxt, t), rewards, t >= self.horizon

    def state_key(self, state):
        return (state.t, state.s)

    def n_trajectories(self) -> int:
        per_step = self.n_states * int(np.prod(self.n_actions))
        return per_step ** self.horizon

    def trajectories(self):
        """Yield ``(states, joint_actions, state_probability)`` for every trajectory.

        ``state_probability`` covers the initial draw and the transitions only;
        action probabilities are the caller's business.
        """
        if self.n_trajectories() > ENUMERATION_CAP:
            raise ContractError(f"{self.n_trajectories()} trajectories exceed the cap {ENUMERATION_CAP}")
        joint = list(itertools.product(*(range(k) for k in self.n_actions)))
        states_all = range(self.n_states)
        for seq in itertools.product(itertools.product(states_all, joint), repeat=self.horizon):
            states = [s for s, _ in seq]
            acts = [a for _, a in seq]
            p = self.initial[states[0]]
            for t in range(1, self.horizon):
                p *= self.transitions[(states[t - 1], *acts[t - 1], states[t])]
                if p == 0.0:
                    break
            if p > 0.0:
                yield states, acts, p

    def config(self):
        return {"kind": "scripted", "horizon": self.horizon, "n_states": self.n_states}


def scripted_mdp(spec: dict) -> ScriptedMDP:
    """Build a :class:`ScriptedMDP` from a dict with keys ``initial``,
    ``transitions``, ``rewards`` and ``horizon``."""
    missing = {"initial", "transitions", "rewards", "horizon"} - set(spec)
    if missing:
        raise ContractError(f"scripted MDP spec is missing {sorted(missing)}")
    extra = set(spec) - {"initial", "transitions", "rewards", "horizon"}
    if extra:
        raise ContractError(f"unknown scripted MDP keys {sorted(extra)}")
    return ScriptedMDP(spec["initial"], spec["transitions"], spec["rewards"], spec["horizon"])


def chain_mdp(rewards: Sequence[float]) -> ScriptedMDP:
    """Single player, single action, deterministic chain paying ``rewards[t]`` at step t."""
    T = len(rewards)
    S = T
    P = np.zeros((S, 1, S))
    for s in range(S):
        P[s, 0, min(s + 1, S - 1)] = 1.0
    R = np.zeros((S, 1, 1))
    R[:, 0, 0] = rewards
    initial = np.zeros(S)
    initial[0] = 1.0
    return ScriptedMDP(initial, P, R, T)


def matching_pennies() -> ScriptedMDP:
    R = np.zeros((1, 2, 2, 2))
    R[0, :, :, 0] = [[1.0, -1.0], [-1.0, 1.0]]
    R[0, :, :, 1] = -R[0, :, :, 0]
    return ScriptedMDP([1.0], np.ones((1, 2, 2, 1)), R, 1)


def two_state_game(seed: int = 0, horizon: int = 2) -> ScriptedMDP:
    """Two players, two states, two actions each, seeded random stochastic dynamics."""
    rng = np.random.default_rng(seed)
    P = rng.dirichlet([1.0, 1.0], size=(2, 2, 2))
    R = rng.uniform(-1.0, 1.0, size=(2, 2, 2, 2))
    return ScriptedMDP([0.6, 0.4], P, R, horizon)
