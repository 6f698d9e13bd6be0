"""Exact expected returns on enumerable tabular games, for checking estimators."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..autodiff import MlpPolicy
from ..envs.scripted import ScriptedMDP, TabularState
from ..game import BlockPartition, ContractError


@dataclass
class ExactGradients:
    J: np.ndarray  # (n,) expected discounted returns
    xi: np.ndarray  # flat, block i = dJ_i / dtheta_i
    H: np.ndarray  # flat x flat, block (i, j) = d^2 J_i / dtheta_i dtheta_j (off-diagonal blocks only)

    def hvp(self, v: np.ndarray) -> np.ndarray:
        return self.H @ v


class _Enumerator:
    def __init__(self, env: ScriptedMDP, policies, gamma):
        if not isinstance(env, ScriptedMDP):
            raise ContractError("enumeration needs a tabular ScriptedMDP")
        self.env = env
        self.policies = policies
        trajs = list(env.trajectories())  # raises past the cap
        T = env.horizon
        self.state_prob = np.array([p for _, _, p in trajs])
        self.states = np.array([s for s, _, _ in trajs])  # (K, T)
        self.acts = np.array([a for _, a, _ in trajs])  # (K, T, n)
        disc = gamma ** np.arange(T)
        n = env.n_players
        R = np.empty((len(trajs), n))
        for k in range(len(trajs)):
            rows = [env.rewards[(self.states[k, t], *self.acts[k, t])] for t in range(T)]
            R[k] = disc @ np.array(rows)
        self.returns = R
        self.obs = [[np.stack([env.observe(TabularState(s, t), i) for s in range(env.n_states)])
                     for t in range(T)] for i in range(n)]

    def J(self, params: Sequence[np.ndarray]) -> np.ndarray:
        env = self.env
        logp = np.zeros(len(self.state_prob))
        for i, (pol, th) in enumerate(zip(self.policies, params)):
            for t in range(env.horizon):
                out = pol.forward_numpy(th, self.obs[i][t])  # (S, A_i)
                table = out - out.max(axis=1, keepdims=True)
                table = table - np.log(np.exp(table).sum(axis=1, keepdims=True))
                logp += table[self.states[:, t], self.acts[:, t, i]]
        prob = self.state_prob * np.exp(logp)
        return prob @ self.returns


def exact_gradients_by_enumeration(env: ScriptedMDP, policies: Sequence[MlpPolicy], params: Sequence[np.ndarray],
                                   gamma: float = 1.0, h: float = 1e-5) -> ExactGradients:
    """Exact J with gradient and mixed Hessian from central differences of it."""
    if any(p.head != "categorical" for p in policies):
        raise ContractError("enumeration supports categorical policies only")
    part = BlockPartition(tuple(p.n_params for p in policies))
    en = _Enumerator(env, policies, gamma)
    theta = np.concatenate([np.asarray(p, dtype=np.float64) for p in params])

    def J(x):
        return en.J(part.split(x))

    d = part.total
    owner = np.repeat(np.arange(part.n_players), part.dims)
    xi = np.zeros(d)
    for a in range(d):
        e = np.zeros(d)
        e[a] = h
        xi[a] = (J(theta + e)[owner[a]] - J(theta - e)[owner[a]]) / (2 * h)
    H = np.zeros((d, d))
    for a in range(d):
        for b in range(d):
            if owner[a] == owner[b]:
                continue
            ea, eb = np.zeros(d), np.zeros(d)
            ea[a], eb[b] = h, h
            i = owner[a]
            H[a, b] = (J(theta + ea + eb)[i] - J(theta + ea - eb)[i]
                       - J(theta - ea + eb)[i] + J(theta - ea - eb)[i]) / (4 * h * h)
    return ExactGradients(J(theta), xi, H)


def exact_returns(env: ScriptedMDP, policies, params, gamma: float = 1.0) -> np.ndarray:
    return _Enumerator(env, policies, gamma).J(params)
