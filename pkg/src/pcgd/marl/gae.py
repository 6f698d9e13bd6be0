"""Generalized advantage estimation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..game import ContractError
from .buffer import TrajectoryBuffer


@dataclass
class AdvantageTable:
    advantages: list[np.ndarray]  # per episode, (T, n)
    value_targets: list[np.ndarray]  # per episode, (T, n)


def gae(rewards: np.ndarray, values: np.ndarray, gamma: float, lam: float) -> tuple[np.ndarray, np.ndarray]:
    """Advantages and lambda-returns for one episode.

    ``rewards`` has shape (T, ...) and ``values`` shape (T + 1, ...), the last
    row being the value after the final step (0 for a terminal state).  The
    lambda-return obeys ``G_t = r_t + gamma * ((1 - lam) V_{t+1} + lam G_{t+1})``
    with ``G_T = V_T``, and the advantage is ``G_t - V_t``; this equals the
    usual discounted sum of TD residuals.
    """
    rewards = np.asarray(rewards, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    T = rewards.shape[0]
    if values.shape[0] != T + 1 or values.shape[1:] != rewards.shape[1:]:
        raise ContractError(f"values must have shape {(T + 1, *rewards.shape[1:])}, got {values.shape}")
    G = np.empty_like(rewards)
    nxt = values[T]
    for t in range(T - 1, -1, -1):
        if lam == 1.0:
            G[t] = rewards[t] + gamma * nxt
        elif lam == 0.0:
            G[t] = rewards[t] + gamma * values[t + 1]
        else:
            G[t] = rewards[t] + gamma * ((1.0 - lam) * values[t + 1] + lam * nxt)
        nxt = G[t]
    return G - values[:T], G


def gae_advantages(buffer: TrajectoryBuffer, gamma: float | None = None, lam: float | None = None) -> AdvantageTable:
    """Fill ``buffer.advantages`` / ``buffer.value_targets`` and return them.

    Episodes without value estimates use a zero baseline.
    """
    gamma = buffer.gamma if gamma is None else gamma
    lam = buffer.lam if lam is None else lam
    advs, targets = [], []
    for ep in buffer.episodes:
        values = ep.values if ep.values is not None else np.zeros((ep.length + 1, ep.rewards.shape[1]))
        a, g = gae(ep.rewards, values, gamma, lam)
        advs.append(a)
        targets.append(g)
    buffer.advantages, buffer.value_targets = advs, targets
    return AdvantageTable(advs, targets)
