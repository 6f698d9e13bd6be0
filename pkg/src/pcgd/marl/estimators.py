"""Score-function estimators of the policy gradient and the mixed Hessian.

Both estimators are written in terms of the players' expected returns J_i
(ascent direction).  The advantage stands in for the Q-function.  The
mixed-derivative estimate contracts the three score-product terms against a
direction first (forward-mode pass for the other players' scores) and then
needs a single reverse pass per player.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from ..autodiff import MlpPolicy, Tape
from ..game import BlockPartition, ContractError
from .buffer import TrajectoryBuffer


class ScoreFunctionEstimator:
    """Holds one log-probability graph per player over every step in a buffer."""

    def __init__(self, buffer: TrajectoryBuffer, policies: Sequence[MlpPolicy], params: Sequence[np.ndarray]):
        if len(buffer) == 0:
            raise ContractError("empty trajectory buffer")
        if buffer.advantages is None:
            raise ContractError("advantages have not been computed for this buffer")
        n = buffer.n_players
        if len(policies) != n or len(params) != n:
            raise ContractError("need one policy and parameter block per player")
        self.n = n
        self.n_episodes = len(buffer)
        self.partition = BlockPartition(tuple(p.n_params for p in policies))
        lengths = buffer.lengths()
        self.starts = np.concatenate([[0], np.cumsum(lengths)[:-1]])
        t_index = np.concatenate([np.arange(T) for T in lengths])
        episode_of = np.repeat(np.arange(len(lengths)), lengths)
        self._first_row = self.starts[episode_of]
        self._last_row = (self.starts + lengths - 1)[episode_of]
        disc = buffer.gamma ** t_index
        adv = np.concatenate(buffer.advantages)  # (rows, n)
        self.weights = [disc * adv[:, i] for i in range(n)]
        self.tapes, self.logp = [], []
        for i, (pol, th) in enumerate(zip(policies, params)):
            tape = Tape(pol.n_params)
            node = tape.param(th)
            obs = np.concatenate([ep.obs[i] for ep in buffer.episodes])
            acts = np.concatenate([ep.actions[i] for ep in buffer.episodes])
            if pol.head == "categorical":
                acts = acts.astype(np.int64)
            self.tapes.append(tape)
            self.logp.append(pol.log_prob(tape, node, obs, acts))

    # within-episode cumulative sums over the flat row axis

    def _before(self, x: np.ndarray) -> np.ndarray:
        """Per row l: sum of x over earlier rows of the same episode."""
        c = np.cumsum(x)
        return c - x - np.where(self._first_row > 0, c[self._first_row - 1], 0.0)

    def _after(self, x: np.ndarray) -> np.ndarray:
        """Per row l: sum of x over later rows of the same episode."""
        c = np.cumsum(x)
        return c[self._last_row] - c

    def _coefficients(self, w: np.ndarray, c: np.ndarray) -> np.ndarray:
        # d/dtheta of sum_t w_t [ g_t c_t + G_<t c_t + g_t C_<t ]  ==  sum_l g_l coef_l
        return w * (c + self._before(c)) + self._after(w * c)

    def xi(self) -> np.ndarray:
        blocks = [self.tapes[i].vjp(self.logp[i], self.weights[i]) / self.n_episodes for i in range(self.n)]
        return np.concatenate(blocks)

    def _scores_along(self, v: np.ndarray) -> list[np.ndarray]:
        v = self.partition.check(v, "v")
        return [self.tapes[j].jvp(v[self.partition.slice(j)], self.logp[j]) for j in range(self.n)]

    def offdiag_hvp(self, v) -> np.ndarray:
        """Estimate of ``H_o v`` for the Hessian of the returns: block i is
        ``sum_{j != i} d^2 J_i / d theta_i d theta_j  v_j``."""
        h = self._scores_along(v)
        total = np.sum(h, axis=0)
        blocks = []
        for i in range(self.n):
            coef = self._coefficients(self.weights[i], total - h[i])
            blocks.append(self.tapes[i].vjp(self.logp[i], coef) / self.n_episodes)
        return np.concatenate(blocks)

    def offdiag_hvp_transpose(self, u) -> np.ndarray:
        """Estimate of ``H_o^T u``: block j is ``sum_{i != j} (d^2 J_i / d theta_i d theta_j)^T u_i``."""
        d = self._scores_along(u)
        per_player = [self._coefficients(self.weights[i], d[i]) for i in range(self.n)]
        total = np.sum(per_player, axis=0)
        blocks = [self.tapes[j].vjp(self.logp[j], total - per_player[j]) / self.n_episodes
                  for j in range(self.n)]
        return np.concatenate(blocks)


def estimate_xi(buffer, policies, params) -> np.ndarray:
    return ScoreFunctionEstimator(buffer, policies, params).xi()


def estimate_offdiag_hvp(buffer, policies, params, v) -> np.ndarray:
    return ScoreFunctionEstimator(buffer, policies, params).offdiag_hvp(v)
