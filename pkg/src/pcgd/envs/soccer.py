"""Four-player Markov soccer on a rectangular grid.

Coordinates: x grows to the right, y grows downward, offsets are
``target - self``.  Players are ordered clockwise A, B, C, D and defend the
top, right, bottom and left goal respectively.  A goal is the middle one or
two cells just outside its side of the field; only the ball holder can enter
it, which ends the episode.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..game import ContractError
from .base import MultiAgentEnv

UP, DOWN, LEFT, RIGHT, STAND = range(5)
MOVES = {UP: (0, -1), DOWN: (0, 1), LEFT: (-1, 0), RIGHT: (1, 0), STAND: (0, 0)}
N_PLAYERS = 4
LOCAL_DIM = 14
OBS_DIM = N_PLAYERS * LOCAL_DIM


@dataclass(frozen=True)
class SoccerState:
    positions: tuple[tuple[int, int], ...]
    ball: tuple[int, int]
    holder: int  # -1 when the ball is loose
    t: int = 0


def _mouth(n: int) -> list[int]:
    return [n // 2 - 1, n // 2] if n % 2 == 0 else [n // 2]


class MarkovSoccer(MultiAgentEnv):
    action_kind = "discrete"

    def __init__(self, width: int = 8, height: int = 8, reward_variant: str = "appendix",
                 max_steps: int = 200):
        if width < 2 or height < 2 or width * height < N_PLAYERS:
            raise ContractError("grid too small for four players")
        if reward_variant not in ("appendix", "main"):
            raise ContractError(f"unknown reward variant {reward_variant!r}")
        self.width, self.height = int(width), int(height)
        self.reward_variant = reward_variant
        self.max_steps = int(max_steps)
        self.n_players = N_PLAYERS
        self.obs_dims = (OBS_DIM,) * N_PLAYERS
        self.n_actions = (5,) * N_PLAYERS
        W, H = self.width, self.height
        self.goal_cells = [
            {(x, -1) for x in _mouth(W)},
            {(W, y) for y in _mouth(H)},
            {(x, H) for x in _mouth(W)},
            {(-1, y) for y in _mouth(H)},
        ]
        cx, cy = (W - 1) / 2.0, (H - 1) / 2.0
        self.goal_centers = np.array([[cx, -1.0], [float(W), cy], [cx, float(H)], [-1.0, cy]])

    def config(self):
        return {"kind": "soccer", "width": self.width, "height": self.height,
                "reward_variant": self.reward_variant, "max_steps": self.max_steps}

    def reset(self, rng):
        cells = rng.choice(self.width * self.height, size=N_PLAYERS, replace=False)
        positions = tuple((int(c % self.width), int(c // self.width)) for c in cells)
        b = int(rng.integers(self.width * self.height))
        ball = (b % self.width, b // self.width)
        holder = positions.index(ball) if ball in positions else -1
        return SoccerState(positions, ball, holder, 0)

    def _in_grid(self, x, y):
        return 0 <= x < self.width and 0 <= y < self.height

    def _score_rewards(self, scorer: int, owner: int) -> np.ndarray:
        if scorer == owner:
            r = np.zeros(N_PLAYERS)
            r[scorer] = -1.0
            return r
        if self.reward_variant == "appendix":
            r = np.full(N_PLAYERS, -0.25)
            r[owner] = -1.0
        else:
            r = np.full(N_PLAYERS, -1.0)
        r[scorer] = 1.0
        return r

    def step(self, state, actions, rng):
        """Process the four actions one at a time in a random order."""
        if len(actions) != N_PLAYERS:
            raise ContractError("soccer needs one action per player")
        positions = [list(p) for p in state.positions]
        holder = state.holder
        ball = list(state.ball)
        for p in rng.permutation(N_PLAYERS).tolist():
            a = int(actions[p])
            if a not in MOVES:
                raise ContractError(f"invalid soccer action {a}")
            if a == STAND:
                continue
            dx, dy = MOVES[a]
            target = (positions[p][0] + dx, positions[p][1] + dy)
            owner = next((g for g, cells in enumerate(self.goal_cells) if target in cells), None)
            if owner is not None:
                if holder == p:
                    rewards = self._score_rewards(p, owner)
                    nxt = SoccerState(tuple(map(tuple, positions)), tuple(positions[p]), -1, state.t + 1)
                    return nxt, rewards, True
                continue
            if not self._in_grid(*target):
                continue
            other = next((q for q in range(N_PLAYERS) if q != p and tuple(positions[q]) == target), None)
            if other is not None:
                if holder == other:
                    holder = p
                    ball = list(positions[p])
                continue
            positions[p] = list(target)
            if holder == p:
                ball = list(target)
            elif holder == -1 and tuple(ball) == target:
                holder = p
        t = state.t + 1
        nxt = SoccerState(tuple(map(tuple, positions)), tuple(ball), holder, t)
        return nxt, np.zeros(N_PLAYERS), t >= self.max_steps

    def local_state(self, state: SoccerState, player: int) -> np.ndarray:
        """Offsets from ``player`` to the next three goals, the ball and the next three players."""
        me = np.asarray(state.positions[player], dtype=np.float64)
        others = [(player + k) % N_PLAYERS for k in (1, 2, 3)]
        ball = np.asarray(state.positions[state.holder] if state.holder >= 0 else state.ball, dtype=np.float64)
        parts = [self.goal_centers[q] - me for q in others]
        parts.append(ball - me)
        parts += [np.asarray(state.positions[q], dtype=np.float64) - me for q in others]
        return np.concatenate(parts)

    def observe(self, state, player):
        return np.concatenate([self.local_state(state, (player + k) % N_PLAYERS) for k in range(N_PLAYERS)])

    def state_key(self, state):
        return (state.positions, state.ball, state.holder)
