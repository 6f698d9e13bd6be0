from __future__ import annotations

from typing import Any, Hashable, Sequence

import numpy as np


class EnvFault(RuntimeError):
    """Raised by an environment step that could not be completed."""


class MultiAgentEnv:
    """Interface shared by the environments used with the MARL harness.

    States are immutable values owned by the caller; ``step`` returns a new
    state.  All randomness comes from the generator passed in, so one
    generator per episode makes trajectories reproducible.
    """

    n_players: int
    obs_dims: Sequence[int]
    action_kind: str  # "discrete" or "continuous"
    n_actions: Sequence[int]
    max_steps: int

    def reset(self, rng: np.random.Generator) -> Any:
        raise NotImplementedError

    def observe(self, state: Any, player: int) -> np.ndarray:
        raise NotImplementedError

    def step(self, state: Any, actions: Sequence, rng: np.random.Generator):
        """Return ``(next_state, rewards, done)``."""
        raise NotImplementedError

    def state_key(self, state: Any) -> Hashable:
        return None

    def config(self) -> dict:
        return {}
