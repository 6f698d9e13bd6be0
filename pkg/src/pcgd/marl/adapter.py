"""Expose a multi-agent RL problem to the optimizers as a :class:`Game`."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from ..autodiff import MlpPolicy
from ..envs.base import MultiAgentEnv
from ..game import BlockPartition, ContractError, Game
from .baselines import ZeroBaseline, attach_values, refit_baselines
from .buffer import TrajectoryBuffer, sample_trajectories
from .estimators import ScoreFunctionEstimator
from .gae import gae_advantages


def pass_seed(master_seed: int, sampling_pass: int) -> int:
    """Sampling seed for the ``sampling_pass``-th batch of a run."""
    return int(np.random.SeedSequence([master_seed, sampling_pass]).generate_state(1)[0])


class RlGameAdapter(Game):
    """Losses are negated expected returns.

    The first oracle call at a new parameter vector samples a fresh batch;
    every later call at the same vector reuses it, so one PCGD step costs one
    sampling pass however many CG iterations it takes.
    """

    pure = False

    def __init__(self, env: MultiAgentEnv, policies: Sequence[MlpPolicy], baselines=None, batch: int = 16,
                 gamma: float = 1.0, lam: float = 1.0, seed: int = 0, workers: int = 1,
                 zero_interaction: bool = False):
        if len(policies) != env.n_players:
            raise ContractError("need one policy per player")
        for i, pol in enumerate(policies):
            if pol.obs_dim != env.obs_dims[i]:
                raise ContractError(f"policy {i} expects {pol.obs_dim} inputs, env gives {env.obs_dims[i]}")
        super().__init__(BlockPartition(tuple(p.n_params for p in policies)))
        self.env = env
        self.policies = list(policies)
        self.baselines = list(baselines) if baselines is not None else [ZeroBaseline() for _ in policies]
        if len(self.baselines) != env.n_players:
            raise ContractError("need one baseline per player")
        if batch < 1:
            raise ContractError("batch must be at least 1")
        self.batch = int(batch)
        self.gamma = float(gamma)
        self.lam = float(lam)
        self.seed = int(seed)
        self.workers = int(workers)
        self.zero_interaction = bool(zero_interaction)
        self.sampling_passes = 0
        self._key: bytes | None = None
        self._buffer: TrajectoryBuffer | None = None
        self._est: ScoreFunctionEstimator | None = None

    @property
    def buffer(self) -> TrajectoryBuffer | None:
        return self._buffer

    def _ensure(self, theta: np.ndarray) -> ScoreFunctionEstimator:
        key = theta.tobytes()
        if key != self._key:
            params = self.partition.split(theta)
            buf = sample_trajectories(self.env, self.policies, params, self.batch,
                                      pass_seed(self.seed, self.sampling_passes),
                                      self.gamma, self.lam, self.workers)
            self.sampling_passes += 1
            attach_values(buf, self.baselines)
            gae_advantages(buf)
            self._est = ScoreFunctionEstimator(buf, self.policies, params)
            self._buffer, self._key = buf, key
        return self._est

    def _losses(self, theta):
        self._ensure(theta)
        return -self._buffer.mean_returns()

    def _gradient(self, theta):
        return -self._ensure(theta).xi()

    def _offdiag_hvp(self, theta, v):
        est = self._ensure(theta)
        return np.zeros(self.dim) if self.zero_interaction else -est.offdiag_hvp(v)

    def _offdiag_hvp_transpose(self, theta, v):
        est = self._ensure(theta)
        return np.zeros(self.dim) if self.zero_interaction else -est.offdiag_hvp_transpose(v)

    def update_baselines(self) -> None:
        """Refit the baselines on the current batch; call once after each optimizer step."""
        if self._buffer is not None:
            refit_baselines(self._buffer, self.baselines)

    def state_arrays(self) -> dict[str, np.ndarray]:
        out = {"sampling_passes": np.array([float(self.sampling_passes)])}
        for i, b in enumerate(self.baselines):
            for name, arr in b.state_arrays().items():
                out[f"baseline{i}.{name}"] = arr
        return out

    def load_state_arrays(self, arrays: dict[str, np.ndarray]) -> None:
        if "sampling_passes" in arrays:
            self.sampling_passes = int(arrays["sampling_passes"][0])
        for i, b in enumerate(self.baselines):
            prefix = f"baseline{i}."
            b.load_state_arrays({k[len(prefix):]: v for k, v in arrays.items() if k.startswith(prefix)})
        self._key = self._buffer = self._est = None
