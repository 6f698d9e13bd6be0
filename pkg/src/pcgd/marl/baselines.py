"""State-value baselines, one per player.

Baselines are refit after each optimizer step from that step's returns, so
the values used in a step never depend on the episodes they score.
"""

from __future__ import annotations

import ast

import numpy as np

from ..autodiff import MlpPolicy, Tape
from .buffer import TrajectoryBuffer


class ZeroBaseline:
    kind = "zero"

    def predict(self, obs: np.ndarray, keys) -> np.ndarray:
        return np.zeros(len(obs))

    def update(self, obs: np.ndarray, keys, targets: np.ndarray) -> None:
        pass

    def state_arrays(self) -> dict[str, np.ndarray]:
        return {}

    def load_state_arrays(self, arrays: dict[str, np.ndarray]) -> None:
        pass


class TabularBaseline(ZeroBaseline):
    """Running mean of observed returns per state key."""

    kind = "tabular"

    def __init__(self):
        self.sums: dict = {}
        self.counts: dict = {}

    def predict(self, obs, keys):
        return np.array([self.sums[k] / self.counts[k] if k in self.counts else 0.0 for k in keys])

    def update(self, obs, keys, targets):
        for k, g in zip(keys, targets):
            self.sums[k] = self.sums.get(k, 0.0) + float(g)
            self.counts[k] = self.counts.get(k, 0) + 1

    def state_arrays(self):
        keys = sorted(self.counts, key=repr)
        return {"tab_keys": np.array([repr(k) for k in keys]),
                "tab_sums": np.array([self.sums[k] for k in keys]),
                "tab_counts": np.array([self.counts[k] for k in keys], dtype=np.float64)}

    def load_state_arrays(self, arrays):
        self.sums, self.counts = {}, {}
        for text, s, c in zip(arrays.get("tab_keys", []), arrays.get("tab_sums", []),
                              arrays.get("tab_counts", [])):
            k = ast.literal_eval(str(text))
            self.sums[k] = float(s)
            self.counts[k] = int(c)


class MlpBaseline(ZeroBaseline):
    """Small MLP value function fit by full-batch gradient descent on squared error."""

    kind = "mlp"

    def __init__(self, obs_dim: int, hidden=(64,), lr: float = 1e-3, epochs: int = 5, seed: int = 0):
        self.net = MlpPolicy([obs_dim, *hidden, 1], activation="tanh", head="gaussian", sigma=1.0)
        self.params = self.net.init(np.random.default_rng(seed))
        self.lr = lr
        self.epochs = epochs

    def predict(self, obs, keys):
        if len(obs) == 0:
            return np.zeros(0)
        return self.net.forward_numpy(self.params, obs)[:, 0]

    def update(self, obs, keys, targets):
        obs = np.asarray(obs, dtype=np.float64)
        targets = np.asarray(targets, dtype=np.float64)
        n = len(targets)
        if n == 0:
            return
        for _ in range(self.epochs):
            tape = Tape(self.net.n_params)
            p = tape.param(self.params)
            pred = tape.sum(self.net.forward(tape, p, obs), axis=-1)
            err = tape.sub(pred, targets)
            loss = tape.scale(tape.dot(err, err), 1.0 / n)
            self.params = self.params - self.lr * tape.backward(loss)

    def state_arrays(self):
        return {"mlp_params": self.params.copy()}

    def load_state_arrays(self, arrays):
        if "mlp_params" in arrays:
            self.params = np.array(arrays["mlp_params"], dtype=np.float64)


def attach_values(buffer: TrajectoryBuffer, baselines) -> None:
    """Store per-player baseline values (with a terminal 0 row) in every episode."""
    n = buffer.n_players
    for ep in buffer.episodes:
        values = np.zeros((ep.length + 1, n))
        for i, b in enumerate(baselines):
            keys = [(t, k) for t, k in enumerate(ep.keys)]
            values[: ep.length, i] = b.predict(ep.obs[i], keys)
        ep.values = values


def refit_baselines(buffer: TrajectoryBuffer, baselines) -> None:
    """Refit each player's baseline to the discounted returns-to-go in ``buffer``."""
    n = buffer.n_players
    for i, b in enumerate(baselines):
        obs, keys, targets = [], [], []
        for ep in buffer.episodes:
            g = np.zeros(ep.length)
            acc = 0.0
            for t in range(ep.length - 1, -1, -1):
                acc = ep.rewards[t, i] + buffer.gamma * acc
                g[t] = acc
            obs.append(ep.obs[i])
            keys += [(t, k) for t, k in enumerate(ep.keys)]
            targets.append(g)
        b.update(np.concatenate(obs), keys, np.concatenate(targets))
