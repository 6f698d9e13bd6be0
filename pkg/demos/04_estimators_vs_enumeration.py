"""Score-function estimates of the gradient and mixed Hessian against exact values.

The two-state game is small enough to enumerate every trajectory, which
gives exact expected returns and, by finite differences, exact derivatives.

Run: python demos/04_estimators_vs_enumeration.py
"""

from __future__ import annotations

import numpy as np

from pcgd.autodiff import MlpPolicy
from pcgd.envs import two_state_game
from pcgd.marl import ScoreFunctionEstimator, exact_gradients_by_enumeration, gae_advantages, sample_trajectories


def main():
    env = two_state_game(0, horizon=2)
    pols = [MlpPolicy([2, 3, 2], "tanh") for _ in range(2)]
    rng = np.random.default_rng(0)
    params = [p.init(rng) for p in pols]
    exact = exact_gradients_by_enumeration(env, pols, params, gamma=0.9)
    v = rng.standard_normal(exact.xi.size)
    print("exact expected returns:", exact.J)
    print("\nepisodes   rel. error xi   rel. error H_o v")
    for batch in (100, 1000, 10_000, 100_000):
        buf = sample_trajectories(env, pols, params, batch=batch, seed=batch, gamma=0.9)
        gae_advantages(buf)
        est = ScoreFunctionEstimator(buf, pols, params)
        ex = np.linalg.norm(est.xi() - exact.xi) / np.linalg.norm(exact.xi)
        eh = np.linalg.norm(est.offdiag_hvp(v) - exact.hvp(v)) / np.linalg.norm(exact.hvp(v))
        print(f"{batch:8d}   {ex:12.4f}   {eh:14.4f}")


if __name__ == "__main__":
    main()
