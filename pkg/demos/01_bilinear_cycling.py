"""Simultaneous gradient descent spirals outward on x*y; PCGD spirals in.

Run: python demos/01_bilinear_cycling.py
"""

from __future__ import annotations

import numpy as np

from pcgd import OptimizerConfig, bilinear_game, run


def main():
    game = bilinear_game(1.0)
    theta0 = np.array([1.0, 1.0])
    print("step  simgd |theta|  pcgd |theta|   (eta = 0.5)")
    sim, _ = run(game, theta0, OptimizerConfig("simgd", 0.5), 40)
    pc, _ = run(game, theta0, OptimizerConfig("pcgd", 0.5), 40)
    for k in range(0, 41, 5):
        print(f"{k:4d}  {np.linalg.norm(sim[k]):12.4g}  {np.linalg.norm(pc[k]):12.4g}")

    # the PCGD map contracts by exactly 1/sqrt(1 + eta^2) per step here
    print("\neta    observed rate    1/sqrt(1+eta^2)")
    for eta in (0.1, 0.5, 1.0, 5.0):
        its, _ = run(game, theta0, OptimizerConfig("pcgd", eta, cg_eps=1e-12), 5)
        rate = np.linalg.norm(its[5]) / np.linalg.norm(its[4])
        print(f"{eta:4.1f}   {rate:.10f}     {1 / np.sqrt(1 + eta**2):.10f}")


if __name__ == "__main__":
    main()
