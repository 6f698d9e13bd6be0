"""Four players with pairwise zero-sum bilinear couplings.

The game Hessian is antisymmetric, so its symmetric part vanishes and the
certified step-size bound is infinite.  PCGD converges for every step size
tried while SimGD diverges for every one.

Run: python demos/02_four_player_example.py
"""

from __future__ import annotations

import numpy as np

from pcgd import OptimizerConfig, four_player_example
from pcgd.analysis import assemble_hessian, pcgd_update_jacobian, simgd_update_jacobian, theorem_step_bound
from pcgd.linalg import spectral_radius
from pcgd.optimizers import run_multistart


def main():
    game = four_player_example()
    dense = assemble_hessian(game, np.zeros(4))
    print("game Hessian:\n", dense.H)
    print("eigenvalues:", np.round(np.linalg.eigvals(dense.H), 4))
    print("step bound 1/(4||S||):", theorem_step_bound(dense.S))

    starts = np.random.default_rng(0).standard_normal((4, 100))
    starts /= np.linalg.norm(starts, axis=0)
    print("\neta      rho(pcgd)   steps to 1e-6 (max of 100)   rho(simgd)   steps past 1e6")
    for eta in (0.1, 1.0, 10.0, 100.0):
        rho_p = spectral_radius(pcgd_update_jacobian(dense.H, dense.partition, eta)).value
        rho_s = spectral_radius(simgd_update_jacobian(dense.H, eta)).value
        pc = run_multistart(game, starts, OptimizerConfig("pcgd", eta), 100_000, stop=lambda n: n < 1e-6)
        sg = run_multistart(game, starts, OptimizerConfig("simgd", eta), 100_000, stop=lambda n: n > 1e6)
        print(f"{eta:6.1f}   {rho_p:.5f}     {pc.stopped_at.max():10d}                  {rho_s:8.4f}"
              f"     {sg.stopped_at.max():6d}")


if __name__ == "__main__":
    main()
