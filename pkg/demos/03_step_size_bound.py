"""Spectral radius of the PCGD update map on random quadratic polymatrix games.

Step sizes are multiples of the certified bound 1/(4||S||).  Growing the
competitive (antisymmetric) part of the couplings leaves PCGD stable at the
same step size, while SimGD at that step size becomes unstable.

Run: python demos/03_step_size_bound.py
"""

from __future__ import annotations

import numpy as np

from pcgd import random_quadratic_polymatrix
from pcgd.analysis import assemble_hessian, pcgd_update_jacobian, simgd_update_jacobian, theorem_step_bound
from pcgd.linalg import spectral_radius


def main():
    seeds = range(30)
    print("a_scale  factor   pcgd rho<1   simgd rho<1   max pcgd rho")
    for a in (1.0, 10.0, 100.0, 1000.0):
        for factor in (0.9, 1.8, 4.0):
            ok_p = ok_s = 0
            worst = 0.0
            for seed in seeds:
                base = assemble_hessian(random_quadratic_polymatrix(seed, a_scale=1.0), np.zeros(6))
                eta = factor * theorem_step_bound(base.S)
                dense = assemble_hessian(random_quadratic_polymatrix(seed, a_scale=a), np.zeros(6))
                rho = spectral_radius(pcgd_update_jacobian(dense.H, dense.partition, eta)).value
                worst = max(worst, rho)
                ok_p += rho < 1
                ok_s += spectral_radius(simgd_update_jacobian(dense.H, eta)).value < 1
            print(f"{a:7.0f}  {factor:6.1f}   {ok_p:5d}/{len(seeds)}      {ok_s:5d}/{len(seeds)}      {worst:.4f}")


if __name__ == "__main__":
    main()
