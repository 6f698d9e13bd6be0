"""Independent reference computations shared by the tests."""

from __future__ import annotations

import itertools

import numpy as np


def brute_force_dispatch_cost(costs, caps, demand, step=1.0):
    """Cheapest way to meet ``demand`` by searching every dispatch on a grid of ``step``."""
    grids = [np.arange(0.0, cap + step / 2, step) for cap in caps[:-1]]
    best = np.inf
    for head in itertools.product(*grids):
        last = demand - sum(head)
        if -1e-9 <= last <= caps[-1] + 1e-9:
            best = min(best, float(np.dot(costs[:-1], head) + costs[-1] * last))
    return best


def random_dispatch_instance(rng, n_gens=4):
    costs = rng.choice(np.arange(5.0, 60.0, 5.0), size=n_gens, replace=True)
    caps = rng.integers(1, 8, size=n_gens).astype(float) * 5.0
    demand = float(rng.integers(0, int(caps.sum()) + 1))
    return costs, caps, demand
