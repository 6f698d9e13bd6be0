"""Electricity-market bidding game with merit-order (single-zone) clearing.

Three learning generators bid their maximum capacity each step; six
high-cost baseline units (one per bus) guarantee feasibility.  The market is
cleared copperplate, so every bus sees the same price, and a bus's demand is
halved on the next step whenever that price exceeds the bus's threshold.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..game import ContractError
from .base import MultiAgentEnv

BASE_DEMAND = (150.0, 300.0, 280.0, 250.0, 200.0, 300.0)
LMP_THRESHOLDS = (25.0, 25.0, 25.0, 35.0, 30.0, 25.0)
LEARNER_BUSES = (0, 2, 4)
LEARNER_COSTS = (20.0, 22.0, 24.0)
BASELINE_COST = 35.0
BASELINE_CAPACITY = 1000.0
BID_CAP = 10_000.0
END_PROBABILITY = 0.2
REWARD_SCALE = 50.0


class InfeasibleMarket(RuntimeError):
    pass


@dataclass(frozen=True)
class GeneratorSpec:
    bus: int
    cost: float
    capacity: float
    learning: bool = False

    def __post_init__(self):
        if self.cost < 0:
            raise ContractError("marginal cost must be non-negative")
        if self.capacity < 0:
            raise ContractError("capacity must be non-negative")


def market_clearing(specs, demands):
    """Merit-order dispatch of ``specs`` against the total of ``demands``.

    Units are dispatched in ascending marginal cost; units sharing a cost
    level split the residual demand in proportion to capacity.  The price is
    the cost of the last level with positive dispatch (0 when demand is 0).
    Returns ``(dispatch, price)``.
    """
    total = float(np.sum(demands))
    if total < 0:
        raise ContractError("demand must be non-negative")
    costs = np.array([g.cost for g in specs], dtype=np.float64)
    caps = np.array([g.capacity for g in specs], dtype=np.float64)
    dispatch = np.zeros(len(specs))
    if total == 0.0:
        return dispatch, 0.0
    if caps.sum() < total:
        raise InfeasibleMarket(f"capacity {caps.sum()} below demand {total}")
    remaining = total
    price = 0.0
    for level in np.unique(costs):
        idx = np.flatnonzero((costs == level) & (caps > 0))
        if idx.size == 0:
            continue
        level_cap = caps[idx].sum()
        if remaining >= level_cap:
            dispatch[idx] = caps[idx]
            remaining -= level_cap
        else:
            dispatch[idx] = caps[idx] * (remaining / level_cap)
            remaining = 0.0
        price = float(level)
        if remaining <= 0.0:
            break
    # absorb rounding so dispatch sums to demand exactly
    dispatch[np.argmax(dispatch)] += total - dispatch.sum()
    return dispatch, price


@dataclass(frozen=True)
class MarketState:
    flags: tuple[int, ...]

    def demands(self, base=BASE_DEMAND) -> np.ndarray:
        base = np.asarray(base, dtype=np.float64)
        return np.where(np.asarray(self.flags, dtype=bool), base / 2.0, base)


class ElectricityMarket(MultiAgentEnv):
    action_kind = "continuous"

    def __init__(self, base_demand=BASE_DEMAND, thresholds=LMP_THRESHOLDS,
                 learner_buses=LEARNER_BUSES, learner_costs=LEARNER_COSTS,
                 baseline_cost=BASELINE_COST, baseline_capacity=BASELINE_CAPACITY,
                 end_probability=END_PROBABILITY, reward_scale=REWARD_SCALE, bid_cap=BID_CAP,
                 max_steps=1000):
        self.base_demand = tuple(float(x) for x in base_demand)
        self.thresholds = tuple(float(x) for x in thresholds)
        if len(self.base_demand) != len(self.thresholds):
            raise ContractError("one threshold per bus")
        if len(learner_buses) != len(learner_costs):
            raise ContractError("one cost per learner")
        if not 0 < end_probability <= 1:
            raise ContractError("end probability must lie in (0, 1]")
        self.learner_buses = tuple(int(b) for b in learner_buses)
        self.learner_costs = tuple(float(c) for c in learner_costs)
        self.baseline_cost = float(baseline_cost)
        self.baseline_capacity = float(baseline_capacity)
        self.end_probability = float(end_probability)
        self.reward_scale = float(reward_scale)
        self.bid_cap = float(bid_cap)
        self.max_steps = int(max_steps)
        self.n_buses = len(self.base_demand)
        self.n_players = len(self.learner_buses)
        self.obs_dims = (self.n_buses,) * self.n_players
        self.n_actions = (1,) * self.n_players

    def config(self):
        return {"kind": "market", "learner_costs": list(self.learner_costs),
                "end_probability": self.end_probability}

    def reset(self, rng):
        return MarketState(tuple(int(f) for f in rng.integers(0, 2, self.n_buses)))

    def observe(self, state, player):
        return np.asarray(state.flags, dtype=np.float64)

    def generators(self, bids) -> list[GeneratorSpec]:
        gens = [GeneratorSpec(b, c, float(np.clip(q, 0.0, self.bid_cap)), True)
                for b, c, q in zip(self.learner_buses, self.learner_costs, bids)]
        gens += [GeneratorSpec(k, self.baseline_cost, self.baseline_capacity) for k in range(self.n_buses)]
        return gens

    def clear(self, state: MarketState, bids):
        bids = np.asarray(bids, dtype=np.float64).ravel()
        if bids.shape != (self.n_players,) or not np.all(np.isfinite(bids)):
            raise ContractError("need one finite capacity bid per learner")
        gens = self.generators(bids)
        dispatch, price = market_clearing(gens, state.demands(self.base_demand))
        return gens, dispatch, price

    def step(self, state, actions, rng):
        gens, dispatch, price = self.clear(state, actions)
        learner = dispatch[: self.n_players]
        rewards = learner * (price - np.asarray(self.learner_costs)) / self.reward_scale
        flags = tuple(int(price > th) for th in self.thresholds)
        done = bool(rng.random() < self.end_probability)
        return MarketState(flags), rewards, done

    def state_key(self, state):
        return state.flags
