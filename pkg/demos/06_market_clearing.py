"""Merit-order clearing and the bidding game's reward.

Run: python demos/06_market_clearing.py
"""

from __future__ import annotations

import numpy as np

from pcgd.envs import ElectricityMarket, GeneratorSpec, MarketState, market_clearing


def main():
    gens = [GeneratorSpec(0, 10.0, 100.0), GeneratorSpec(1, 35.0, 1000.0)]
    dispatch, price = market_clearing(gens, [150.0])
    print("two units, demand 150 -> dispatch", dispatch, "price", price)

    env = ElectricityMarket()
    state = MarketState((0,) * 6)
    for bids in ([0.0, 0.0, 0.0], [200.0, 0.0, 0.0], [400.0, 400.0, 400.0]):
        nxt, rewards, _ = env.step(state, bids, np.random.default_rng(0))
        _, d, p = env.clear(state, bids)
        print(f"bids {bids}: learner dispatch {np.round(d[:3], 1)}, price {p}, "
              f"scaled rewards {np.round(rewards, 2)}, next flags {nxt.flags}")

    rng = np.random.default_rng(1)
    lengths = []
    for _ in range(10_000):
        s, T, done = env.reset(rng), 0, False
        while not done:
            s, _, done = env.step(s, [100.0] * 3, rng)
            T += 1
        lengths.append(T)
    print(f"mean episode length over 10000 episodes: {np.mean(lengths):.3f}")


if __name__ == "__main__":
    main()
