"""Head-to-head evaluation of two agent populations in a four-seat game."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..autodiff import MlpPolicy
from ..envs.soccer import STAND
from ..game import ContractError
from ..marl.buffer import _sample_action
from .checkpoint import CheckpointError, load_checkpoint
from .config import ExperimentConfig
from .runner import build_env, policies_from_arch, resolve_out

TOURNAMENT_SCHEMA = "# pcgd-tournament v1"


class PolicyAgent:
    def __init__(self, policy: MlpPolicy, params: np.ndarray):
        self.policy = policy
        self.layers = policy.layers(params)

    def act(self, env, state, seat, rng):
        out = self.policy.apply_layers(self.layers, env.observe(state, seat))
        return _sample_action(self.policy, out, rng)[0]


class StandAgent:
    def act(self, env, state, seat, rng):
        return STAND


class RandomAgent:
    def __init__(self, n_actions: int):
        self.n_actions = n_actions

    def act(self, env, state, seat, rng):
        return int(rng.integers(self.n_actions))


@dataclass
class Population:
    label: str
    agents: list  # agent k of a lineup uses agents[k % len(agents)]

    def agent(self, k: int):
        return self.agents[k % len(self.agents)]


def load_population(spec: str, label: str, env) -> Population:
    """``scripted:stand``, ``scripted:random`` or a checkpoint path."""
    if spec == "scripted:stand":
        return Population(label, [StandAgent()])
    if spec == "scripted:random":
        return Population(label, [RandomAgent(env.n_actions[0])])
    ck = load_checkpoint(spec)
    _, policies = policies_from_arch(ck.arch)
    for pol, k in zip(policies, range(env.n_players)):
        if pol.obs_dim != env.obs_dims[k] or (pol.head == "categorical" and pol.n_outputs != env.n_actions[k]):
            raise CheckpointError(f"{spec}: policy {pol.describe()} does not fit this environment")
    params = np.split(ck.theta, np.cumsum(ck.dims)[:-1])
    return Population(label, [PolicyAgent(pol, th) for pol, th in zip(policies, params)])


@dataclass
class TournamentReport:
    episodes: int
    rows: list[dict] = field(default_factory=list)  # composition, agent, population, wins

    def wins_by_population(self, composition: str) -> dict[str, float]:
        out: dict[str, float] = {}
        for r in self.rows:
            if r["composition"] == composition:
                out[r["population"]] = out.get(r["population"], 0.0) + r["wins"]
        return out


def _lineup(composition: str, a: Population, b: Population) -> list[tuple[Population, int]]:
    n_a, n_b = (int(x) for x in composition.split("v"))
    return [(a, k) for k in range(n_a)] + [(b, k) for k in range(n_b)]


def play_episode(env, agents, rng) -> np.ndarray:
    """Total reward per seat for one episode with ``agents[seat]`` in each seat."""
    state = env.reset(rng)
    total = np.zeros(env.n_players)
    for _ in range(env.max_steps):
        acts = [agents[s].act(env, state, s, rng) for s in range(env.n_players)]
        state, rewards, done = env.step(state, acts, rng)
        total += rewards
        if done:
            break
    return total


def tournament(pop_a: Population, pop_b: Population, compositions, env, episodes: int,
               seed: int) -> TournamentReport:
    """Play ``episodes`` games per composition; lineup seats are shuffled every episode.

    The highest total reward wins; tied leaders share the win equally.
    """
    if env.n_players != 4:
        raise ContractError("tournaments need a four-player environment")
    report = TournamentReport(episodes)
    for c_index, comp in enumerate(compositions):
        lineup = _lineup(comp, pop_a, pop_b)
        if len(lineup) != 4:
            raise ContractError(f"composition {comp!r} does not fill four seats")
        wins = np.zeros(4)
        for e in range(episodes):
            rng = np.random.default_rng([seed, c_index, e])
            seat_of = rng.permutation(4)  # lineup slot k sits in seat seat_of[k]
            agents = [None] * 4
            for k, (pop, idx) in enumerate(lineup):
                agents[seat_of[k]] = pop.agent(idx)
            total = play_episode(env, agents, rng)
            best = total.max()
            leaders = [k for k in range(4) if total[seat_of[k]] == best]
            for k in leaders:
                wins[k] += 1.0 / len(leaders)
        for k, (pop, idx) in enumerate(lineup):
            report.rows.append({"composition": comp, "agent": k, "population": pop.label, "wins": float(wins[k])})
    return report


def write_report(report: TournamentReport, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(TOURNAMENT_SCHEMA + "\ncomposition,agent,population,wins,episodes\n")
        for r in report.rows:
            fh.write(f"{r['composition']},{r['agent']},{r['population']},{float(r['wins'])!r},{report.episodes}\n")
    return path


def run_tournament(cfg: ExperimentConfig, out=None, seed: int | None = None) -> Path:
    t = cfg.section("tournament")
    env = build_env(cfg)
    if not t["population_a"] or not t["population_b"]:
        raise ContractError("[tournament] needs population_a and population_b")
    a = load_population(t["population_a"], t["label_a"], env)
    b = load_population(t["population_b"], t["label_b"], env)
    report = tournament(a, b, t["compositions"], env, t["episodes"], cfg.seed if seed is None else int(seed))
    return write_report(report, resolve_out(out or cfg.out) / "tournament.csv")
