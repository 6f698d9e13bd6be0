"""Training loops and the convergence sweep behind the ``run`` and ``analyze`` verbs."""

from __future__ import annotations

import csv
import os
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..analysis import TOL_MARGIN, assemble_hessian, classify_dense, simgd_update_jacobian, theorem_step_bound
from ..autodiff import MlpPolicy
from ..envs import ElectricityMarket, MarkovSoccer, matching_pennies, two_state_game
from ..game import ContractError, Game, NumericError
from ..games import bilinear_game, four_player_example, random_quadratic_polymatrix
from ..linalg import spectral_radius
from ..marl import MlpBaseline, RlGameAdapter, TabularBaseline, ZeroBaseline
from ..optimizers import OptimizerConfig, StepState, step
from .checkpoint import Checkpoint, CheckpointError, load_checkpoint, save_checkpoint
from .config import ExperimentConfig

OUTPUT_ROOT_ENV = "PCGD_OUTPUT_ROOT"
METRICS_SCHEMA = "# pcgd-metrics v1"
SWEEP_SCHEMA = "# pcgd-sweep v1"
SWEEP_COLUMNS = ["seed", "a_scale", "eta", "method", "rho", "bound", "converges"]


def metrics_columns(n_players: int) -> list[str]:
    return (["step", "wall_ms"] + [f"loss_{i}" for i in range(n_players)]
            + ["xi_norm", "step_norm", "cg_iterations", "cg_residual", "eta", "theta_norm"])


def resolve_out(out: str | os.PathLike) -> Path:
    """Relative output paths live under ``$PCGD_OUTPUT_ROOT`` when it is set."""
    path = Path(out)
    root = os.environ.get(OUTPUT_ROOT_ENV)
    if root and not path.is_absolute():
        path = Path(root) / path
    return path


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


# construction


def build_optimizer(cfg: ExperimentConfig) -> OptimizerConfig:
    o = cfg.section("optimizer")
    return OptimizerConfig(method=o["method"], eta=o["eta"], sga_lambda=o["sga_lambda"], cg_eps=o["cg_eps"],
                           cg_max_iter=o["cg_max_iter"] or None, warm_start=o["warm_start"])


def build_bench(cfg: ExperimentConfig) -> tuple[Game, np.ndarray, str]:
    g = cfg.section("game")
    if g["name"] == "bilinear":
        game = bilinear_game(g["coupling"])
    elif g["name"] == "four_player":
        game = four_player_example()
    else:
        game = random_quadratic_polymatrix(g["game_seed"], g["dims"], g["s_scale"], g["a_scale"])
    if g["theta0"]:
        theta = np.array(g["theta0"], dtype=np.float64)
        game.partition.check(theta, "theta0")
    else:
        theta = np.random.default_rng(cfg.seed).standard_normal(game.dim)
        theta *= g["init_scale"] / np.linalg.norm(theta)
    return game, theta, f"bench:{g['name']}"


def build_env(cfg: ExperimentConfig):
    e = cfg.section("env")
    if e["name"] == "soccer":
        return MarkovSoccer(e["width"], e["height"], e["reward_variant"], e["max_steps"])
    if e["name"] == "market":
        if len(e["base_demand"]) != len(e["thresholds"]):
            raise ContractError("base_demand and thresholds need one entry per bus")
        return ElectricityMarket(base_demand=e["base_demand"], thresholds=e["thresholds"],
                                 learner_costs=e["learner_costs"], end_probability=e["end_probability"])
    if e["name"] == "two_state":
        return two_state_game(e["env_seed"], e["horizon"])
    return matching_pennies()


def build_policies(cfg: ExperimentConfig, env) -> list[MlpPolicy]:
    p = cfg.section("policy")
    out = []
    for i in range(env.n_players):
        if env.action_kind == "continuous":
            out.append(MlpPolicy([env.obs_dims[i], *p["hidden"], 1], p["activation"], "gaussian", p["sigma"]))
        else:
            out.append(MlpPolicy([env.obs_dims[i], *p["hidden"], env.n_actions[i]], p["activation"]))
    return out


def policy_arch(env_name: str, policies) -> str:
    return f"marl:{env_name};" + ";".join(pol.describe() for pol in policies)


def policies_from_arch(arch: str) -> tuple[str, list[MlpPolicy]]:
    if not arch.startswith("marl:"):
        raise CheckpointError(f"checkpoint does not hold policies (arch {arch!r})")
    head, *descs = arch.split(";")
    return head[len("marl:"):], [MlpPolicy.from_description(d) for d in descs]


def build_marl(cfg: ExperimentConfig, workers: int) -> tuple[RlGameAdapter, np.ndarray, str]:
    env = build_env(cfg)
    policies = build_policies(cfg, env)
    m = cfg.section("marl")
    baselines = []
    for i in range(env.n_players):
        if m["baseline"] == "tabular":
            baselines.append(TabularBaseline())
        elif m["baseline"] == "mlp":
            baselines.append(MlpBaseline(env.obs_dims[i], lr=m["baseline_lr"], epochs=m["baseline_epochs"],
                                         seed=cfg.seed * 1000 + i))
        else:
            baselines.append(ZeroBaseline())
    game = RlGameAdapter(env, policies, baselines, batch=m["batch"], gamma=m["gamma"], lam=m["lam"],
                         seed=cfg.seed, workers=workers, zero_interaction=m["zero_interaction"])
    rng = np.random.default_rng([cfg.seed, 7])
    theta = np.concatenate([pol.init(rng) for pol in policies])
    return game, theta, policy_arch(cfg.section("env")["name"], policies)


# training


@dataclass
class RunResult:
    metrics: Path
    final_checkpoint: Path
    theta: np.ndarray
    steps: int
    sampling_passes: int | None = None


def _read_rows_through(path: Path, last_step: int, header: list[str]) -> list[str]:
    """Existing metric rows up to ``last_step``; a fresh header when there is no file yet."""
    if not path.is_file():
        return header
    lines = path.read_text(encoding="utf-8").splitlines()
    if lines[:2] != header:
        raise CheckpointError(f"cannot resume into {path}: its header differs from this run")
    keep = lines[:2]
    for line in lines[2:]:
        if int(line.split(",", 1)[0]) <= last_step:
            keep.append(line)
    return keep


def run_experiment(cfg: ExperimentConfig, out=None, seed: int | None = None, workers: int | None = None,
                   resume=None) -> RunResult:
    """Run a ``bench`` or ``marl`` config, writing ``metrics.csv`` and checkpoints under the output dir."""
    if seed is not None:
        cfg.seed = int(seed)
    workers = workers or cfg.workers
    out_dir = resolve_out(out or cfg.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    if cfg.kind == "bench":
        game, theta, arch = build_bench(cfg)
    elif cfg.kind == "marl":
        game, theta, arch = build_marl(cfg, workers)
    else:
        raise ContractError(f"'run' does not handle experiment kind {cfg.kind!r}")
    opt = build_optimizer(cfg)
    state = StepState()
    adapter = game if isinstance(game, RlGameAdapter) else None
    columns = metrics_columns(game.n_players)
    metrics = out_dir / "metrics.csv"
    start = 0
    if resume is not None:
        ck = load_checkpoint(resume)
        if ck.dims != game.partition.dims or ck.arch != arch:
            raise CheckpointError(f"checkpoint ({ck.arch}, {ck.dims}) does not match config ({arch}, "
                                  f"{game.partition.dims})")
        if ck.seed != cfg.seed:
            raise CheckpointError(f"checkpoint seed {ck.seed} differs from run seed {cfg.seed}")
        theta, start = ck.theta.copy(), ck.step
        state.step = start
        if "warm_start" in ck.arrays:
            state.previous_solution = ck.arrays["warm_start"].copy()
        if adapter is not None:
            adapter.load_state_arrays(ck.arrays)
        lines = _read_rows_through(metrics, start, [METRICS_SCHEMA, ",".join(columns)])
    else:
        lines = [METRICS_SCHEMA, ",".join(columns)]

    def checkpoint(path, k):
        arrays = {"theta": theta}
        if state.previous_solution is not None:
            arrays["warm_start"] = state.previous_solution
        if adapter is not None:
            arrays.update(adapter.state_arrays())
        return save_checkpoint(path, Checkpoint(game.partition.dims, arch, cfg.seed, k, arrays))

    ckpt_dir = out_dir / "checkpoints"
    with open(metrics, "w", encoding="utf-8", newline="") as fh:
        fh.write("\n".join(lines) + "\n")
        for k in range(start + 1, cfg.epochs + 1):
            t0 = time.perf_counter()
            losses = game.losses(theta)
            theta, rep = step(game, theta, opt, state)
            if adapter is not None:
                adapter.update_baselines()
            wall = (time.perf_counter() - t0) * 1000.0
            if not np.all(np.isfinite(theta)):
                raise NumericError(f"parameters became non-finite at step {k}")
            row = [k, round(wall, 3), *losses, rep.xi_norm, rep.step_norm, rep.cg_iterations,
                   rep.cg_residual, opt.eta, float(np.linalg.norm(theta))]
            fh.write(",".join(_fmt(x) for x in row) + "\n")
            fh.flush()
            if cfg.checkpoint_every and k % cfg.checkpoint_every == 0:
                checkpoint(ckpt_dir / f"step_{k:06d}.ckpt", k)
    final = checkpoint(ckpt_dir / "final.ckpt", max(cfg.epochs, start))
    return RunResult(metrics, final, theta, cfg.epochs,
                     adapter.sampling_passes if adapter is not None else None)


def read_metrics(path) -> tuple[list[str], np.ndarray]:
    """Parse a metrics CSV into ``(columns, rows)``."""
    with open(path, encoding="utf-8", newline="") as fh:
        first = fh.readline().rstrip("\n")
        if first != METRICS_SCHEMA:
            raise ContractError(f"{path}: expected schema line {METRICS_SCHEMA!r}, got {first!r}")
        reader = csv.reader(fh)
        columns = next(reader)
        rows = [[float(x) for x in r] for r in reader]
    return columns, np.array(rows, dtype=np.float64).reshape(len(rows), len(columns))


# analysis sweep


def run_analysis_sweep(cfg: ExperimentConfig, out=None, seed: int | None = None) -> Path:
    """One row per (game seed, a_scale, eta, method) with the local convergence verdict."""
    s = cfg.section("sweep")
    out_dir = resolve_out(out or cfg.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / "sweep.csv"
    first = s["first_seed"] if seed is None else int(seed)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(SWEEP_SCHEMA + "\n" + ",".join(SWEEP_COLUMNS) + "\n")
        for game_seed in range(first, first + s["seeds"]):
            for a in s["a_scales"]:
                game = random_quadratic_polymatrix(game_seed, s["dims"], s["s_scale"], a)
                dense = assemble_hessian(game, np.zeros(game.dim))
                bound = theorem_step_bound(dense.S, s["bound_factor"])
                etas = s["etas"] or [f * bound for f in s["eta_factors"]]
                for eta in etas:
                    for method in s["methods"]:
                        if method == "pcgd":
                            rho = classify_dense(dense, eta).rho
                        else:
                            rho = spectral_radius(simgd_update_jacobian(dense.H, eta), tol=1e-10).value
                        conv = int(rho < 1.0 - TOL_MARGIN)
                        fh.write(",".join([str(game_seed), _fmt(a), _fmt(eta), method, _fmt(rho),
                                           _fmt(bound), str(conv)]) + "\n")
    return path
