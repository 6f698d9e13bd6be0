from __future__ import annotations

import os
from pathlib import Path

import numpy as np
import pytest

from pcgd.cli.__main__ import main
from pcgd.cli.checkpoint import Checkpoint, CheckpointError, decode, encode, load_checkpoint, save_checkpoint
from pcgd.cli.config import ConfigError, parse_config, parse_config_text
from pcgd.cli.plotdata import emit_plot_data, moving_average
from pcgd.cli.runner import METRICS_SCHEMA, OUTPUT_ROOT_ENV, read_metrics, run_analysis_sweep, run_experiment
from pcgd.cli.tournament import Population, RandomAgent, StandAgent, load_population, tournament, write_report
from pcgd.envs import ElectricityMarket, MarkovSoccer
from pcgd.game import ContractError

CONFIGS = Path(__file__).resolve().parent.parent / "configs"

BENCH = """
[experiment]
kind = bench
seed = {seed}
epochs = {epochs}
checkpoint_every = {every}

[game]
name = four_player

[optimizer]
method = {method}
eta = {eta}
"""

TINY_SOCCER = """
[experiment]
kind = marl
seed = 3
epochs = {epochs}
checkpoint_every = 2

[env]
name = soccer
width = 4
height = 4
max_steps = 30

[policy]
hidden = 8

[marl]
batch = 4
gamma = 0.99
lam = 0.95
baseline = {baseline}

[optimizer]
method = pcgd
eta = 0.05
"""


def bench(seed=0, epochs=50, method="pcgd", eta=1.0, every=0):
    return parse_config_text(BENCH.format(seed=seed, epochs=epochs, method=method, eta=eta, every=every))


def rows_without_wall(path):
    lines = Path(path).read_text().splitlines()
    header = lines[1].split(",")
    w = header.index("wall_ms")
    return [lines[0], lines[1]] + [",".join(c for k, c in enumerate(l.split(",")) if k != w) for l in lines[2:]]


# config

def test_unknown_key_reports_line():
    text = "[experiment]\nkind = bench\n\n[optimizer]\nmethod = pcgd\nstep_size = 0.1\n"
    with pytest.raises(ConfigError, match=r"cfg\.ini:6: unknown key 'step_size' in \[optimizer\]"):
        parse_config_text(text, "cfg.ini")


def test_unknown_section_and_missing_kind():
    with pytest.raises(ConfigError, match="unknown section"):
        parse_config_text("[experiment]\nkind = bench\n[solver]\nx = 1\n")
    with pytest.raises(ConfigError, match="kind"):
        parse_config_text("[experiment]\nseed = 1\n")


@pytest.mark.parametrize("bad", ["eta = -1", "eta = 0", "method = newton", "cg_eps = -1e-3"])
def test_bad_optimizer_values(bad):
    with pytest.raises(ConfigError):
        parse_config_text(f"[experiment]\nkind = bench\n[optimizer]\n{bad}\n")


def test_minimal_bench_config_is_valid():
    cfg = bench(epochs=1000)
    assert cfg.kind == "bench" and cfg.epochs == 1000
    assert cfg.section("optimizer")["eta"] == 1.0
    assert cfg.section("game")["name"] == "four_player"


@pytest.mark.parametrize("path", sorted(CONFIGS.glob("*.ini")), ids=lambda p: p.stem)
def test_shipped_configs_parse(path):
    cfg = parse_config(path)
    for name in cfg.sections:
        cfg.section(name)


# bench runs

def test_four_player_run_converges(tmp_path):
    res = run_experiment(bench(epochs=1000), out=tmp_path)
    cols, data = read_metrics(res.metrics)
    assert data.shape == (1000, len(cols))
    assert data[-1, cols.index("theta_norm")] < 1e-6
    assert data[:, cols.index("cg_iterations")].min() >= 0


def test_four_player_simgd_norm_increases(tmp_path):
    res = run_experiment(bench(epochs=200, method="simgd", eta=0.1), out=tmp_path)
    cols, data = read_metrics(res.metrics)
    norms = data[:, cols.index("theta_norm")]
    assert np.all(np.diff(norms) > 0)


def test_rerun_is_identical_except_wall_clock(tmp_path):
    a = run_experiment(bench(seed=5), out=tmp_path / "a")
    b = run_experiment(bench(seed=5), out=tmp_path / "b")
    assert rows_without_wall(a.metrics) == rows_without_wall(b.metrics)
    assert load_checkpoint(a.final_checkpoint).arrays.keys() == load_checkpoint(b.final_checkpoint).arrays.keys()
    c = run_experiment(bench(seed=6), out=tmp_path / "c")
    assert rows_without_wall(a.metrics) != rows_without_wall(c.metrics)


def test_bench_resume_matches_uninterrupted_run(tmp_path):
    full = run_experiment(bench(epochs=60, every=20), out=tmp_path / "full")
    part = run_experiment(bench(epochs=20, every=20), out=tmp_path / "part")
    resumed = run_experiment(bench(epochs=60, every=20), out=tmp_path / "part",
                             resume=tmp_path / "part" / "checkpoints" / "step_000020.ckpt")
    assert part.steps == 20
    assert rows_without_wall(full.metrics) == rows_without_wall(resumed.metrics)
    np.testing.assert_array_equal(full.theta, resumed.theta)


def test_resume_rejects_mismatched_checkpoint(tmp_path):
    run_experiment(bench(epochs=4, every=2), out=tmp_path / "a")
    other = parse_config_text(BENCH.format(seed=0, epochs=4, method="pcgd", eta=1.0, every=0)
                              .replace("four_player", "bilinear"))
    with pytest.raises(CheckpointError):
        run_experiment(other, out=tmp_path / "b", resume=tmp_path / "a" / "checkpoints" / "final.ckpt")
    with pytest.raises(CheckpointError):
        run_experiment(bench(seed=1, epochs=4), out=tmp_path / "c",
                       resume=tmp_path / "a" / "checkpoints" / "final.ckpt")


def test_output_root_env(tmp_path, monkeypatch):
    monkeypatch.setenv(OUTPUT_ROOT_ENV, str(tmp_path))
    res = run_experiment(bench(epochs=3), out="rel/run")
    assert res.metrics == tmp_path / "rel" / "run" / "metrics.csv"
    assert res.metrics.read_text().splitlines()[0] == METRICS_SCHEMA


# marl runs

@pytest.mark.parametrize("baseline", ["zero", "tabular", "mlp"])
def test_tiny_marl_run_and_resume(tmp_path, baseline):
    cfg = lambda epochs: parse_config_text(TINY_SOCCER.format(epochs=epochs, baseline=baseline))
    full = run_experiment(cfg(6), out=tmp_path / "full")
    assert full.sampling_passes == 6
    run_experiment(cfg(2), out=tmp_path / "part")
    resumed = run_experiment(cfg(6), out=tmp_path / "part",
                             resume=tmp_path / "part" / "checkpoints" / "step_000002.ckpt")
    assert rows_without_wall(full.metrics) == rows_without_wall(resumed.metrics)
    a, b = load_checkpoint(full.final_checkpoint), load_checkpoint(resumed.final_checkpoint)
    assert a.arrays.keys() == b.arrays.keys()
    for k in a.arrays:
        np.testing.assert_array_equal(a.arrays[k], b.arrays[k])


# checkpoints

def sample_checkpoint():
    return Checkpoint((3, 2), "bench:test", 7, 11, {"theta": np.arange(5.0), "keys": np.array(["(0, 1)", "x"])})


def test_checkpoint_round_trip():
    ck = decode(encode(sample_checkpoint()))
    assert ck.dims == (3, 2) and ck.arch == "bench:test" and ck.seed == 7 and ck.step == 11
    np.testing.assert_array_equal(ck.theta, np.arange(5.0))
    assert list(ck.arrays["keys"]) == ["(0, 1)", "x"]


def test_checkpoint_rejects_corruption():
    raw = encode(sample_checkpoint())
    for bad in (raw[:-3], raw + b"\0", b"NOTACKPT" + raw[8:]):
        with pytest.raises(CheckpointError):
            decode(bad)
    wrong = Checkpoint((3, 3), "x", 0, 0, {"theta": np.zeros(5)})
    with pytest.raises(CheckpointError):
        decode(encode(wrong))


def test_interrupted_save_keeps_previous_file(tmp_path, monkeypatch):
    path = tmp_path / "a.ckpt"
    save_checkpoint(path, sample_checkpoint())
    newer = sample_checkpoint()
    newer.step = 99

    def crash(src, dst):
        raise OSError("simulated crash before rename")

    monkeypatch.setattr(os, "replace", crash)
    with pytest.raises(OSError):
        save_checkpoint(path, newer)
    monkeypatch.undo()
    assert load_checkpoint(path).step == 11


# analysis sweep

SWEEP = """
[experiment]
kind = analysis-sweep

[sweep]
seeds = 5
a_scales = 1, 1000
eta_factors = {factors}
methods = pcgd, simgd
"""


def test_sweep_rows(tmp_path):
    path = run_analysis_sweep(parse_config_text(SWEEP.format(factors="0.5, 0.9")), out=tmp_path)
    lines = path.read_text().splitlines()
    assert lines[1] == "seed,a_scale,eta,method,rho,bound,converges"
    rows = [l.split(",") for l in lines[2:]]
    assert len(rows) == 5 * 2 * 2 * 2
    assert all(r[6] == "1" for r in rows if r[3] == "pcgd")
    assert any(r[6] == "0" for r in rows if r[3] == "simgd" and float(r[1]) == 1000)


def test_empty_eta_grid_gives_header_only(tmp_path):
    path = run_analysis_sweep(parse_config_text(SWEEP.format(factors="")), out=tmp_path)
    assert len(path.read_text().splitlines()) == 2


# tournaments

def test_tournament_wins_sum_to_episodes():
    env = MarkovSoccer(4, 4, max_steps=50)
    a, b = Population("a", [RandomAgent(5)]), Population("b", [RandomAgent(5)])
    rep = tournament(a, b, ["1v3", "2v2", "3v1"], env, 100, seed=0)
    for comp in ("1v3", "2v2", "3v1"):
        assert sum(rep.wins_by_population(comp).values()) == pytest.approx(100)


def test_identical_agents_win_equally(tmp_path):
    res = run_experiment(parse_config_text(TINY_SOCCER.format(epochs=1, baseline="zero")), out=tmp_path)
    env = MarkovSoccer(4, 4, max_steps=30)
    pop = load_population(str(res.final_checkpoint), "ckpt", env)
    rep = tournament(pop, pop, ["4v0"], env, 2000, seed=1)
    sigma = np.sqrt(2000 * 0.25 * 0.75)
    for row in rep.rows:
        assert abs(row["wins"] - 500) < 3 * sigma
    out = write_report(rep, tmp_path / "t.csv")
    assert out.read_text().splitlines()[1] == "composition,agent,population,wins,episodes"


def test_standing_agent_rarely_wins():
    env = MarkovSoccer(8, 8)
    stand, rand = Population("stand", [StandAgent()]), Population("random", [RandomAgent(5)])
    rep = tournament(stand, rand, ["1v3"], env, 400, seed=0)
    assert rep.wins_by_population("1v3")["stand"] / 400 < 0.15


def test_population_rejects_mismatched_checkpoint(tmp_path):
    res = run_experiment(parse_config_text(TINY_SOCCER.format(epochs=1, baseline="zero")), out=tmp_path)
    with pytest.raises(CheckpointError):
        load_population(str(res.final_checkpoint), "x", ElectricityMarket())
    run = run_experiment(bench(epochs=1), out=tmp_path / "bench")
    with pytest.raises(CheckpointError):
        load_population(str(run.final_checkpoint), "x", MarkovSoccer(4, 4))


# plot data

def test_moving_average():
    np.testing.assert_allclose(moving_average([1, 2, 3, 4], 2), [1, 1.5, 2.5, 3.5])
    np.testing.assert_array_equal(moving_average([1, 2], 1), [1, 2])
    with pytest.raises(ContractError):
        moving_average([1, 2], 3)


def test_plot_data_merges_runs(tmp_path):
    a = run_experiment(bench(epochs=5), out=tmp_path / "a")
    b = run_experiment(bench(epochs=5, method="simgd", eta=0.1), out=tmp_path / "b")
    rows = emit_plot_data([("pcgd", a.metrics), ("simgd", b.metrics)], ["theta_norm"], out=tmp_path / "p.csv")
    assert {r[0] for r in rows} == {"pcgd", "simgd"} and len(rows) == 10
    assert (tmp_path / "p.csv").read_text().startswith("# pcgd-plotdata v1\nmethod,step,metric,value\n")
    wall = emit_plot_data([("pcgd", a.metrics)], ["theta_norm"], x="wall_ms")
    xs = [r[1] for r in wall]
    assert xs == sorted(xs)


def test_plot_data_rejects_mixed_layouts(tmp_path):
    a = run_experiment(bench(epochs=2), out=tmp_path / "a")
    two = parse_config_text(BENCH.format(seed=0, epochs=2, method="pcgd", eta=1.0, every=0)
                            .replace("four_player", "bilinear"))
    b = run_experiment(two, out=tmp_path / "b")
    with pytest.raises(ContractError):
        emit_plot_data([("a", a.metrics), ("b", b.metrics)], ["theta_norm"])


# command line

def test_main_verbs(tmp_path, capsys):
    cfg = tmp_path / "b.ini"
    cfg.write_text(BENCH.format(seed=0, epochs=3, method="pcgd", eta=1.0, every=0))
    assert main(["run", str(cfg), "--out", str(tmp_path / "r"), "--seed", "2"]) == 0
    assert (tmp_path / "r" / "metrics.csv").is_file()
    sweep = tmp_path / "s.ini"
    sweep.write_text(SWEEP.format(factors="0.9"))
    assert main(["analyze", str(sweep), "--out", str(tmp_path / "s")]) == 0
    plot = tmp_path / "p.ini"
    plot.write_text(f"[experiment]\nkind = plotdata\n[plotdata]\nruns = x:{tmp_path / 'r' / 'metrics.csv'}\n")
    assert main(["plotdata", str(plot), "--out", str(tmp_path / "p")]) == 0
    tour = tmp_path / "t.ini"
    tour.write_text("[experiment]\nkind = tournament\n[env]\nname = soccer\nwidth = 4\nheight = 4\n"
                    "[tournament]\npopulation_a = scripted:stand\npopulation_b = scripted:random\nepisodes = 10\n")
    assert main(["tournament", str(tour), "--out", str(tmp_path / "t")]) == 0
    assert (tmp_path / "t" / "tournament.csv").is_file()


def test_main_reports_errors(tmp_path, capsys):
    cfg = tmp_path / "bad.ini"
    cfg.write_text("[experiment]\nkind = bench\n[optimizer]\neta = -1\n")
    assert main(["run", str(cfg)]) == 2
    assert "eta" in capsys.readouterr().err
    assert main(["run", str(tmp_path / "missing.ini")]) == 2
