"""A short soccer training run with PCGD and with SimGD, then a tournament.

This is a plumbing demonstration at desk scale, not a reproduction of long
training runs.  Output goes to ./runs/demo_soccer.

Run: python demos/05_soccer_training.py [epochs]
"""

from __future__ import annotations

import sys
from pathlib import Path

import numpy as np

from pcgd.cli.config import parse_config
from pcgd.cli.runner import read_metrics, run_experiment
from pcgd.cli.tournament import load_population, tournament
from pcgd.envs import MarkovSoccer

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def main(epochs: int = 40):
    out = Path("runs/demo_soccer")
    finals = {}
    for method in ("pcgd", "simgd"):
        cfg = parse_config(CONFIGS / "soccer_smoke.ini")
        cfg.epochs = epochs
        cfg.sections["optimizer"]["method"] = method
        res = run_experiment(cfg, out=out / method)
        cols, data = read_metrics(res.metrics)
        cg = data[:, cols.index("cg_iterations")].sum()
        print(f"{method}: {res.sampling_passes} sampling passes, {cg:.0f} CG iterations, "
              f"final losses {np.round(data[-1, 2:6], 3)}")
        finals[method] = res.final_checkpoint
    env = MarkovSoccer(4, 4)
    a = load_population(str(finals["pcgd"]), "pcgd", env)
    b = load_population(str(finals["simgd"]), "simgd", env)
    rep = tournament(a, b, ["1v3", "2v2", "3v1"], env, 200, seed=0)
    for comp in ("1v3", "2v2", "3v1"):
        print(comp, rep.wins_by_population(comp))


if __name__ == "__main__":
    main(int(sys.argv[1]) if len(sys.argv) > 1 else 40)
