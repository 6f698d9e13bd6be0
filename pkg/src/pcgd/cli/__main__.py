"""Command line entry point: ``python -m pcgd.cli <verb> <config>``."""

from __future__ import annotations

import argparse
import sys

from ..game import ContractError
from .config import parse_config
from .plotdata import run_plotdata
from .runner import run_analysis_sweep, run_experiment
from .tournament import run_tournament


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pcgd", description="Competitive optimization experiments.")
    sub = parser.add_subparsers(dest="verb", required=True)
    for verb, help_text in [("run", "train with a bench or marl config"),
                            ("analyze", "convergence sweep over random polymatrix games"),
                            ("tournament", "evaluate two agent populations against each other"),
                            ("plotdata", "merge metric CSVs into long format")]:
        p = sub.add_parser(verb, help=help_text)
        p.add_argument("config", help="INI config (a plotdata spec for 'plotdata')")
        p.add_argument("--out", help="output directory (relative paths honour $PCGD_OUTPUT_ROOT)")
        if verb != "plotdata":
            p.add_argument("--seed", type=int, help="override the master seed")
        if verb == "run":
            p.add_argument("--workers", type=int, help="sampling processes")
            p.add_argument("--resume", metavar="CHECKPOINT", help="continue from a checkpoint")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = parse_config(args.config)
        if args.verb == "run":
            result = run_experiment(cfg, out=args.out, seed=args.seed, workers=args.workers, resume=args.resume)
            print(f"wrote {result.metrics} and {result.final_checkpoint}")
        elif args.verb == "analyze":
            print(f"wrote {run_analysis_sweep(cfg, out=args.out, seed=args.seed)}")
        elif args.verb == "tournament":
            print(f"wrote {run_tournament(cfg, out=args.out, seed=args.seed)}")
        else:
            print(f"wrote {run_plotdata(cfg, out=args.out)}")
    except (ContractError, ArithmeticError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
