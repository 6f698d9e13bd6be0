"""Experiment configuration files.

Configs are INI files (``configparser`` syntax).  Every key is checked
against :data:`SCHEMA`; unknown sections or keys are errors.  Missing keys
take the schema default.
"""

from __future__ import annotations

import configparser
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

from ..game import ContractError
from ..optimizers import METHODS


class ConfigError(ContractError):
    pass


def _list(conv):
    def parse(text: str):
        return [conv(x.strip()) for x in text.split(",") if x.strip()]
    parse.__name__ = f"list[{conv.__name__}]"
    return parse


def _bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _choice(*options):
    def parse(text: str):
        if text not in options:
            raise ValueError(f"{text!r} is not one of {', '.join(options)}")
        return text
    parse.__name__ = "choice"
    return parse


def _positive(conv):
    def parse(text: str):
        x = conv(text)
        if not x > 0:
            raise ValueError(f"must be positive, got {text}")
        return x
    parse.__name__ = conv.__name__
    return parse


def _nonneg_int(text: str) -> int:
    x = int(text)
    if x < 0:
        raise ValueError(f"must be non-negative, got {text}")
    return x


def _unit_interval(text: str) -> float:
    x = float(text)
    if not 0 <= x <= 1:
        raise ValueError(f"must lie in [0, 1], got {text}")
    return x


def _discount(text: str) -> float:
    x = float(text)
    if not 0 < x <= 1:
        raise ValueError(f"must lie in (0, 1], got {text}")
    return x


KINDS = ("bench", "analysis-sweep", "marl", "tournament", "plotdata")

# section -> key -> (parser, default)
SCHEMA: dict[str, dict[str, tuple[Callable[[str], Any], Any]]] = {
    "experiment": {
        "kind": (_choice(*KINDS), None),
        "seed": (int, 0),
        "epochs": (_positive(int), 1),
        "out": (str, "runs/experiment"),
        "checkpoint_every": (_nonneg_int, 0),
        "workers": (_positive(int), 1),
    },
    "game": {
        "name": (_choice("bilinear", "four_player", "random_polymatrix"), "four_player"),
        "coupling": (float, 1.0),
        "dims": (_list(int), [2, 2, 2]),
        "s_scale": (float, 1.0),
        "a_scale": (float, 1.0),
        "game_seed": (int, 0),
        "theta0": (_list(float), []),
        "init_scale": (_positive(float), 1.0),
    },
    "optimizer": {
        "method": (_choice(*METHODS), "pcgd"),
        "eta": (_positive(float), 0.1),
        "sga_lambda": (float, 1.0),
        "cg_eps": (_positive(float), 1e-6),
        "cg_max_iter": (_nonneg_int, 0),
        "warm_start": (_bool, True),
    },
    "env": {
        "name": (_choice("soccer", "market", "two_state", "matching_pennies"), "soccer"),
        "width": (_positive(int), 8),
        "height": (_positive(int), 8),
        "reward_variant": (_choice("appendix", "main"), "appendix"),
        "max_steps": (_positive(int), 200),
        "end_probability": (_discount, 0.2),
        "learner_costs": (_list(float), [20.0, 22.0, 24.0]),
        "base_demand": (_list(float), [150.0, 300.0, 280.0, 250.0, 200.0, 300.0]),
        "thresholds": (_list(float), [25.0, 25.0, 25.0, 35.0, 30.0, 25.0]),
        "horizon": (_positive(int), 2),
        "env_seed": (int, 0),
    },
    "policy": {
        "hidden": (_list(int), [64, 64]),
        "activation": (_choice("tanh", "relu", "linear"), "tanh"),
        "sigma": (_positive(float), 25.0),
    },
    "marl": {
        "batch": (_positive(int), 16),
        "gamma": (_discount, 1.0),
        "lam": (_unit_interval, 1.0),
        "baseline": (_choice("zero", "tabular", "mlp"), "zero"),
        "baseline_lr": (_positive(float), 1e-3),
        "baseline_epochs": (_positive(int), 5),
        "zero_interaction": (_bool, False),
    },
    "sweep": {
        "seeds": (_nonneg_int, 100),
        "first_seed": (int, 0),
        "dims": (_list(int), [2, 2, 2]),
        "s_scale": (float, 1.0),
        "a_scales": (_list(float), [1.0, 10.0, 100.0]),
        "eta_factors": (_list(float), [0.9]),
        "etas": (_list(float), []),
        "bound_factor": (_positive(float), 4.0),
        "methods": (_list(_choice("pcgd", "simgd")), ["pcgd"]),
    },
    "tournament": {
        "population_a": (str, ""),
        "population_b": (str, ""),
        "label_a": (str, "a"),
        "label_b": (str, "b"),
        "compositions": (_list(_choice("1v3", "2v2", "3v1", "4v0", "0v4")), ["1v3", "2v2", "3v1"]),
        "episodes": (_positive(int), 2000),
    },
    "plotdata": {
        "runs": (_list(str), []),
        "x": (_choice("step", "wall_ms"), "step"),
        "metrics": (_list(str), ["loss_0"]),
        "window": (_nonneg_int, 0),
    },
}


@dataclass
class ExperimentConfig:
    kind: str
    seed: int = 0
    epochs: int = 1
    out: str = "runs/experiment"
    checkpoint_every: int = 0
    workers: int = 1
    sections: dict[str, dict[str, Any]] = field(default_factory=dict)
    source: str | None = None

    def section(self, name: str) -> dict[str, Any]:
        """Typed values of ``name`` with defaults filled in."""
        if name not in SCHEMA:
            raise ConfigError(f"unknown section [{name}]")
        values = {k: default for k, (_, default) in SCHEMA[name].items()}
        values.update(self.sections.get(name, {}))
        return values


_KEY_RE = re.compile(r"^\s*([^=:#;\s][^=:]*?)\s*[=:]")
_SECTION_RE = re.compile(r"^\s*\[([^\]]+)\]")


def _line_numbers(text: str) -> dict[tuple[str, str], int]:
    lines, section = {}, None
    for n, line in enumerate(text.splitlines(), start=1):
        m = _SECTION_RE.match(line)
        if m:
            section = m.group(1).strip()
            lines[(section, "")] = n
            continue
        m = _KEY_RE.match(line)
        if m and section is not None and not line[0].isspace():
            lines[(section, m.group(1).strip().lower())] = n
    return lines


def parse_config_text(text: str, source: str = "<string>") -> ExperimentConfig:
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    try:
        parser.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"{source}: {exc}") from None
    where = _line_numbers(text)
    sections: dict[str, dict[str, Any]] = {}
    for name in parser.sections():
        if name not in SCHEMA:
            raise ConfigError(f"{source}:{where.get((name, ''), '?')}: unknown section [{name}]")
        typed = {}
        for key, raw in parser.items(name):
            line = where.get((name, key), "?")
            if key not in SCHEMA[name]:
                raise ConfigError(f"{source}:{line}: unknown key '{key}' in [{name}]")
            conv = SCHEMA[name][key][0]
            try:
                typed[key] = conv(raw.strip())
            except ValueError as exc:
                raise ConfigError(f"{source}:{line}: bad value for '{key}' in [{name}]: {exc}") from None
        sections[name] = typed
    exp = {k: d for k, (_, d) in SCHEMA["experiment"].items()}
    exp.update(sections.pop("experiment", {}))
    if exp["kind"] is None:
        raise ConfigError(f"{source}: [experiment] needs a 'kind'")
    return ExperimentConfig(kind=exp["kind"], seed=exp["seed"], epochs=exp["epochs"], out=exp["out"],
                            checkpoint_every=exp["checkpoint_every"], workers=exp["workers"],
                            sections=sections, source=source)


def parse_config(path) -> ExperimentConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    return parse_config_text(path.read_text(encoding="utf-8"), str(path))
