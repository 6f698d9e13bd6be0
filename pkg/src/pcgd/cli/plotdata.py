"""Merge run metrics into one long-format table for plotting."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from ..game import ContractError
from .config import ExperimentConfig
from .runner import read_metrics, resolve_out

PLOT_SCHEMA = "# pcgd-plotdata v1"


def moving_average(y: np.ndarray, window: int) -> np.ndarray:
    """Trailing mean over ``window`` points; the first ``window - 1`` points average what exists."""
    y = np.asarray(y, dtype=np.float64)
    if window < 1 or window > len(y):
        raise ContractError(f"window {window} must lie in [1, {len(y)}]")
    c = np.cumsum(np.concatenate([[0.0], y]))
    n = np.arange(1, len(y) + 1)
    lo = np.maximum(n - window, 0)
    return (c[n] - c[lo]) / (n - lo)


def emit_plot_data(runs: list[tuple[str, str]], metrics: list[str], x: str = "step", window: int = 0,
                   out=None) -> list[tuple[str, float, str, float]]:
    """Rows ``(method, x, metric, value)`` for every run; optionally smoothed.

    ``runs`` pairs a method label with a metrics CSV path.  All runs must
    share one column layout.
    """
    rows = []
    schema = None
    for label, path in runs:
        columns, data = read_metrics(path)
        if schema is None:
            schema = columns
        elif columns != schema:
            raise ContractError(f"{path}: columns {columns} differ from {schema}")
        for m in [x, *metrics]:
            if m not in columns:
                raise ContractError(f"{path}: no column {m!r}")
        xs = data[:, columns.index(x)]
        if x == "wall_ms":
            xs = np.cumsum(xs)
        for m in metrics:
            ys = data[:, columns.index(m)]
            if window:
                ys = moving_average(ys, window)
            rows += [(label, float(a), m, float(b)) for a, b in zip(xs, ys)]
    if out is not None:
        out = Path(out)
        out.parent.mkdir(parents=True, exist_ok=True)
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(f"{PLOT_SCHEMA}\nmethod,{x},metric,value\n")
            for label, a, m, b in rows:
                fh.write(f"{label},{a!r},{m},{b!r}\n")
    return rows


def run_plotdata(cfg: ExperimentConfig, out=None) -> Path:
    p = cfg.section("plotdata")
    runs = []
    for item in p["runs"]:
        label, sep, path = item.partition(":")
        if not sep:
            raise ContractError(f"plotdata run {item!r} must look like label:path")
        runs.append((label, path))
    target = resolve_out(out or cfg.out) / "plotdata.csv"
    emit_plot_data(runs, p["metrics"], p["x"], p["window"], target)
    return target
