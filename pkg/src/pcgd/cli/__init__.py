from .checkpoint import Checkpoint, CheckpointError, load_checkpoint, save_checkpoint
from .config import SCHEMA, ConfigError, ExperimentConfig, parse_config, parse_config_text
from .plotdata import emit_plot_data, moving_average
from .runner import (
    OUTPUT_ROOT_ENV, RunResult, metrics_columns, read_metrics, resolve_out, run_analysis_sweep, run_experiment,
)
from .tournament import TournamentReport, load_population, run_tournament, tournament

__all__ = [
    "Checkpoint", "CheckpointError", "load_checkpoint", "save_checkpoint", "SCHEMA", "ConfigError",
    "ExperimentConfig", "parse_config", "parse_config_text", "emit_plot_data", "moving_average",
    "OUTPUT_ROOT_ENV", "RunResult", "metrics_columns", "read_metrics", "resolve_out", "run_analysis_sweep",
    "run_experiment", "TournamentReport", "load_population", "run_tournament", "tournament",
]
