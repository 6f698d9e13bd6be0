"""Polymatrix competitive gradient descent for multi-player differentiable games."""

from .game import BlockPartition, ContractError, DenseGame, FlatParams, Game, NumericError
from .games import bilinear_game, four_player_example, random_quadratic_polymatrix
from .optimizers import METHODS, OptimizerConfig, StepState, UpdateReport, run, step

__all__ = [
    "BlockPartition", "ContractError", "DenseGame", "FlatParams", "Game", "NumericError", "bilinear_game",
    "four_player_example", "random_quadratic_polymatrix", "METHODS", "OptimizerConfig", "StepState",
    "UpdateReport", "run", "step",
]
