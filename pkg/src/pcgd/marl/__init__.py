from .adapter import RlGameAdapter, pass_seed
from .baselines import MlpBaseline, TabularBaseline, ZeroBaseline, attach_values, refit_baselines
from .buffer import Episode, TrajectoryBuffer, sample_trajectories
from .enumeration import ExactGradients, exact_gradients_by_enumeration, exact_returns
from .estimators import ScoreFunctionEstimator, estimate_offdiag_hvp, estimate_xi
from .gae import AdvantageTable, gae, gae_advantages

__all__ = [
    "RlGameAdapter", "pass_seed", "MlpBaseline", "TabularBaseline", "ZeroBaseline", "attach_values",
    "refit_baselines", "Episode", "TrajectoryBuffer", "sample_trajectories", "ExactGradients",
    "exact_gradients_by_enumeration", "exact_returns", "ScoreFunctionEstimator", "estimate_offdiag_hvp",
    "estimate_xi", "AdvantageTable", "gae", "gae_advantages",
]
