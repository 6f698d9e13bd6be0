from .base import EnvFault, MultiAgentEnv
from .market import (
    ElectricityMarket,
    GeneratorSpec,
    InfeasibleMarket,
    MarketState,
    market_clearing,
)
from .scripted import ScriptedMDP, chain_mdp, matching_pennies, scripted_mdp, two_state_game
from .soccer import MarkovSoccer, SoccerState

__all__ = [
    "EnvFault", "MultiAgentEnv", "ElectricityMarket", "GeneratorSpec", "InfeasibleMarket",
    "MarketState", "market_clearing", "ScriptedMDP", "chain_mdp", "matching_pennies",
    "scripted_mdp", "two_state_game", "MarkovSoccer", "SoccerState",
]
