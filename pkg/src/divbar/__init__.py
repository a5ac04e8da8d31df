"""Dividend-barrier control of a defaultable firm under log utility."""

from .model import ModelParams, Regime, State, classify_regime, post_default_value
from .frontier import FrontierSolution, solve_frontier, solve_frontier_b

__all__ = [
    "ModelParams",
    "Regime",
    "State",
    "classify_regime",
    "post_default_value",
    "FrontierSolution",
    "solve_frontier",
    "solve_frontier_b",
]
