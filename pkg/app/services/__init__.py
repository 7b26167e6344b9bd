"""Services package."""
from app.services.exact import INF, ExactValue, exact, format_exact
from app.services.rank import GroundSet, RankFunction
from app.services.polytope import Allocation, BasePolytope
from app.services.cost import Congestion, CostFunction
from app.services.optimize import (
    ProblemInstance,
    reoptimize_general,
    solve,
    verify_optimal,
)
from app.services.game import Game, Player, StrategyProfile, compute_pne, is_pne

__all__ = [
    "INF",
    "ExactValue",
    "exact",
    "format_exact",
    "GroundSet",
    "RankFunction",
    "Allocation",
    "BasePolytope",
    "Congestion",
    "CostFunction",
    "ProblemInstance",
    "solve",
    "verify_optimal",
    "reoptimize_general",
    "Game",
    "Player",
    "StrategyProfile",
    "compute_pne",
    "is_pne",
]
