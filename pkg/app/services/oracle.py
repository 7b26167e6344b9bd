"""Brute-force reference implementations.

Nothing here calls into the polytope, optimize or game fast paths: points are
generated from the rank function directly and costs are evaluated point by
point.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from itertools import product
from typing import Optional

from pydantic import BaseModel, ConfigDict, Field

from app.config import settings
from app.exceptions import CapacityError, InfeasibleError
from app.services.exact import ExactValue, exact_sum

logger = logging.getLogger(__name__)


class EnumerationBudget(BaseModel):
    """Limits of an enumeration run; exceeding any of them aborts with CapacityError."""

    model_config = ConfigDict(frozen=True)

    max_ground: int = Field(default_factory=lambda: settings.ORACLE_MAX_GROUND, ge=1)
    max_demand: int = Field(default_factory=lambda: settings.ORACLE_MAX_DEMAND, ge=0)
    max_points: int = Field(default_factory=lambda: settings.ORACLE_MAX_POINTS, ge=1)

    @classmethod
    def parse(cls, text: str) -> "EnumerationBudget":
        """Parse "ground=6,demand=6,points=1000000" (any subset of keys)."""
        keys = {"ground": "max_ground", "demand": "max_demand", "points": "max_points"}
        values = {}
        for part in filter(None, (p.strip() for p in text.split(","))):
            key, _, raw = part.partition("=")
            if key.strip() not in keys or not raw.strip().isdigit():
                raise ValueError(f"Invalid budget entry {part!r}; expected ground=N, demand=N, points=N")
            values[keys[key.strip()]] = int(raw)
        return cls(**values)


def _budget(budget: Optional[EnumerationBudget]) -> EnumerationBudget:
    return budget if budget is not None else EnumerationBudget()


def _check_size(m: int, d: int, budget: EnumerationBudget) -> None:
    if m > budget.max_ground:
        raise CapacityError(f"Ground set of size {m} exceeds oracle budget {budget.max_ground}")
    if d > budget.max_demand:
        raise CapacityError(f"Demand {d} exceeds oracle budget {budget.max_demand}")


def enumerate_base(B, budget: Optional[EnumerationBudget] = None) -> list[tuple[int, ...]]:
    """All x in B_f(d) in lexicographic order."""
    return enumerate_points(B.f, B.d, budget)


def enumerate_points(f, d: int, budget: Optional[EnumerationBudget] = None) -> list[tuple[int, ...]]:
    """All x with x(U) <= f(U) for every U and x(E) = d, lexicographically.

    Coordinates are assigned left to right; after fixing coordinate k every
    constraint on a subset of {0..k} that contains k is checked, which prunes
    infeasible prefixes.
    """
    budget = _budget(budget)
    m = f.ground.size
    _check_size(m, d, budget)
    points: list[tuple[int, ...]] = []
    prefix = [0] * m

    def subset_total(mask: int) -> int:
        return sum(prefix[i] for i in range(m) if mask >> i & 1)

    def prefix_ok(k: int) -> bool:
        top = 1 << k
        for lower in range(top):
            mask = lower | top
            if subset_total(mask) > f.value(mask):
                return False
        return True

    def extend(k: int, remaining: int) -> None:
        if k == m - 1:
            prefix[k] = remaining
            if prefix_ok(k):
                points.append(tuple(prefix))
                if len(points) > budget.max_points:
                    raise CapacityError(f"More than {budget.max_points} points enumerated")
            prefix[k] = 0
            return
        for value in range(remaining + 1):
            prefix[k] = value
            if prefix_ok(k):
                extend(k + 1, remaining - value)
        prefix[k] = 0

    extend(0, d)
    return points


def grid_scan(B, budget: Optional[EnumerationBudget] = None) -> list[tuple[int, ...]]:
    """Naive scan of the full grid {0..d}^E; for cross-checking at tiny sizes."""
    budget = _budget(budget)
    f, d = B.f, B.d
    m = f.ground.size
    _check_size(m, d, budget)
    if (d + 1) ** m > budget.max_points:
        raise CapacityError(f"Grid of {(d + 1) ** m} points exceeds budget {budget.max_points}")
    points = []
    for x in product(range(d + 1), repeat=m):
        if sum(x) != d:
            continue
        if all(
            sum(x[i] for i in range(m) if mask >> i & 1) <= f.value(mask)
            for mask in range(1 << m)
        ):
            points.append(tuple(x))
    return points


def _objective(P, x: tuple[int, ...]) -> ExactValue:
    return exact_sum(C(x_e, t_e) for C, x_e, t_e in zip(P.costs, x, P.t))


def brute_optima(
    P, budget: Optional[EnumerationBudget] = None
) -> tuple[list[tuple[int, ...]], ExactValue]:
    """All minimizers (lexicographic order) and the minimum value."""
    points = enumerate_base(P.polytope, budget)
    if not points:
        raise InfeasibleError(f"B_f({P.d}) is empty")
    scored = [(x, _objective(P, x)) for x in points]
    best = min(value for _, value in scored)
    return [x for x, value in scored if value == best], best


def brute_optimum(P, budget: Optional[EnumerationBudget] = None) -> tuple[tuple[int, ...], ExactValue]:
    """Global minimum by enumeration; ties go to the lexicographically smallest point."""
    optima, value = brute_optima(P, budget)
    return optima[0], value


# =============================================================================
# GAMES
# =============================================================================


@dataclass(frozen=True)
class PneSearch:
    """Outcome of an exhaustive equilibrium search."""

    profile: Optional[tuple[tuple[int, ...], ...]]
    profiles_examined: int
    strategy_counts: tuple[int, ...]


def _player_cost(game, strategies, i: int) -> ExactValue:
    own = strategies[i]
    total = []
    for e, C in enumerate(game.players[i].costs):
        others = sum(strategies[j][e] for j in range(len(strategies)) if j != i)
        total.append(C(own[e], others))
    return exact_sum(total)


def strategy_sets(game, budget: Optional[EnumerationBudget] = None) -> list[list[tuple[int, ...]]]:
    """Enumerated B_{f_i}(d_i) of every player."""
    return [enumerate_points(p.f, p.demand, budget) for p in game.players]


def brute_best_cost(game, strategies, i: int, own_options) -> ExactValue:
    """Cheapest private cost player i can reach against the others' strategies."""
    best = None
    for option in own_options:
        trial = list(strategies)
        trial[i] = option
        value = _player_cost(game, trial, i)
        if best is None or value < best:
            best = value
    return best


def brute_pne_search(game, budget: Optional[EnumerationBudget] = None) -> PneSearch:
    budget = _budget(budget)
    sets = strategy_sets(game, budget)
    total = 1
    for options in sets:
        total *= len(options)
    if total > budget.max_points:
        raise CapacityError(f"{total} strategy profiles exceed budget {budget.max_points}")
    if total == 0:
        raise InfeasibleError("Some player has an empty strategy set")
    examined = 0
    for profile in product(*sets):
        examined += 1
        stable = True
        for i, options in enumerate(sets):
            if brute_best_cost(game, profile, i, options) < _player_cost(game, profile, i):
                stable = False
                break
        if stable:
            return PneSearch(tuple(profile), examined, tuple(len(s) for s in sets))
    logger.info(f"No pure Nash equilibrium among {examined} profiles")
    return PneSearch(None, examined, tuple(len(s) for s in sets))


def brute_pne(game, budget: Optional[EnumerationBudget] = None) -> Optional[tuple[tuple[int, ...], ...]]:
    """Some PNE in lexicographic profile order, or None when none exists."""
    return brute_pne_search(game, budget).profile
