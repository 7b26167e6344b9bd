"""Constructions for rank functions that are not submodular.

Given a strictly positive, normalized, monotone f that is not submodular, the
polytope B_f(2) is tightened until every constraint is attained, a violating
pair (S, T) with values 1, 1, 1, 2 is located, and four critical elements

    e1 outside S | T,  e2 in S & T,  e3 in S - T,  e4 in T - S

are read off the enumerated points. From them we build

- an optimization instance whose optimum jumps by 4 under a unit parameter
  shift and by 3 under a unit demand shift, and
- a two-player game on two interleaved copies of B_f(2) without a pure Nash
  equilibrium.

Every claim is certified by enumeration.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional

from app.exceptions import (
    DomainError,
    InfeasibleError,
    InputError,
    InvariantViolation,
    NonSubmodularError,
)
from app.services import oracle
from app.services import rank as rank_fns
from app.services.cost import Congestion, polynomial, scaled_congestion
from app.services.exact import ExactValue, format_exact
from app.services.game import Game, Player, StrategyProfile, private_cost, private_cost_breakdown
from app.services.optimize import ProblemInstance
from app.services.polytope import Allocation, BasePolytope, l1_distance, support, unit_vector
from app.services.rank import GroundSet, RankFunction

logger = logging.getLogger(__name__)

COUNTEREXAMPLE_DEMAND = 2


@dataclass(frozen=True)
class SubmodularityViolation:
    """(S, T) with f(S) = f(T) = f(S & T) = 1 and f(S | T) = 2 on the tightened function."""

    S: frozenset[int]
    T: frozenset[int]
    tightened: RankFunction
    violates_original: bool

    def to_dict(self, ground: GroundSet) -> dict:
        return {
            "S": [ground.labels[e] for e in sorted(self.S)],
            "T": [ground.labels[e] for e in sorted(self.T)],
            "violates_original": self.violates_original,
        }


@dataclass(frozen=True)
class CriticalQuadruple:
    e1: int
    e2: int
    e3: int
    e4: int
    x: Allocation
    y: Allocation
    others: tuple[Allocation, ...] = ()

    @property
    def elements(self) -> tuple[int, int, int, int]:
        return (self.e1, self.e2, self.e3, self.e4)

    def to_dict(self, ground: GroundSet) -> dict:
        names = ("e1", "e2", "e3", "e4")
        return {
            **{name: ground.labels[e] for name, e in zip(names, self.elements)},
            "x": list(self.x),
            "y": list(self.y),
            "other_critical_supports": [
                [ground.labels[e] for e in sorted(support(z))] for z in self.others
            ],
        }


def _budget_for(m: int, budget: Optional[oracle.EnumerationBudget]) -> oracle.EnumerationBudget:
    budget = budget or oracle.EnumerationBudget()
    if budget.max_ground < m or budget.max_demand < COUNTEREXAMPLE_DEMAND:
        budget = budget.model_copy(
            update={
                "max_ground": max(budget.max_ground, m),
                "max_demand": max(budget.max_demand, COUNTEREXAMPLE_DEMAND),
            }
        )
    return budget


# =============================================================================
# TIGHTENING AND THE CRITICAL QUADRUPLE
# =============================================================================


def unit_demand_is_polymatroidal(f: RankFunction) -> RankFunction:
    """Submodular f' with B_{f'}(1) = B_f(1): every unit polytope is polymatroidal."""
    positive = [e for e in range(f.ground.size) if f.value(1 << e) >= 1]
    if not positive:
        raise InfeasibleError("B_f(1) is empty")
    return rank_fns.singleton_cover(f.ground, positive, 1)


def _check_inputs(f: RankFunction, d: int) -> None:
    if d == 1:
        raise InputError(
            "Tightening at demand 1 is refused: every unit-demand polytope is already the "
            "base polytope of a submodular function"
        )
    if d != COUNTEREXAMPLE_DEMAND:
        raise DomainError(f"Counterexamples are built at demand 2, got {d}")
    positive = rank_fns.is_strictly_positive(f)
    if not positive.holds:
        raise InputError(
            f"Rank function must be strictly positive; f vanishes on "
            f"{sorted(f.ground.labels[e] for e in positive.witness[0])}"
        )
    monotone = rank_fns.is_monotone_normalized(f)
    if not monotone.holds:
        raise InputError("Rank function must be normalized and monotone")
    if rank_fns.is_submodular(f).holds:
        raise NonSubmodularError(
            "Rank function is submodular: no counterexample exists, every such game has an "
            "equilibrium"
        )


def tighten(
    f: RankFunction, d: int = COUNTEREXAMPLE_DEMAND, budget: Optional[oracle.EnumerationBudget] = None
) -> RankFunction:
    """Lower every constraint to its maximum over B_f(d); B_f(d) is unchanged.

    Lowering a constraint to its attained maximum cuts no point, so the
    fixpoint of one-unit decrements is reached in a single pass over the
    subsets in ascending bitmask order.
    """
    _check_inputs(f, d)
    points = oracle.enumerate_points(f, d, _budget_for(f.ground.size, budget))
    if not points:
        raise InfeasibleError(f"B_f({d}) is empty")
    m = f.ground.size
    values = {0: 0}
    decrements = 0
    for mask in range(1, 1 << m):
        attained = max(sum(x[i] for i in range(m) if mask >> i & 1) for x in points)
        values[mask] = attained
        decrements += f.value(mask) - attained
    logger.info(f"Tightened {decrements} units over {1 << m} constraints")
    return rank_fns.explicit_table(f.ground, values)


def find_violation(tightened: RankFunction, original: Optional[RankFunction] = None) -> SubmodularityViolation:
    """Lexicographically smallest (S, T) with tightened values 1, 1, 1, 2 and S & T non-empty."""
    table = tightened.table
    size = len(table)
    for s in range(1, size):
        if table[s] != 1:
            continue
        for t in range(s + 1, size):
            inter, union = s & t, s | t
            if table[t] != 1 or not inter or inter in (s, t):
                continue
            if table[inter] == 1 and table[union] == 2:
                reference = original or tightened
                violates = reference.value(s) + reference.value(t) < (
                    reference.value(inter) + reference.value(union)
                )
                return SubmodularityViolation(
                    frozenset(tightened.ground.elements(s)),
                    frozenset(tightened.ground.elements(t)),
                    tightened,
                    violates,
                )
    if rank_fns.is_submodular(tightened).holds:
        raise NonSubmodularError(
            "B_f(2) is the base polytope of a submodular function; no counterexample at demand 2"
        )
    raise InvariantViolation("Tightened function violates submodularity outside the 1,1,1,2 pattern")


def find_critical_quadruple(
    tightened: RankFunction,
    S: frozenset[int],
    T: frozenset[int],
    budget: Optional[oracle.EnumerationBudget] = None,
) -> CriticalQuadruple:
    """Locate e1..e4 and the witnesses x (support {e1, e2}) and y (support {e3, e4})."""
    ground = tightened.ground
    points = oracle.enumerate_points(
        tightened, COUNTEREXAMPLE_DEMAND, _budget_for(ground.size, budget)
    )
    both, either = S & T, S | T

    for z in points:
        zs = support(z)
        if zs <= either and zs & both:
            raise InvariantViolation(
                f"Point {z} inside S | T touches S & T; the function is not tightened"
            )

    x = next((z for z in points if sum(z[e] for e in both) == 1), None)
    y = next((z for z in points if sum(z[e] for e in either) == 2), None)
    if x is None or y is None:
        raise InvariantViolation("Constraints on S & T or S | T are not attained")
    (e2,) = [e for e in support(x) if e in both]
    rest = [e for e in support(x) if e != e2]
    if len(rest) != 1 or rest[0] in either or x[rest[0]] != 1:
        raise InvariantViolation(f"Witness {x} does not have the expected support")
    e1 = rest[0]
    s_only = [e for e in support(y) if e in S and e not in T]
    t_only = [e for e in support(y) if e in T and e not in S]
    if len(s_only) != 1 or len(t_only) != 1:
        raise InvariantViolation(f"Witness {y} does not split over S - T and T - S")
    e3, e4 = s_only[0], t_only[0]

    critical = frozenset((e1, e2, e3, e4))
    allowed = (frozenset((e1, e3)), frozenset((e1, e4)), frozenset((e1,)))
    others = []
    for z in points:
        zs = support(z)
        if z in (x, y) or not zs <= critical:
            continue
        if zs not in allowed:
            raise InvariantViolation(f"Unexpected critical point {z}")
        others.append(z)
    return CriticalQuadruple(e1, e2, e3, e4, x, y, tuple(others))


# =============================================================================
# SENSITIVITY COUNTEREXAMPLE
# =============================================================================

# phi(y) coefficients with y = x + t
CRITICAL_COSTS = {
    "e1": (0, 0, 10),
    "e2": (0, -1, 2),
    "e3": (0, 5, 1),
    "e4": (0, 5, 1),
}
NON_CRITICAL_COST = (0, 20)


@dataclass
class SensitivityCounterexample:
    instance: ProblemInstance
    t: tuple[int, ...]
    t_shifted: tuple[int, ...]
    violation: SubmodularityViolation
    quadruple: CriticalQuadruple
    optimum: Allocation
    optimum_shifted: Allocation
    optimum_shifted_unit: Allocation
    values: dict[str, ExactValue] = field(default_factory=dict)

    @property
    def parameter_distance(self) -> int:
        return l1_distance(self.optimum, self.optimum_shifted)

    @property
    def demand_distance(self) -> int:
        return l1_distance(self.optimum_shifted_unit, self.optimum_shifted)

    def to_dict(self) -> dict:
        ground = self.instance.f.ground
        return {
            "violation": self.violation.to_dict(ground),
            "quadruple": self.quadruple.to_dict(ground),
            "t": list(self.t),
            "t_shifted": list(self.t_shifted),
            "optimum": list(self.optimum),
            "optimum_shifted": list(self.optimum_shifted),
            "optimum_shifted_demand_1": list(self.optimum_shifted_unit),
            "parameter_distance": self.parameter_distance,
            "demand_distance": self.demand_distance,
            "values": {k: format_exact(v) for k, v in self.values.items()},
        }


def _unique_optimum(P: ProblemInstance, budget, expected: Allocation, what: str):
    optima, value = oracle.brute_optima(P, budget)
    if optima != [expected]:
        raise InvariantViolation(f"{what}: expected unique optimum {expected}, found {optima}")
    return value


def build_sensitivity_counterexample(
    f: RankFunction, budget: Optional[oracle.EnumerationBudget] = None
) -> SensitivityCounterexample:
    """Instance on B_f(2) whose optimum moves by 4 under t' = t + chi_e2.

    At t' the demand-1 optimum is chi_e2, three units away from the demand-2
    optimum chi_e3 + chi_e4.
    """
    budget = _budget_for(f.ground.size, budget)
    tightened = tighten(f, COUNTEREXAMPLE_DEMAND, budget)
    violation = find_violation(tightened, f)
    quad = find_critical_quadruple(tightened, violation.S, violation.T, budget)
    m = f.ground.size

    roles = dict(zip(quad.elements, ("e1", "e2", "e3", "e4")))
    costs = tuple(
        polynomial(CRITICAL_COSTS[roles[e]] if e in roles else NON_CRITICAL_COST)
        for e in range(m)
    )
    t = (0,) * m
    t_shifted = unit_vector(m, quad.e2)
    instance = ProblemInstance(BasePolytope(f, COUNTEREXAMPLE_DEMAND), t, costs)
    instance.ensure_regular(extra_t=1)

    shifted = instance.with_t(t_shifted)
    unit_shifted = shifted.with_d(1)
    values = {
        "optimum": _unique_optimum(instance, budget, quad.x, "t = 0"),
        "optimum_shifted": _unique_optimum(shifted, budget, quad.y, "t = chi_e2"),
        "optimum_shifted_demand_1": _unique_optimum(
            unit_shifted, budget, unit_vector(m, quad.e2), "t = chi_e2, d = 1"
        ),
    }
    result = SensitivityCounterexample(
        instance, t, t_shifted, violation, quad, quad.x, quad.y, unit_vector(m, quad.e2), values
    )
    if result.parameter_distance != 4 or result.demand_distance != 3:
        raise InvariantViolation(
            f"Unexpected distances {result.parameter_distance} and {result.demand_distance}"
        )
    return result


# =============================================================================
# GAME WITHOUT EQUILIBRIUM
# =============================================================================

CRITICAL_RESOURCES = ("g", "h", "a", "b")
# e1..e4 of each player onto the shared critical resources
PLAYER_LAYOUT = (("g", "h", "a", "b"), ("g", "b", "a", "h"))
PLAYER_CONGESTION = (
    {
        "a": Congestion.hinge(1, -1),
        "b": Congestion.constant(1),
        "h": Congestion.constant(0),
        "g": Congestion.hinge(3, -3),
    },
    {
        "a": Congestion.constant(1),
        "b": Congestion.constant(0),
        "h": Congestion.hinge(2, -2),
        "g": Congestion.constant(2),
    },
)
OUTSIDE_CONGESTION = Congestion.constant(20)


@dataclass
class NoPneGame:
    game: Game
    violation: SubmodularityViolation
    quadruple: CriticalQuadruple
    mappings: tuple[dict[str, str], dict[str, str]]
    search: oracle.PneSearch
    cells: dict[str, dict[str, str]]

    def to_dict(self) -> dict:
        ground = self.violation.tightened.ground
        return {
            "violation": self.violation.to_dict(ground),
            "quadruple": self.quadruple.to_dict(ground),
            "mappings": [dict(m) for m in self.mappings],
            "strategy_counts": list(self.search.strategy_counts),
            "profiles_examined": self.search.profiles_examined,
            "equilibrium": None,
            "cells": self.cells,
        }


def _strategy_on(f: RankFunction, mapping: dict[str, str], resources: GroundSet, z: Allocation) -> Allocation:
    out = [0] * resources.size
    for e, value in enumerate(z):
        out[resources.index(mapping[f.ground.labels[e]])] += value
    return tuple(out)


def _cell(game: Game, profile: StrategyProfile, orders: list[list[str]]) -> str:
    """Cell text like 1+1,1+0: cost terms in each player's critical-element order."""
    parts = []
    for i in range(game.n):
        terms = private_cost_breakdown(game, profile, i)
        parts.append("+".join(format_exact(terms[r]) for r in orders[i] if r in terms))
    return ",".join(parts)


def build_no_pne_game(
    f: RankFunction, budget: Optional[oracle.EnumerationBudget] = None
) -> NoPneGame:
    """Two players on interleaved copies of B_f(2); certified to have no PNE."""
    tightened = tighten(f, COUNTEREXAMPLE_DEMAND, budget)
    violation = find_violation(tightened, f)
    quad = find_critical_quadruple(tightened, violation.S, violation.T, budget)
    labels = f.ground.labels
    outside = [labels[e] for e in range(f.ground.size) if e not in quad.elements]

    resources = GroundSet(
        CRITICAL_RESOURCES
        + tuple(f"p1:{label}" for label in outside)
        + tuple(f"p2:{label}" for label in outside)
    )
    players, mappings = [], []
    for i, layout in enumerate(PLAYER_LAYOUT):
        mapping = {labels[e]: resource for e, resource in zip(quad.elements, layout)}
        mapping.update({label: f"p{i + 1}:{label}" for label in outside})
        congestion = [PLAYER_CONGESTION[i].get(r, OUTSIDE_CONGESTION) for r in resources.labels]
        players.append(
            Player(
                f"p{i + 1}",
                COUNTEREXAMPLE_DEMAND,
                rank_fns.embed(f, resources, mapping),
                tuple(scaled_congestion(c) for c in congestion),
            )
        )
        mappings.append(mapping)
    game = Game(resources, tuple(players))

    search_budget = _budget_for(resources.size, budget)
    search = oracle.brute_pne_search(game, search_budget)
    if search.profile is not None:
        raise InvariantViolation(f"Constructed game has an equilibrium {search.profile}")

    named = {}
    for i, mapping in enumerate(mappings):
        named[i] = {
            f"x{i + 1}": _strategy_on(f, mapping, resources, quad.x),
            f"y{i + 1}": _strategy_on(f, mapping, resources, quad.y),
        }
        for k, z in enumerate(quad.others, start=1):
            named[i][f"z{i + 1}.{k}"] = _strategy_on(f, mapping, resources, z)
    orders = [
        [mapping[labels[e]] for e in quad.elements]
        + [mapping[label] for label in outside]
        for mapping in mappings
    ]
    cells = {
        row: {
            col: _cell(game, StrategyProfile((s1, s2)), orders)
            for col, s2 in named[1].items()
        }
        for row, s1 in named[0].items()
    }
    logger.info(f"No equilibrium among {search.profiles_examined} profiles")
    return NoPneGame(game, violation, quad, (mappings[0], mappings[1]), search, cells)


def bimatrix_costs(game: Game, s1: Allocation, s2: Allocation) -> tuple[ExactValue, ExactValue]:
    """(pi_1, pi_2) of a two-player profile."""
    profile = StrategyProfile((s1, s2))
    return private_cost(game, profile, 0), private_cost(game, profile, 1)
