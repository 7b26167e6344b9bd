"""Polymatroid congestion games and the incremental equilibrium algorithm.

Each player i chooses x_i in B_{f_i}(d_i) and pays
    pi_i(x) = sum_e C_{i,e}(x_{i,e}; x_{-i,e}).

`compute_pne` raises the demands one unit at a time. After each increment the
deviating player's best response is one unit away; afterwards players with an
improving single exchange move one unit at a time until nobody improves. Every
such move strictly decreases the sorted per-unit marginal-cost vector, which is
checked at runtime.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

from app.exceptions import (
    ConstructionError,
    DomainError,
    InfeasibleError,
    InvariantViolation,
    NonSubmodularError,
    PreconditionError,
)
from app.services import rank as rank_fns
from app.services.cost import Congestion, CostFunction, is_regular, matroid_binary, scaled_congestion
from app.services.exact import ExactValue, exact_sum, format_exact
from app.services.optimize import (
    ProblemInstance,
    delta,
    reoptimize_d,
    solve,
    verify_optimal,
)
from app.services.polytope import (
    Allocation,
    BasePolytope,
    apply_exchange,
    apply_increment,
    zero,
)
from app.services.rank import GroundSet, RankFunction

logger = logging.getLogger(__name__)


# =============================================================================
# DATA TYPES
# =============================================================================


@dataclass(frozen=True, eq=False)
class Player:
    name: str
    demand: int
    f: RankFunction
    costs: tuple[CostFunction, ...]


@dataclass(frozen=True, eq=False)
class Game:
    """Players sharing one resource ground set."""

    resources: GroundSet
    players: tuple[Player, ...]

    def __post_init__(self) -> None:
        if not self.players:
            raise ConstructionError("A game needs at least one player")
        for p in self.players:
            if p.f.ground != self.resources:
                raise ConstructionError(f"Player {p.name} has a rank function on another ground set")
            if len(p.costs) != self.resources.size:
                raise ConstructionError(
                    f"Player {p.name} has {len(p.costs)} costs for {self.resources.size} resources"
                )
            if p.demand < 0:
                raise DomainError(f"Player {p.name} has negative demand {p.demand}")

    @property
    def n(self) -> int:
        return len(self.players)

    @property
    def m(self) -> int:
        return self.resources.size

    @property
    def demands(self) -> tuple[int, ...]:
        return tuple(p.demand for p in self.players)

    @property
    def max_demand(self) -> int:
        """delta = max_i d_i."""
        return max(self.demands)

    def with_demand(self, i: int, demand: int) -> "Game":
        players = list(self.players)
        p = players[i]
        players[i] = Player(p.name, demand, p.f, p.costs)
        return Game(self.resources, tuple(players))

    def validation_errors(self) -> list[str]:
        """Empty strategy sets and irregular costs on each player's operational box."""
        errors = []
        total = sum(self.demands)
        for p in self.players:
            if p.demand > p.f.total:
                errors.append(f"{p.name}: demand {p.demand} exceeds f(E)={p.f.total}")
            t_max = total - p.demand + 1
            for e, C in enumerate(p.costs):
                check = is_regular(C, max(p.demand, 1), t_max)
                if not check.regular:
                    errors.append(
                        f"{p.name}: cost on {self.resources.labels[e]} not regular "
                        f"({check.condition} at {check.witness})"
                    )
        return errors


@dataclass(frozen=True)
class StrategyProfile:
    strategies: tuple[Allocation, ...]

    @classmethod
    def zeros(cls, game: Game) -> "StrategyProfile":
        return cls(tuple(zero(game.m) for _ in game.players))

    def loads(self) -> tuple[int, ...]:
        return tuple(sum(column) for column in zip(*self.strategies))

    def others(self, i: int) -> tuple[int, ...]:
        """x_{-i,e} for every resource."""
        return tuple(
            load - own for load, own in zip(self.loads(), self.strategies[i])
        )

    def replace(self, i: int, strategy: Allocation) -> "StrategyProfile":
        strategies = list(self.strategies)
        strategies[i] = strategy
        return StrategyProfile(tuple(strategies))

    def to_dict(self, game: Game) -> dict:
        return {
            p.name: {
                game.resources.labels[e]: value
                for e, value in enumerate(self.strategies[i])
                if value
            }
            for i, p in enumerate(game.players)
        }


@dataclass(frozen=True)
class UnitMarginal:
    player: int
    unit: int
    resource: int
    value: ExactValue


@dataclass(frozen=True)
class UnitMarginalVector:
    """Per-unit marginal costs and their descending sort."""

    units: tuple[UnitMarginal, ...]
    distinguished: int

    @property
    def sorted_values(self) -> tuple[ExactValue, ...]:
        return tuple(sorted((u.value for u in self.units), reverse=True))

    def formatted(self) -> list[str]:
        return [format_exact(v) for v in self.sorted_values]


@dataclass(frozen=True)
class WhileStep:
    player: int
    source: int
    target: int
    potential_before: tuple[ExactValue, ...]
    potential_after: tuple[ExactValue, ...]


@dataclass
class ForIteration:
    k: int
    player: int
    resource: int
    while_steps: list[WhileStep] = field(default_factory=list)


@dataclass
class PneRunLog:
    """Replayable record of one compute_pne run."""

    iterations: list[ForIteration] = field(default_factory=list)
    stage_bound: int = 0
    total_bound: int = 0

    @property
    def while_steps(self) -> int:
        return sum(len(it.while_steps) for it in self.iterations)

    def to_dict(self, game: Game, full: bool = False) -> dict:
        labels = game.resources.labels
        names = [p.name for p in game.players]
        iterations = []
        for it in self.iterations:
            entry = {
                "k": it.k,
                "player": names[it.player],
                "increment": labels[it.resource],
                "while_steps": len(it.while_steps),
            }
            if full:
                entry["moves"] = [
                    {
                        "player": names[s.player],
                        "from": labels[s.source],
                        "to": labels[s.target],
                        "potential_before": [format_exact(v) for v in s.potential_before],
                        "potential_after": [format_exact(v) for v in s.potential_after],
                    }
                    for s in it.while_steps
                ]
            iterations.append(entry)
        return {
            "for_iterations": len(self.iterations),
            "while_steps": self.while_steps,
            "max_stage_steps": max((len(it.while_steps) for it in self.iterations), default=0),
            "stage_bound": self.stage_bound,
            "total_bound": self.total_bound,
            "iterations": iterations,
        }


# =============================================================================
# COSTS AND BEST RESPONSES
# =============================================================================


def private_cost(game: Game, x: StrategyProfile, i: int) -> ExactValue:
    others = x.others(i)
    return exact_sum(
        C(own, other)
        for C, own, other in zip(game.players[i].costs, x.strategies[i], others)
    )


def private_cost_breakdown(game: Game, x: StrategyProfile, i: int) -> dict[str, ExactValue]:
    """Cost terms of player i on the resources it uses."""
    others = x.others(i)
    return {
        game.resources.labels[e]: C(own, others[e])
        for e, (C, own) in enumerate(zip(game.players[i].costs, x.strategies[i]))
        if own > 0
    }


def induced_instance(
    game: Game, x: StrategyProfile, i: int, demand: Optional[int] = None
) -> ProblemInstance:
    """Player i's problem against the others: t = x_{-i}."""
    p = game.players[i]
    d = p.demand if demand is None else demand
    return ProblemInstance(BasePolytope(p.f, d), x.others(i), p.costs)


def best_response(
    game: Game, x: StrategyProfile, i: int, demand: Optional[int] = None
) -> Allocation:
    """Greedy best response of player i at demand d_i (or a preliminary demand)."""
    d = game.players[i].demand if demand is None else demand
    if d > game.players[i].demand:
        raise DomainError(f"Preliminary demand {d} exceeds demand {game.players[i].demand}")
    return solve(induced_instance(game, x, i, d))


@dataclass(frozen=True)
class PneCheck:
    is_pne: bool
    player: Optional[int] = None
    improvement: Optional[Allocation] = None

    def __bool__(self) -> bool:
        return self.is_pne


def is_pne(
    game: Game, x: StrategyProfile, exhaustive: Optional[bool] = None, budget=None
) -> PneCheck:
    """No player has a strictly cheaper feasible strategy.

    Exhaustive mode enumerates each B_{f_i}(d_i); otherwise the local optimality
    test on the induced instance decides. By default exhaustive mode is used
    whenever the enumeration fits the oracle budget.
    """
    from app.services import oracle

    if exhaustive is None:
        budget = budget or oracle.EnumerationBudget()
        exhaustive = game.m <= budget.max_ground and game.max_demand <= budget.max_demand
    for i, p in enumerate(game.players):
        P = induced_instance(game, x, i)
        P.polytope.require_member(x.strategies[i])
        current = P.objective(x.strategies[i])
        if exhaustive:
            for option in oracle.enumerate_points(p.f, p.demand, budget):
                if P.objective(option) < current:
                    return PneCheck(False, i, option)
        else:
            check = verify_optimal(P, x.strategies[i])
            if not check.optimal:
                e = check.violating_element
                return PneCheck(False, i, apply_exchange(x.strategies[i], e, check.delta.argmin))
    return PneCheck(True)


# =============================================================================
# DELTA POTENTIAL
# =============================================================================


def delta_potential(
    game: Game, x: StrategyProfile, distinguished: int
) -> UnitMarginalVector:
    """Marginal cost of every demand unit.

    A unit of player i on resource e is worth C^-_{i,e}(x_{i,e}; x_{-i,e}) when e
    is the distinguished resource and C^-_{i,e}(x_{i,e}; x_{-i,e} + 1) otherwise.
    """
    units = []
    for i, p in enumerate(game.players):
        others = x.others(i)
        unit = 0
        for e, own in enumerate(x.strategies[i]):
            if own == 0:
                continue
            bump = 0 if e == distinguished else 1
            value = p.costs[e].left_derivative(own, others[e] + bump)
            for _ in range(own):
                units.append(UnitMarginal(i, unit, e, value))
                unit += 1
    return UnitMarginalVector(tuple(units), distinguished)


# =============================================================================
# ALGORITHM
# =============================================================================


def _require_submodular(game: Game) -> None:
    for p in game.players:
        check = rank_fns.is_submodular(p.f)
        if not check.holds:
            S, T = check.witness
            labels = game.resources.labels
            raise NonSubmodularError(
                f"Player {p.name} has a non-submodular rank function "
                f"(S={sorted(labels[e] for e in S)}, T={sorted(labels[e] for e in T)}); "
                "equilibria need not exist, use the counterexample command for such inputs",
                witness=check.witness,
            )


def _improving_move(
    game: Game, x: StrategyProfile, demands: Sequence[int], overloaded: int
) -> Optional[tuple[int, int, int]]:
    """(player, source, target) of the lowest-index player that can improve.

    The move is the exchange out of the overloaded resource towards the
    argmin of Delta; an improvement elsewhere means the stage invariant broke.
    """
    for i in range(game.n):
        P = induced_instance(game, x, i, demands[i])
        check = verify_optimal(P, x.strategies[i])
        if check.optimal:
            continue
        own = x.strategies[i]
        if own[overloaded] >= 1:
            dv = delta(P, own, overloaded)
            if dv.argmin is not None and P.marginal_down(own, overloaded) > dv.value:
                return i, overloaded, dv.argmin
        raise InvariantViolation(
            f"Player {game.players[i].name} improves at resource "
            f"{game.resources.labels[check.violating_element]}, away from the overloaded "
            f"resource {game.resources.labels[overloaded]}"
        )
    return None


def compute_pne(game: Game) -> tuple[StrategyProfile, PneRunLog]:
    """Pure Nash equilibrium of a game with submodular rank functions."""
    _require_submodular(game)
    for i, p in enumerate(game.players):
        if p.demand > p.f.total:
            raise InfeasibleError(f"Player {p.name} has an empty strategy set")

    m = game.m
    stage_bound = sum(m * d * d for d in game.demands)
    total_bound = game.n**2 * m * game.max_demand**3
    log = PneRunLog(stage_bound=stage_bound, total_bound=total_bound)
    x = StrategyProfile.zeros(game)
    current = [0] * game.n

    for k in range(1, sum(game.demands) + 1):
        i = min(j for j in range(game.n) if current[j] < game.demands[j])
        P = induced_instance(game, x, i, current[i])
        raised = reoptimize_d(P, x.strategies[i], 1).allocation
        overloaded = next(e for e in range(m) if raised[e] > x.strategies[i][e])
        x = x.replace(i, raised)
        current[i] += 1
        iteration = ForIteration(k, i, overloaded)
        log.iterations.append(iteration)

        while True:
            move = _improving_move(game, x, current, overloaded)
            if move is None:
                break
            j, source, target = move
            before = delta_potential(game, x, overloaded).sorted_values
            x = x.replace(j, apply_exchange(x.strategies[j], source, target))
            overloaded = target
            after = delta_potential(game, x, overloaded).sorted_values
            if not after < before:
                raise InvariantViolation(
                    f"Potential did not decrease at stage {k}: "
                    f"{[format_exact(v) for v in before]} -> {[format_exact(v) for v in after]}"
                )
            iteration.while_steps.append(WhileStep(j, source, target, before, after))
            if len(iteration.while_steps) > stage_bound:
                raise InvariantViolation(
                    f"Stage {k} exceeded {stage_bound} improvement steps"
                )
            if log.while_steps > total_bound:
                raise InvariantViolation(f"More than {total_bound} improvement steps in total")
        logger.debug(f"Stage {k} finished after {len(iteration.while_steps)} improvement steps")

    logger.info(
        f"Equilibrium reached after {len(log.iterations)} increments and "
        f"{log.while_steps} improvement steps"
    )
    return x, log


def replay_run_log(game: Game, log: PneRunLog) -> StrategyProfile:
    """Re-execute a run log and re-check every step.

    Each increment must be a one-unit best response, each move an improving
    exchange with a strictly decreasing potential, and the final profile an
    equilibrium.
    """
    x = StrategyProfile.zeros(game)
    current = [0] * game.n
    for iteration in log.iterations:
        i = iteration.player
        P = induced_instance(game, x, i, current[i])
        raised = apply_increment(x.strategies[i], iteration.resource)
        raised_instance = P.with_d(current[i] + 1)
        if not raised_instance.polytope.member(raised):
            raise InvariantViolation(f"Increment at stage {iteration.k} leaves the polytope")
        if not verify_optimal(raised_instance, raised).optimal:
            raise InvariantViolation(f"Increment at stage {iteration.k} is not a best response")
        x = x.replace(i, raised)
        current[i] += 1
        overloaded = iteration.resource
        for step in iteration.while_steps:
            if step.source != overloaded:
                raise InvariantViolation(f"Move at stage {iteration.k} does not leave {overloaded}")
            Pj = induced_instance(game, x, step.player, current[step.player])
            moved = apply_exchange(x.strategies[step.player], step.source, step.target)
            if not Pj.polytope.member(moved):
                raise InvariantViolation(f"Move at stage {iteration.k} leaves the polytope")
            if not Pj.objective(moved) < Pj.objective(x.strategies[step.player]):
                raise InvariantViolation(f"Move at stage {iteration.k} does not improve")
            before = delta_potential(game, x, overloaded).sorted_values
            x = x.replace(step.player, moved)
            overloaded = step.target
            after = delta_potential(game, x, overloaded).sorted_values
            if not after < before or before != step.potential_before or after != step.potential_after:
                raise InvariantViolation(f"Potential mismatch at stage {iteration.k}")
    if current != list(game.demands):
        raise PreconditionError("Run log does not raise every demand to its target")
    if not is_pne(game, x, exhaustive=False).is_pne:
        raise InvariantViolation("Replayed profile is not an equilibrium")
    return x


# =============================================================================
# CONSTRUCTORS
# =============================================================================


def from_singleton_integer_splittable(
    resources: GroundSet,
    player_sets: Sequence[Sequence[int | str]],
    demands: Sequence[int],
    congestion: Mapping[str, Congestion] | Sequence[Congestion],
    names: Optional[Sequence[str]] = None,
) -> Game:
    """Players split d_i units over their allowed resources E_i; C = c_e(x + t) * x."""
    if len(player_sets) != len(demands):
        raise ConstructionError("One resource set per demand is required")
    costs = tuple(scaled_congestion(c) for c in _per_resource(resources, congestion))
    players = tuple(
        Player(
            names[i] if names else f"p{i + 1}",
            d,
            rank_fns.singleton_cover(resources, allowed, d),
            costs,
        )
        for i, (allowed, d) in enumerate(zip(player_sets, demands))
    )
    return Game(resources, players)


def from_matroid_congestion(
    resources: GroundSet,
    matroids: Sequence[RankFunction],
    congestion: Sequence[Mapping[str, Congestion] | Sequence[Congestion]],
    names: Optional[Sequence[str]] = None,
) -> Game:
    """Players pick a basis of their own matroid; d_i = rk(E_i), C = c_{i,e}(1 + t) at x = 1.

    Each matroid is given on its own elements, labelled by resource labels, and
    is embedded into the shared resource set.
    """
    if len(matroids) != len(congestion):
        raise ConstructionError("One congestion map per matroid is required")
    players = []
    for i, (rk, cs) in enumerate(zip(matroids, congestion)):
        f = _on_resources(rk, resources)
        costs = tuple(matroid_binary(c) for c in _per_resource(resources, cs))
        players.append(Player(names[i] if names else f"p{i + 1}", f.total, f, costs))
    return Game(resources, tuple(players))


def from_matroid_integer_splittable(
    resources: GroundSet,
    matroids: Sequence[RankFunction],
    multiples: Sequence[int],
    congestion: Mapping[str, Congestion] | Sequence[Congestion],
    names: Optional[Sequence[str]] = None,
) -> Game:
    """Player i packs k_i bases of its matroid: f_i = k_i * rk_i, C = c_e(x + t) * x."""
    if len(matroids) != len(multiples):
        raise ConstructionError("One multiple per matroid is required")
    costs = tuple(scaled_congestion(c) for c in _per_resource(resources, congestion))
    players = []
    for i, (rk, k) in enumerate(zip(matroids, multiples)):
        f = rank_fns.scale(_on_resources(rk, resources), k)
        players.append(Player(names[i] if names else f"p{i + 1}", f.total, f, costs))
    return Game(resources, tuple(players))


def _on_resources(rk: RankFunction, resources: GroundSet) -> RankFunction:
    if rk.ground == resources:
        return rk
    return rank_fns.embed(rk, resources, {label: label for label in rk.ground.labels})


def _per_resource(
    resources: GroundSet, values: Mapping[str, Congestion] | Sequence[Congestion]
) -> list[Congestion]:
    if isinstance(values, Mapping):
        missing = [label for label in resources.labels if label not in values]
        if missing:
            raise ConstructionError(f"No congestion function for resources {missing}")
        return [values[label] for label in resources.labels]
    if len(values) != resources.size:
        raise ConstructionError(f"Got {len(values)} congestion functions for {resources.size} resources")
    return list(values)
