"""Seeded random instances for the self-test sweep and the test suite."""

from __future__ import annotations

import random
from fractions import Fraction
from itertools import accumulate
from typing import Optional

from app.services import rank as rank_fns
from app.services.cost import (
    Congestion,
    CostFunction,
    custom_table,
    mm1,
    polynomial,
    scaled_congestion,
)
from app.services.game import Game, Player
from app.services.optimize import ProblemInstance
from app.services.polytope import BasePolytope
from app.services.rank import GroundSet, RankFunction

# Largest x and t any sweep probes; tables and capacities are sized past them.
X_REACH = 8
T_REACH = 8

SUBMODULAR_KINDS = ("budget", "partition", "coverage", "graphic", "uniform")
COST_KINDS = ("mm1", "scaled_congestion", "polynomial", "polynomial_own", "custom_table")


# =============================================================================
# RANK FUNCTIONS
# =============================================================================


def random_submodular_rank(rng: random.Random, m: int, kind: Optional[str] = None) -> RankFunction:
    """Random normalized, monotone, submodular f on e0..e{m-1}."""
    ground = GroundSet.of_size(m)
    kind = kind or rng.choice(SUBMODULAR_KINDS)
    if kind == "budget":
        weights = [rng.randint(1, 3) for _ in range(m)]
        cap = rng.randint(1, sum(weights))
        return rank_fns.from_callable(ground, lambda U: min(cap, sum(weights[e] for e in U)))
    if kind == "partition":
        blocks = [rng.randrange(min(m, 3)) for _ in range(m)]
        caps = [rng.randint(1, 3) for _ in range(3)]
        return rank_fns.from_callable(
            ground,
            lambda U: sum(min(caps[b], sum(1 for e in U if blocks[e] == b)) for b in range(3)),
        )
    if kind == "coverage":
        covers = [frozenset(rng.sample(range(5), rng.randint(1, 3))) for _ in range(m)]
        return rank_fns.from_callable(
            ground, lambda U: len(frozenset().union(*(covers[e] for e in U)))
        )
    if kind == "graphic":
        return random_graphic_rank(rng, m)
    return rank_fns.uniform(ground, rng.randint(1, 3))


def random_graphic_rank(rng: random.Random, m: int) -> RankFunction:
    """Graphic matroid (possibly scaled by 2) of a random connected multigraph with m edges."""
    vertices = rng.randint(2, min(m + 1, 4))
    edges = [(rng.randrange(v), v) for v in range(1, vertices)]
    while len(edges) < m:
        u, v = rng.sample(range(vertices), 2)
        edges.append((u, v))
    rng.shuffle(edges)
    f = rank_fns.graphic_matroid_rank([(u, v, f"e{i}") for i, (u, v) in enumerate(edges)])
    return rank_fns.scale(f, 2) if rng.random() < 0.3 else f


def canonical_nonsubmodular() -> RankFunction:
    """f on {1,2,3,4} with f(S) = f(T) = f(S & T) = 1 and f(S | T) = 2 for S={2,3}, T={2,4}.

    Non-empty subsets of S or of T have value 1, all other non-empty sets value 2.
    """
    ground = GroundSet(("1", "2", "3", "4"))
    S, T = frozenset({1, 2}), frozenset({1, 3})
    return rank_fns.from_callable(
        ground, lambda U: 0 if not U else (1 if U <= S or U <= T else 2)
    )


def random_nonsubmodular_rank(rng: random.Random, m: int) -> RankFunction:
    """Strictly positive, monotone f with a 1,1,1,2 violation and a free element.

    Elements are split into an outside part, S & T, S - T and T - S (each
    non-empty except possibly the extra elements); subsets of S or T get value 1,
    every other non-empty set a random value in {2, 3}, closed upwards.
    """
    if m < 4:
        raise ValueError("Need at least four elements")
    order = list(range(m))
    rng.shuffle(order)
    roles = {order[0]: "out", order[1]: "both", order[2]: "s", order[3]: "t"}
    for e in order[4:]:
        roles[e] = rng.choice(("out", "both", "s", "t"))
    S = frozenset(e for e, r in roles.items() if r in ("both", "s"))
    T = frozenset(e for e, r in roles.items() if r in ("both", "t"))
    ground = GroundSet.of_size(m)
    values = [0] * (1 << m)
    for mask in range(1, 1 << m):
        U = frozenset(ground.elements(mask))
        if U <= S or U <= T:
            values[mask] = 1
            continue
        below = max(values[mask & ~(1 << e)] for e in U)
        values[mask] = max(below, rng.choice((2, 2, 3)))
    return rank_fns.explicit_table(ground, dict(enumerate(values)))


# =============================================================================
# COSTS
# =============================================================================


def random_congestion(rng: random.Random) -> Congestion:
    """Random nonnegative, nondecreasing, convex congestion function."""
    kind = rng.choice(("polynomial", "hinge", "table"))
    if kind == "polynomial":
        return Congestion.polynomial(
            [rng.randint(0, 3), Fraction(rng.randint(0, 4), 2), rng.randint(0, 2)]
        )
    if kind == "hinge":
        slope = rng.randint(1, 3)
        return Congestion.hinge(slope, -slope * rng.randint(0, 2))
    steps = sorted(Fraction(rng.randint(0, 6), rng.choice((1, 2, 3))) for _ in range(4))
    base = rng.randint(0, 2)
    return Congestion.table([base + s for s in accumulate([0] + steps)])


def random_convex_profile(rng: random.Random, length: int) -> list[Fraction]:
    steps = sorted(Fraction(rng.randint(0, 8), rng.choice((1, 2, 4))) for _ in range(length - 1))
    return list(accumulate([Fraction(rng.randint(0, 3))] + steps))


def random_cost(rng: random.Random, kind: Optional[str] = None, load_bound: int = 12) -> CostFunction:
    """Random regular cost. mm1 capacities exceed `load_bound` + reach, so no +inf appears."""
    kind = kind or rng.choice(COST_KINDS)
    if kind == "mm1":
        return mm1(load_bound + X_REACH + T_REACH + rng.randint(0, 3))
    if kind == "scaled_congestion":
        return scaled_congestion(random_congestion(rng))
    if kind == "polynomial":
        return polynomial([rng.randint(0, 3), rng.randint(0, 3), Fraction(rng.randint(0, 2), 2)])
    if kind == "polynomial_own":
        return polynomial([rng.randint(0, 3), rng.randint(0, 3), rng.randint(0, 2)], in_load=False)
    phi = random_convex_profile(rng, X_REACH + T_REACH + 3)
    return custom_table(
        {(x, t): phi[x + t] for x in range(X_REACH + 2) for t in range(T_REACH + 2)},
        extension="error",
    )


# =============================================================================
# INSTANCES AND GAMES
# =============================================================================


def random_instance(
    rng: random.Random,
    max_ground: int = 5,
    max_demand: int = 5,
    max_t: int = 3,
    cost_kind: Optional[str] = None,
) -> ProblemInstance:
    m = rng.randint(1, max_ground)
    f = random_submodular_rank(rng, m)
    d = rng.randint(0, min(max_demand, f.total))
    t = tuple(rng.randint(0, max_t) for _ in range(m))
    costs = tuple(random_cost(rng, cost_kind) for _ in range(m))
    return ProblemInstance(BasePolytope(f, d), t, costs)


def random_game(
    rng: random.Random, max_players: int = 3, max_resources: int = 5, max_demand: int = 3
) -> Game:
    n = rng.randint(1, max_players)
    m = rng.randint(1, max_resources)
    resources = GroundSet.of_size(m)
    players = []
    for i in range(n):
        f = random_submodular_rank(rng, m)
        d = rng.randint(0, min(max_demand, f.total))
        costs = tuple(random_cost(rng, load_bound=n * max_demand) for _ in range(m))
        players.append(Player(f"p{i + 1}", d, f, costs))
    return Game(resources, tuple(players))
