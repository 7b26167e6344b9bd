"""Turn validated instance files into domain objects and back.

Dumpers emit the `declaration` payloads carried by every rank and cost
function, so dump -> load -> dump reproduces the same document.
"""

import logging
from typing import Any

from app.config import settings
from app.exceptions import ConstructionError
from app.schemas.instances import (
    CostDeclaration,
    EmbedRank,
    GameFile,
    GraphicRank,
    HingeCongestion,
    MatroidBinaryCost,
    MatroidTableRank,
    Mm1Cost,
    PolynomialCongestion,
    PolynomialCost,
    ProblemFile,
    RankDeclaration,
    ScaleRank,
    ScaledCongestionCost,
    SingletonCoverRank,
    TableRank,
    TruncateRank,
)
from app.services import cost as cost_fns
from app.services import rank as rank_fns
from app.services.cost import Congestion, CostFunction
from app.services.game import Game, Player
from app.services.optimize import ProblemInstance
from app.services.polytope import BasePolytope
from app.services.rank import GroundSet, RankFunction

logger = logging.getLogger(__name__)


# =============================================================================
# DECLARATIONS -> DOMAIN
# =============================================================================


def build_rank(decl: RankDeclaration, ground: GroundSet) -> RankFunction:
    """Rank function on `ground` from its declaration (recursive for composites)."""
    if isinstance(decl, TableRank):
        return rank_fns.explicit_table(
            ground, {tuple(entry.subset): entry.value for entry in decl.values}
        )
    if isinstance(decl, GraphicRank):
        f = rank_fns.graphic_matroid_rank(decl.edges)
        if f.ground != ground:
            raise ConstructionError(
                f"Graph edges {list(f.ground.labels)} must match the ground set "
                f"{list(ground.labels)} in order"
            )
        return f
    if isinstance(decl, TruncateRank):
        return rank_fns.truncate(build_rank(decl.base, ground), decl.d)
    if isinstance(decl, ScaleRank):
        return rank_fns.scale(build_rank(decl.base, ground), decl.k)
    if isinstance(decl, SingletonCoverRank):
        return rank_fns.singleton_cover(ground, decl.support, decl.value)
    if isinstance(decl, MatroidTableRank):
        return rank_fns.matroid_from_rank_table(
            ground, decl.support, {tuple(entry.subset): entry.value for entry in decl.values}
        )
    if isinstance(decl, EmbedRank):
        base = build_rank(decl.base, GroundSet.from_labels(decl.ground))
        return rank_fns.embed(base, ground, decl.mapping)
    raise ConstructionError(f"Unknown rank declaration {decl!r}")


def build_congestion(decl: Any) -> Congestion:
    if isinstance(decl, PolynomialCongestion):
        return Congestion.polynomial(decl.coefficients)
    if isinstance(decl, HingeCongestion):
        return Congestion.hinge(decl.slope, decl.offset)
    return Congestion.table(decl.values)


def build_cost(decl: CostDeclaration) -> CostFunction:
    if isinstance(decl, Mm1Cost):
        return cost_fns.mm1(decl.u)
    if isinstance(decl, ScaledCongestionCost):
        return cost_fns.scaled_congestion(build_congestion(decl.c))
    if isinstance(decl, MatroidBinaryCost):
        return cost_fns.matroid_binary(build_congestion(decl.c))
    if isinstance(decl, PolynomialCost):
        return cost_fns.polynomial(decl.coefficients, in_load=decl.in_load)
    return cost_fns.custom_table(
        {(point.x, point.t): point.value for point in decl.values}, extension=decl.extension
    )


def _costs(labels, costs: dict, default_cost) -> tuple[CostFunction, ...]:
    shared = build_cost(default_cost) if default_cost is not None else None
    return tuple(
        build_cost(costs[label]) if label in costs else shared for label in labels
    )


def build_problem(doc: ProblemFile) -> ProblemInstance:
    ground = GroundSet.from_labels(doc.ground)
    f = rank_fns.with_checked_flags(build_rank(doc.rank, ground))
    return ProblemInstance(
        polytope=BasePolytope(f, doc.demand),
        t=doc.t_vector(),
        costs=_costs(ground.labels, doc.costs, doc.default_cost),
    )


def build_game(doc: GameFile) -> Game:
    resources = GroundSet.from_labels(doc.resources)
    players = tuple(
        Player(
            name=p.name,
            demand=p.demand,
            f=rank_fns.with_checked_flags(build_rank(p.rank, resources)),
            costs=_costs(resources.labels, p.costs, p.default_cost),
        )
        for p in doc.players
    )
    return Game(resources, players)


def build_instance(doc: ProblemFile | GameFile) -> ProblemInstance | Game:
    if isinstance(doc, ProblemFile):
        return build_problem(doc)
    return build_game(doc)


# =============================================================================
# DOMAIN -> DECLARATIONS
# =============================================================================


def dump_problem(P: ProblemInstance) -> dict:
    labels = list(P.f.ground.labels)
    return {
        "schema": settings.INSTANCE_SCHEMA_VERSION,
        "kind": "problem",
        "ground": labels,
        "rank": P.f.declaration,
        "demand": P.d,
        "t": list(P.t),
        "costs": {label: C.declaration for label, C in zip(labels, P.costs)},
    }


def dump_game(G: Game) -> dict:
    labels = list(G.resources.labels)
    return {
        "schema": settings.INSTANCE_SCHEMA_VERSION,
        "kind": "game",
        "resources": labels,
        "players": [
            {
                "name": p.name,
                "demand": p.demand,
                "rank": p.f.declaration,
                "costs": {label: C.declaration for label, C in zip(labels, p.costs)},
            }
            for p in G.players
        ],
    }
