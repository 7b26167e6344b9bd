"""Pydantic schemas for problem and game instance files."""

from __future__ import annotations

from typing import Annotated, Any, Literal, Optional, Union

from pydantic import (
    AfterValidator,
    BaseModel,
    BeforeValidator,
    ConfigDict,
    Field,
    StrictInt,
    StrictStr,
    model_validator,
)

from app.exceptions import InputError
from app.services.exact import exact


def _label(value: Any) -> Any:
    # YAML reads unquoted labels like 1 as integers
    if isinstance(value, int) and not isinstance(value, bool):
        return str(value)
    return value


def _exact_text(value: Union[int, str]) -> Union[int, str]:
    try:
        exact(value)
    except InputError as e:
        raise ValueError(str(e)) from e
    return value


Label = Annotated[StrictStr, BeforeValidator(_label)]
ExactScalar = Annotated[Union[StrictInt, StrictStr], AfterValidator(_exact_text)]
Count = Annotated[StrictInt, Field(ge=0)]


class StrictModel(BaseModel):
    """Unknown fields are rejected everywhere."""

    model_config = ConfigDict(extra="forbid")


# Rank declarations
class SubsetValue(StrictModel):
    subset: list[Label]
    value: Count


class TableRank(StrictModel):
    kind: Literal["table"]
    values: list[SubsetValue]


class GraphicRank(StrictModel):
    kind: Literal["graphic"]
    edges: list[tuple[Label, Label, Label]] = Field(min_length=1)


class TruncateRank(StrictModel):
    kind: Literal["truncate"]
    base: "RankDeclaration"
    d: Count


class ScaleRank(StrictModel):
    kind: Literal["scale"]
    base: "RankDeclaration"
    k: Annotated[StrictInt, Field(ge=1)]


class SingletonCoverRank(StrictModel):
    kind: Literal["singleton_cover"]
    support: list[Label] = Field(min_length=1)
    value: Count


class MatroidTableRank(StrictModel):
    kind: Literal["matroid_table"]
    support: list[Label]
    values: list[SubsetValue]


class EmbedRank(StrictModel):
    kind: Literal["embed"]
    ground: list[Label] = Field(min_length=1)
    base: "RankDeclaration"
    mapping: dict[Label, Label]


RankDeclaration = Annotated[
    Union[
        TableRank,
        GraphicRank,
        TruncateRank,
        ScaleRank,
        SingletonCoverRank,
        MatroidTableRank,
        EmbedRank,
    ],
    Field(discriminator="kind"),
]

for _model in (TruncateRank, ScaleRank, EmbedRank):
    _model.model_rebuild()


# Congestion functions c(y)
class PolynomialCongestion(StrictModel):
    kind: Literal["polynomial"]
    coefficients: list[ExactScalar] = Field(min_length=1)


class HingeCongestion(StrictModel):
    kind: Literal["hinge"]
    slope: ExactScalar
    offset: ExactScalar


class TableCongestion(StrictModel):
    kind: Literal["table"]
    values: list[ExactScalar] = Field(min_length=1)


CongestionDeclaration = Annotated[
    Union[PolynomialCongestion, HingeCongestion, TableCongestion],
    Field(discriminator="kind"),
]


# Cost declarations
class Mm1Cost(StrictModel):
    family: Literal["mm1"]
    u: Annotated[StrictInt, Field(ge=1)]


class ScaledCongestionCost(StrictModel):
    family: Literal["scaled_congestion"]
    c: CongestionDeclaration


class MatroidBinaryCost(StrictModel):
    family: Literal["matroid_binary"]
    c: CongestionDeclaration


class PolynomialCost(StrictModel):
    family: Literal["polynomial"]
    coefficients: list[ExactScalar] = Field(min_length=1)
    in_load: bool = True


class TablePoint(StrictModel):
    x: Count
    t: Count
    value: ExactScalar


class CustomTableCost(StrictModel):
    family: Literal["custom_table"]
    values: list[TablePoint]
    extension: Literal["error", "inf"] = "error"


CostDeclaration = Annotated[
    Union[Mm1Cost, ScaledCongestionCost, MatroidBinaryCost, PolynomialCost, CustomTableCost],
    Field(discriminator="family"),
]


def _check_costs(
    owner: str,
    labels: list[str],
    costs: dict[str, Any],
    default_cost: Optional[Any],
) -> None:
    unknown = [label for label in costs if label not in labels]
    if unknown:
        raise ValueError(f"{owner}: costs given for unknown elements {unknown}")
    missing = [label for label in labels if label not in costs]
    if missing and default_cost is None:
        raise ValueError(f"{owner}: no cost for {missing} and no default_cost")


# Files
class ProblemFile(StrictModel):
    """Single optimization instance P(t, d)."""

    schema_: StrictInt = Field(alias="schema")
    kind: Literal["problem"]
    ground: list[Label] = Field(min_length=1)
    rank: RankDeclaration
    demand: Count
    t: Union[list[Count], dict[Label, Count]] = Field(default_factory=dict)
    costs: dict[Label, CostDeclaration] = Field(default_factory=dict)
    default_cost: Optional[CostDeclaration] = None

    model_config = ConfigDict(extra="forbid", populate_by_name=True)

    @model_validator(mode="after")
    def check_elements(self) -> "ProblemFile":
        if len(set(self.ground)) != len(self.ground):
            raise ValueError(f"Duplicate labels in ground {self.ground}")
        if isinstance(self.t, list):
            if len(self.t) != len(self.ground):
                raise ValueError(f"t has {len(self.t)} entries for {len(self.ground)} elements")
        else:
            unknown = [label for label in self.t if label not in self.ground]
            if unknown:
                raise ValueError(f"t given for unknown elements {unknown}")
        _check_costs("problem", self.ground, self.costs, self.default_cost)
        return self

    def t_vector(self) -> tuple[int, ...]:
        if isinstance(self.t, list):
            return tuple(self.t)
        return tuple(self.t.get(label, 0) for label in self.ground)


class PlayerDeclaration(StrictModel):
    name: Label
    demand: Count
    rank: RankDeclaration
    costs: dict[Label, CostDeclaration] = Field(default_factory=dict)
    default_cost: Optional[CostDeclaration] = None


class GameFile(StrictModel):
    """Polymatroid game on a shared resource set."""

    schema_: StrictInt = Field(alias="schema")
    kind: Literal["game"]
    resources: list[Label] = Field(min_length=1)
    players: list[PlayerDeclaration] = Field(min_length=1)

    model_config = ConfigDict(extra="forbid", populate_by_name=True)

    @model_validator(mode="after")
    def check_players(self) -> "GameFile":
        if len(set(self.resources)) != len(self.resources):
            raise ValueError(f"Duplicate labels in resources {self.resources}")
        names = [p.name for p in self.players]
        if len(set(names)) != len(names):
            raise ValueError(f"Duplicate player names {names}")
        for p in self.players:
            _check_costs(f"player {p.name}", self.resources, p.costs, p.default_cost)
        return self


InstanceFile = Annotated[Union[ProblemFile, GameFile], Field(discriminator="kind")]
