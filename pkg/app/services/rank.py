"""Integral polymatroid rank functions on small ground sets.

Subsets are handled internally as bitmasks over the dense element indices of a
GroundSet. Explicit tables are stored per bitmask; composite constructors
(truncation, scaling, embedding) evaluate their base lazily.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from itertools import combinations
from typing import Any, Callable, Iterable, Mapping, Optional

import networkx as nx

from app.config import settings
from app.exceptions import CapacityError, ConstructionError, DomainError

logger = logging.getLogger(__name__)

Subset = int | Iterable[int | str]


class RankKind(str, Enum):
    """Representation tag of a rank function."""

    EXPLICIT_TABLE = "table"
    TRUNCATED = "truncate"
    SCALED = "scale"
    GRAPHIC_MATROID = "graphic"
    SINGLETON_COVER = "singleton_cover"
    MATROID_FROM_RANK_TABLE = "matroid_table"
    EMBEDDED = "embed"


@dataclass(frozen=True)
class GroundSet:
    """Ordered, non-empty set of uniquely labelled elements."""

    labels: tuple[str, ...]

    def __post_init__(self) -> None:
        if not self.labels:
            raise ConstructionError("Ground set must be non-empty")
        if len(set(self.labels)) != len(self.labels):
            raise ConstructionError(f"Duplicate element labels in {list(self.labels)}")

    @classmethod
    def of_size(cls, m: int) -> "GroundSet":
        return cls(tuple(f"e{i}" for i in range(m)))

    @classmethod
    def from_labels(cls, labels: Iterable[Any]) -> "GroundSet":
        return cls(tuple(str(label) for label in labels))

    @property
    def size(self) -> int:
        return len(self.labels)

    @property
    def full_mask(self) -> int:
        return (1 << self.size) - 1

    def index(self, element: int | str) -> int:
        """Dense index of an element given by index or label."""
        if isinstance(element, bool):
            raise DomainError(f"Invalid element: {element!r}")
        if isinstance(element, int):
            if 0 <= element < self.size:
                return element
            raise DomainError(f"Element index {element} outside ground set of size {self.size}")
        try:
            return self.labels.index(element)
        except ValueError:
            raise DomainError(f"Element {element!r} not in ground set {list(self.labels)}")

    def mask(self, subset: Subset) -> int:
        """Bitmask of a subset given as a mask or as an iterable of indices/labels."""
        if isinstance(subset, int) and not isinstance(subset, bool):
            if subset < 0 or subset > self.full_mask:
                raise DomainError(f"Subset mask {subset} outside ground set of size {self.size}")
            return subset
        if isinstance(subset, str):
            raise DomainError(f"Subset must be a collection of elements, got {subset!r}")
        result = 0
        for element in subset:
            result |= 1 << self.index(element)
        return result

    def elements(self, mask: int) -> tuple[int, ...]:
        return tuple(i for i in range(self.size) if mask >> i & 1)

    def label_list(self, mask: int) -> list[str]:
        return [self.labels[i] for i in self.elements(mask)]


@dataclass(frozen=True)
class RankFlags:
    """Structural properties known by construction (None: unknown until checked)."""

    normalized: Optional[bool] = None
    monotone: Optional[bool] = None
    submodular: Optional[bool] = None


POLYMATROID = RankFlags(normalized=True, monotone=True, submodular=True)


@dataclass(frozen=True)
class PropertyCheck:
    """Outcome of an exhaustive property check with an optional witness."""

    holds: bool
    witness: Optional[tuple[frozenset[int], ...]] = None

    def __bool__(self) -> bool:
        return self.holds


@dataclass(frozen=True, eq=False)
class RankFunction:
    """Integer set function f: 2^E -> N.

    `declaration` is the instance-file payload that rebuilds this function.
    """

    ground: GroundSet
    kind: RankKind
    evaluator: Callable[[int], int] = field(repr=False)
    flags: RankFlags = field(default_factory=RankFlags)
    declaration: dict = field(default_factory=dict, repr=False)

    def __call__(self, subset: Subset) -> int:
        return self.value(self.ground.mask(subset))

    def value(self, mask: int) -> int:
        """Evaluate on a bitmask without validation."""
        return self.evaluator(mask)

    @cached_property
    def table(self) -> tuple[int, ...]:
        """All 2^|E| values indexed by bitmask; materialized once on first use."""
        require_within_cap(self.ground)
        return tuple(self.evaluator(mask) for mask in range(1 << self.ground.size))

    @property
    def total(self) -> int:
        """f(E)."""
        return self.value(self.ground.full_mask)


def require_within_cap(ground: GroundSet, cap: Optional[int] = None) -> None:
    cap = settings.ENUMERATION_CAP if cap is None else cap
    if ground.size > cap:
        raise CapacityError(f"Ground set of size {ground.size} exceeds enumeration cap {cap}")


def eval(f: RankFunction, subset: Subset) -> int:  # noqa: A001
    """Return f(U); elements outside the ground set raise DomainError."""
    return f(subset)


# =============================================================================
# CONSTRUCTORS
# =============================================================================


def explicit_table(ground: GroundSet, values: Mapping[Any, int]) -> RankFunction:
    """Rank function from a complete subset -> value table.

    Keys are bitmasks or iterables of element indices/labels.
    """
    require_within_cap(ground)
    table = [None] * (1 << ground.size)
    for key, value in values.items():
        mask = ground.mask(key)
        if isinstance(value, bool) or not isinstance(value, int) or value < 0:
            raise ConstructionError(
                f"Rank value for {ground.label_list(mask)} must be a nonnegative integer, got {value!r}"
            )
        if table[mask] is not None and table[mask] != value:
            raise ConstructionError(f"Conflicting values for subset {ground.label_list(mask)}")
        table[mask] = value
    missing = [mask for mask, value in enumerate(table) if value is None]
    if missing:
        raise ConstructionError(
            f"Table misses {len(missing)} subsets, first {ground.label_list(missing[0])}"
        )
    frozen = tuple(table)
    return RankFunction(
        ground=ground,
        kind=RankKind.EXPLICIT_TABLE,
        evaluator=frozen.__getitem__,
        flags=RankFlags(normalized=frozen[0] == 0),
        declaration={
            "kind": RankKind.EXPLICIT_TABLE.value,
            "values": [
                {"subset": ground.label_list(mask), "value": value}
                for mask, value in enumerate(frozen)
            ],
        },
    )


def from_callable(ground: GroundSet, fn: Callable[[frozenset[int]], int]) -> RankFunction:
    """Explicit table obtained by evaluating fn on every subset (as a frozenset of indices)."""
    require_within_cap(ground)
    values = {mask: fn(frozenset(ground.elements(mask))) for mask in range(1 << ground.size)}
    return explicit_table(ground, values)


def truncate(f: RankFunction, d: int) -> RankFunction:
    """f'(U) = min(d, f(U))."""
    if d < 0:
        raise DomainError(f"Truncation level must be nonnegative, got {d}")
    base = f.evaluator
    return RankFunction(
        ground=f.ground,
        kind=RankKind.TRUNCATED,
        evaluator=lambda mask: min(d, base(mask)),
        flags=f.flags,
        declaration={"kind": RankKind.TRUNCATED.value, "base": f.declaration, "d": d},
    )


def scale(f: RankFunction, k: int) -> RankFunction:
    """(k*f)(U) = k * f(U)."""
    if k < 1:
        raise ConstructionError(f"Scale factor must be positive, got {k}")
    base = f.evaluator
    return RankFunction(
        ground=f.ground,
        kind=RankKind.SCALED,
        evaluator=lambda mask: k * base(mask),
        flags=f.flags,
        declaration={"kind": RankKind.SCALED.value, "base": f.declaration, "k": k},
    )


def graphic_matroid_rank(
    graph: nx.MultiGraph | Iterable[tuple[Any, Any, Any]],
) -> RankFunction:
    """Rank of the graphic matroid: |V| minus the number of components of (V, U).

    Accepts a networkx (multi)graph, whose edges may carry a `label` attribute, or
    a list of (u, v, label) triples. Triples keep their list order; a networkx
    graph contributes its edges in its own iteration order, grouped by endpoint.
    """
    if isinstance(graph, nx.Graph):
        multigraph = nx.MultiGraph(graph)
        edges = [
            (u, v, data.get("label", f"{u}-{v}#{key}"))
            for u, v, key, data in multigraph.edges(keys=True, data=True)
        ]
        nodes = list(multigraph.nodes)
    else:
        edges = [(u, v, label) for u, v, label in graph]
        nodes = []
        for u, v, _ in edges:
            for node in (u, v):
                if node not in nodes:
                    nodes.append(node)
    if not nodes:
        raise ConstructionError("Graph must have at least one vertex")
    if not edges:
        raise ConstructionError("Graph must have at least one edge")

    full = nx.MultiGraph()
    full.add_nodes_from(nodes)
    full.add_edges_from((u, v) for u, v, _ in edges)
    if not nx.is_connected(full):
        raise ConstructionError(
            f"Graph is disconnected ({nx.number_connected_components(full)} components); "
            "spanning-tree semantics need a connected graph"
        )

    ground = GroundSet.from_labels(label for _, _, label in edges)
    vertex_count = len(nodes)

    def rank(mask: int) -> int:
        sub = nx.MultiGraph()
        sub.add_nodes_from(nodes)
        sub.add_edges_from((edges[i][0], edges[i][1]) for i in ground.elements(mask))
        return vertex_count - nx.number_connected_components(sub)

    return RankFunction(
        ground=ground,
        kind=RankKind.GRAPHIC_MATROID,
        evaluator=rank,
        flags=POLYMATROID,
        declaration={
            "kind": RankKind.GRAPHIC_MATROID.value,
            "edges": [[str(u), str(v), str(label)] for u, v, label in edges],
        },
    )


def singleton_cover(ground: GroundSet, support: Iterable[int | str], value: int) -> RankFunction:
    """f(U) = value if U meets the support, else 0 (singleton integer-splittable players)."""
    if value < 0:
        raise ConstructionError(f"Singleton-cover value must be nonnegative, got {value}")
    support_mask = ground.mask(support)
    if support_mask == 0:
        raise ConstructionError("Singleton-cover support must be non-empty")
    return RankFunction(
        ground=ground,
        kind=RankKind.SINGLETON_COVER,
        evaluator=lambda mask: value if mask & support_mask else 0,
        flags=POLYMATROID,
        declaration={
            "kind": RankKind.SINGLETON_COVER.value,
            "support": ground.label_list(support_mask),
            "value": value,
        },
    )


def uniform(ground: GroundSet, value: int) -> RankFunction:
    """f(U) = value for every non-empty U."""
    return singleton_cover(ground, range(ground.size), value)


def matroid_from_rank_table(
    ground: GroundSet,
    support: Iterable[int | str],
    ranks: Mapping[Any, int],
) -> RankFunction:
    """f(U) = rk(U & support) for a matroid rank table given on subsets of the support.

    The table is validated against the matroid rank axioms.
    """
    support_mask = ground.mask(support)
    support_elements = ground.elements(support_mask)
    table: dict[int, int] = {}
    for key, value in ranks.items():
        mask = ground.mask(key)
        if mask & ~support_mask:
            raise ConstructionError(
                f"Matroid rank given outside the support: {ground.label_list(mask)}"
            )
        table[mask] = value

    subsets = [0]
    for element in support_elements:
        subsets += [mask | 1 << element for mask in subsets]
    missing = [mask for mask in subsets if mask not in table]
    if missing:
        raise ConstructionError(
            f"Matroid rank table misses subset {ground.label_list(missing[0])}"
        )
    for mask in subsets:
        value = table[mask]
        if not isinstance(value, int) or value < 0 or value > bin(mask).count("1"):
            raise ConstructionError(
                f"Matroid rank {value!r} of {ground.label_list(mask)} violates 0 <= rk(U) <= |U|"
            )
        for element in support_elements:
            bit = 1 << element
            if mask & bit:
                continue
            if not table[mask] <= table[mask | bit] <= table[mask] + 1:
                raise ConstructionError(
                    f"Matroid rank is not unit-increasing at {ground.label_list(mask)} + "
                    f"{ground.labels[element]}"
                )
            for other in support_elements:
                obit = 1 << other
                if other <= element or mask & obit:
                    continue
                if table[mask | bit] + table[mask | obit] < table[mask] + table[mask | bit | obit]:
                    raise ConstructionError(
                        f"Matroid rank table is not submodular at {ground.label_list(mask)}"
                    )

    frozen = dict(table)
    return RankFunction(
        ground=ground,
        kind=RankKind.MATROID_FROM_RANK_TABLE,
        evaluator=lambda mask: frozen[mask & support_mask],
        flags=POLYMATROID,
        declaration={
            "kind": RankKind.MATROID_FROM_RANK_TABLE.value,
            "support": ground.label_list(support_mask),
            "values": [
                {"subset": ground.label_list(mask), "value": frozen[mask]} for mask in subsets
            ],
        },
    )


def embed(f: RankFunction, ground: GroundSet, mapping: Mapping[str, str]) -> RankFunction:
    """Transport f onto a larger ground set along an injective relabelling.

    f'(U) = f({e : mapping[e] in U}); elements of `ground` outside the image are loops.
    Every element of f's ground set must be mapped.
    """
    missing = [label for label in f.ground.labels if label not in mapping]
    if missing:
        raise ConstructionError(f"Embedding leaves elements unmapped: {missing}")
    extra = [label for label in mapping if label not in f.ground.labels]
    if extra:
        raise ConstructionError(f"Embedding maps unknown elements: {extra}")
    targets = [ground.index(mapping[label]) for label in f.ground.labels]
    if len(set(targets)) != len(targets):
        raise ConstructionError("Embedding must be injective")
    base = f.evaluator

    def pulled_back(mask: int) -> int:
        source = 0
        for i, target in enumerate(targets):
            if mask >> target & 1:
                source |= 1 << i
        return base(source)

    return RankFunction(
        ground=ground,
        kind=RankKind.EMBEDDED,
        evaluator=pulled_back,
        flags=f.flags,
        declaration={
            "kind": RankKind.EMBEDDED.value,
            "ground": list(f.ground.labels),
            "base": f.declaration,
            "mapping": {label: mapping[label] for label in f.ground.labels},
        },
    )


# =============================================================================
# PROPERTY CHECKS
# =============================================================================


def is_monotone_normalized(f: RankFunction) -> PropertyCheck:
    """Exhaustive check of f(empty) = 0 and U <= V => f(U) <= f(V).

    The witness is (U,) for a normalization failure or (U, U + v) for a
    monotonicity failure.
    """
    table = f.table
    if table[0] != 0:
        return PropertyCheck(False, (frozenset(),))
    m = f.ground.size
    for mask in range(1 << m):
        for v in range(m):
            bit = 1 << v
            if not mask & bit and table[mask] > table[mask | bit]:
                return PropertyCheck(
                    False,
                    (frozenset(f.ground.elements(mask)), frozenset(f.ground.elements(mask | bit))),
                )
    return PropertyCheck(True)


def is_submodular(f: RankFunction) -> PropertyCheck:
    """Exhaustive submodularity check via the local criterion.

    f is submodular iff f(U+v) + f(U+w) >= f(U) + f(U+v+w) for all U and distinct
    v, w outside U. A failure yields the witness (S, T) = (U+v, U+w), which
    satisfies f(S) + f(T) < f(S & T) + f(S | T). Scan order is ascending U, then
    ascending (v, w).
    """
    table = f.table
    m = f.ground.size
    for mask in range(1 << m):
        outside = [v for v in range(m) if not mask >> v & 1]
        for v, w in combinations(outside, 2):
            s, t = mask | 1 << v, mask | 1 << w
            if table[s] + table[t] < table[mask] + table[s | t]:
                return PropertyCheck(
                    False, (frozenset(f.ground.elements(s)), frozenset(f.ground.elements(t)))
                )
    return PropertyCheck(True)


def is_strictly_positive(f: RankFunction) -> PropertyCheck:
    """f(U) > 0 for every non-empty U."""
    table = f.table
    for mask in range(1, len(table)):
        if table[mask] <= 0:
            return PropertyCheck(False, (frozenset(f.ground.elements(mask)),))
    return PropertyCheck(True)


def with_checked_flags(f: RankFunction) -> RankFunction:
    """Copy of f whose unknown flags are replaced by exhaustive check results."""
    flags = f.flags
    if flags.normalized is not None and flags.monotone is not None and flags.submodular is not None:
        return f
    monotone = is_monotone_normalized(f).holds
    checked = RankFlags(
        normalized=f.table[0] == 0,
        monotone=monotone,
        submodular=is_submodular(f).holds,
    )
    return RankFunction(
        ground=f.ground,
        kind=f.kind,
        evaluator=f.evaluator,
        flags=checked,
        declaration=f.declaration,
    )
