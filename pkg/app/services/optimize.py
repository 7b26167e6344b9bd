"""Separable convex minimization over B_f(d) and incremental reoptimization.

    minimize  sum_e C_e(x_e; t_e)  subject to  x in B_f(d)

`solve` builds the optimum greedily one unit at a time; the reoptimization
operations move an optimum for (t, d) to an optimum for a shifted parameter or
demand with a single local step, gated by the local optimality test.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Any, Iterable, Mapping, Optional, Sequence

import networkx as nx

from app.exceptions import (
    DomainError,
    InfeasibleError,
    InputError,
    InvariantViolation,
    PreconditionError,
)
from app.services import rank as rank_fns
from app.services.cost import CostFunction, is_regular, mm1
from app.services.exact import INF, ExactValue, exact_sum, format_exact, is_infinite
from app.services.polytope import (
    Allocation,
    BasePolytope,
    apply_decrement,
    apply_exchange,
    apply_increment,
    l1_distance,
    zero,
)

logger = logging.getLogger(__name__)


# =============================================================================
# DATA TYPES
# =============================================================================


@dataclass(frozen=True, eq=False)
class ProblemInstance:
    """One instance P(t, d): base polytope, parameter vector and per-element costs."""

    polytope: BasePolytope
    t: tuple[int, ...]
    costs: tuple[CostFunction, ...]

    def __post_init__(self) -> None:
        m = self.polytope.size
        if len(self.t) != m:
            raise DomainError(f"Parameter vector has length {len(self.t)}, expected {m}")
        if any(isinstance(v, bool) or not isinstance(v, int) or v < 0 for v in self.t):
            raise DomainError(f"Parameter entries must be nonnegative integers: {self.t}")
        if len(self.costs) != m:
            raise DomainError(f"Got {len(self.costs)} cost functions for {m} elements")

    @property
    def f(self):
        return self.polytope.f

    @property
    def d(self) -> int:
        return self.polytope.d

    @property
    def size(self) -> int:
        return self.polytope.size

    def with_t(self, t: Sequence[int]) -> "ProblemInstance":
        return replace(self, t=tuple(t))

    def with_d(self, d: int) -> "ProblemInstance":
        return replace(self, polytope=self.polytope.at_demand(d))

    def objective(self, x: Allocation) -> ExactValue:
        return exact_sum(C(x_e, t_e) for C, x_e, t_e in zip(self.costs, x, self.t))

    def loaded_cost(self, x: Allocation) -> ExactValue:
        """Cost summed over the support of x only."""
        return exact_sum(
            C(x_e, t_e) for C, x_e, t_e in zip(self.costs, x, self.t) if x_e > 0
        )

    def marginal_up(self, x: Allocation, e: int) -> ExactValue:
        return self.costs[e].right_derivative(x[e], self.t[e])

    def marginal_down(self, x: Allocation, e: int) -> ExactValue:
        return self.costs[e].left_derivative(x[e], self.t[e])

    def regularity_violations(self, extra_t: int = 0) -> list[tuple[int, tuple[int, int], str]]:
        """Elements whose cost fails regularity on [1..d] x [0..max(t)+extra_t]."""
        t_max = max(self.t, default=0) + extra_t
        x_max = max(self.d, 1)
        violations = []
        for e, C in enumerate(self.costs):
            check = is_regular(C, x_max, t_max)
            if not check.regular:
                violations.append((e, check.witness, check.condition))
        return violations

    def ensure_regular(self, extra_t: int = 0) -> None:
        violations = self.regularity_violations(extra_t)
        if violations:
            e, witness, condition = violations[0]
            raise InputError(
                f"Cost of element {self.f.ground.labels[e]} is not regular "
                f"({condition} fails at x={witness[0]}, t={witness[1]})"
            )


@dataclass(frozen=True)
class DeltaValue:
    """min over D_e(x) of C^+_g(x_g; t_g), with its argmin (None when D_e(x) is empty)."""

    value: ExactValue
    argmin: Optional[int]


@dataclass(frozen=True)
class OptimalityCheck:
    optimal: bool
    violating_element: Optional[int] = None
    left_marginal: Optional[ExactValue] = None
    delta: Optional[DeltaValue] = None

    def __bool__(self) -> bool:
        return self.optimal


class StepKind(str, Enum):
    EXCHANGE = "exchange"
    INCREMENT = "increment"
    DECREMENT = "decrement"
    RESOLVE = "resolve"


@dataclass(frozen=True)
class ExchangeStep:
    """One elementary step and the allocation after it."""

    kind: StepKind
    source: Optional[int]
    target: Optional[int]
    allocation: Allocation
    objective: ExactValue
    stage: str = ""

    def to_dict(self, labels: Sequence[str]) -> dict:
        return {
            "kind": self.kind.value,
            "from": labels[self.source] if self.source is not None else None,
            "to": labels[self.target] if self.target is not None else None,
            "allocation": list(self.allocation),
            "objective": format_exact(self.objective),
            "stage": self.stage,
        }


@dataclass
class ExchangeTrace:
    """Ordered elementary steps of a reoptimization run."""

    steps: list[ExchangeStep] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.steps)

    def record(self, step: ExchangeStep) -> None:
        self.steps.append(step)

    def to_list(self, labels: Sequence[str]) -> list[dict]:
        return [step.to_dict(labels) for step in self.steps]


@dataclass(frozen=True)
class Reoptimization:
    """Result of one unit reoptimization step."""

    allocation: Allocation
    step: Optional[ExchangeStep]
    fallback: bool = False


def _step_between(
    P: ProblemInstance, before: Allocation, after: Allocation, stage: str
) -> Optional[ExchangeStep]:
    """Classify the difference of two allocations as an elementary step."""
    if before == after:
        return None
    removed = [e for e in range(len(before)) if after[e] < before[e]]
    added = [e for e in range(len(before)) if after[e] > before[e]]
    distance = l1_distance(before, after)
    if distance == 2 and len(removed) == 1 and len(added) == 1:
        kind, source, target = StepKind.EXCHANGE, removed[0], added[0]
    elif distance == 1 and added:
        kind, source, target = StepKind.INCREMENT, None, added[0]
    elif distance == 1 and removed:
        kind, source, target = StepKind.DECREMENT, removed[0], None
    else:
        kind, source, target = StepKind.RESOLVE, None, None
    return ExchangeStep(kind, source, target, after, P.objective(after), stage)


# =============================================================================
# LOCAL OPTIMALITY
# =============================================================================


def _argmin(candidates: Iterable[int], key) -> tuple[Optional[int], ExactValue]:
    """Lowest-index minimizer."""
    best, best_value = None, INF
    for e in candidates:
        value = key(e)
        if best is None or value < best_value:
            best, best_value = e, value
    return best, best_value


def _argmax(candidates: Iterable[int], key) -> tuple[Optional[int], Optional[ExactValue]]:
    """Lowest-index maximizer."""
    best, best_value = None, None
    for e in candidates:
        value = key(e)
        if best is None or value > best_value:
            best, best_value = e, value
    return best, best_value


def delta(P: ProblemInstance, x: Allocation, e: int) -> DeltaValue:
    """Delta_e(x; t), ties broken by lowest element index; +inf on an empty D_e(x)."""
    candidates = P.polytope.exchange_set(x, e)
    g, value = _argmin(candidates, lambda g: P.marginal_up(x, g))
    return DeltaValue(value=value if g is not None else INF, argmin=g)


def verify_optimal(P: ProblemInstance, x: Allocation) -> OptimalityCheck:
    """C^-_e(x_e; t_e) <= Delta_e(x; t) for every loaded element e."""
    P.polytope.require_member(x)
    for e in range(P.size):
        if x[e] == 0:
            continue
        left = P.marginal_down(x, e)
        dv = delta(P, x, e)
        if left > dv.value:
            return OptimalityCheck(False, e, left, dv)
    return OptimalityCheck(True)


def _gate(P: ProblemInstance, x: Allocation, what: str) -> None:
    check = verify_optimal(P, x)
    if not check.optimal:
        raise InvariantViolation(
            f"{what}: {x} fails the optimality test at element "
            f"{P.f.ground.labels[check.violating_element]} "
            f"(C^- = {format_exact(check.left_marginal)} > Delta = "
            f"{format_exact(check.delta.value)})"
        )


def _require_optimal(P: ProblemInstance, x: Allocation) -> None:
    if not verify_optimal(P, x).optimal:
        raise PreconditionError(f"Allocation {x} is not optimal for the current instance")


# =============================================================================
# SOLVE
# =============================================================================


def solve(P: ProblemInstance) -> Allocation:
    """Greedy: d increments, each at the cheapest slack element (lowest index on ties)."""
    if not P.polytope.is_nonempty_bound():
        raise InfeasibleError(f"B_f({P.d}) is empty: d={P.d} exceeds f(E)={P.f.total}")
    x = zero(P.size)
    for level in range(P.d):
        slack = P.polytope.at_demand(level).slack_set(x)
        if not slack:
            raise InfeasibleError(f"Greedy found no slack element at demand {level}")
        g, _ = _argmin(slack, lambda g: P.marginal_up(x, g))
        x = apply_increment(x, g)
    logger.debug(f"Greedy solution {x} with objective {format_exact(P.objective(x))}")
    return x


def solve_demand_path(P: ProblemInstance) -> list[Allocation]:
    """Greedy optima for every demand 0..d; consecutive entries differ by one unit."""
    if not P.polytope.is_nonempty_bound():
        raise InfeasibleError(f"B_f({P.d}) is empty: d={P.d} exceeds f(E)={P.f.total}")
    path = [zero(P.size)]
    for level in range(P.d):
        x = path[-1]
        slack = P.polytope.at_demand(level).slack_set(x)
        if not slack:
            raise InfeasibleError(f"Greedy found no slack element at demand {level}")
        g, _ = _argmin(slack, lambda g: P.marginal_up(x, g))
        path.append(apply_increment(x, g))
    return path


# =============================================================================
# REOPTIMIZATION
# =============================================================================


def reoptimize_t_increase(P: ProblemInstance, x: Allocation, e_star: int) -> Reoptimization:
    """Optimum for t + chi_e* from an optimum x for t.

    Candidates are x and x - chi_e* + chi_g* with g* the argmin of Delta_e*(x; t).
    The unit moves when C^-_e*(x_e*; t_e* + 1) > C^+_g*(x_g*; t_g*). Only the two
    touched elements are compared, so +inf costs elsewhere do not mask the move.
    """
    _require_optimal(P, x)
    if not 0 <= e_star < P.size:
        raise DomainError(f"Element {e_star} outside ground set of size {P.size}")
    shifted = P.with_t(apply_increment(P.t, e_star))
    result = x
    if x[e_star] >= 1:
        dv = delta(P, x, e_star)
        if dv.argmin is not None and shifted.marginal_down(x, e_star) > dv.value:
            result = apply_exchange(x, e_star, dv.argmin)
    _gate(shifted, result, f"parameter increase on element {e_star}")
    return Reoptimization(result, _step_between(shifted, x, result, f"t+{e_star}"))


def reoptimize_t_decrease(P: ProblemInstance, x: Allocation, e_star: int) -> Reoptimization:
    """Optimum for t - chi_e* from an optimum x for t.

    Candidate: move into e* the unit with the largest C^-_g(x_g; t_g) among g with
    x + chi_e* - chi_g feasible, when that exceeds C^+_e*(x_e*; t_e* - 1). A
    candidate failing the optimality test is replaced by a full re-solve, which
    is logged and flagged.
    """
    if not 0 <= e_star < P.size:
        raise DomainError(f"Element {e_star} outside ground set of size {P.size}")
    if P.t[e_star] < 1:
        raise DomainError(f"Cannot decrease t at element {e_star}: t is already 0")
    _require_optimal(P, x)
    shifted = P.with_t(apply_decrement(P.t, e_star))
    donors = [
        g
        for g in range(P.size)
        if g != e_star and x[g] >= 1 and e_star in P.polytope.exchange_set(x, g)
    ]
    result = x
    g, released = _argmax(donors, lambda g: P.marginal_down(x, g))
    if g is not None and released > shifted.marginal_up(x, e_star):
        result = apply_exchange(x, g, e_star)
    return _gated_or_resolved(shifted, x, result, f"t-{e_star}")


def reoptimize_d(P: ProblemInstance, x: Allocation, direction: int) -> Reoptimization:
    """Optimum for d + direction from an optimum x for d (direction is +1 or -1)."""
    if direction not in (1, -1):
        raise DomainError(f"Demand direction must be +1 or -1, got {direction}")
    target = P.d + direction
    if target < 0:
        raise DomainError("Demand cannot be decreased below 0")
    if not P.polytope.at_demand(target).is_nonempty_bound():
        raise InfeasibleError(f"B_f({target}) is empty: f(E)={P.f.total}")
    _require_optimal(P, x)
    shifted = P.with_d(target)

    if direction == 1:
        slack = P.polytope.slack_set(x)
        if not slack:
            raise InfeasibleError(f"No slack element at {x}; B_f({target}) unreachable")
        g, _ = _argmin(slack, lambda g: P.marginal_up(x, g))
        result = apply_increment(x, g)
        _gate(shifted, result, "demand increase")
        return Reoptimization(result, _step_between(shifted, x, result, "d+1"))

    loaded = [e for e in range(P.size) if x[e] >= 1]
    e, _ = _argmax(loaded, lambda e: P.marginal_down(x, e))
    result = apply_decrement(x, e)
    return _gated_or_resolved(shifted, x, result, "d-1")


def _gated_or_resolved(
    shifted: ProblemInstance, before: Allocation, candidate: Allocation, stage: str
) -> Reoptimization:
    if verify_optimal(shifted, candidate).optimal:
        return Reoptimization(candidate, _step_between(shifted, before, candidate, stage))
    logger.warning(
        f"Local candidate {candidate} for step {stage} is not optimal; re-solving from scratch"
    )
    resolved = solve(shifted)
    _gate(shifted, resolved, f"re-solve after {stage}")
    return Reoptimization(resolved, _step_between(shifted, before, resolved, stage), fallback=True)


@dataclass(frozen=True)
class GeneralReoptimization:
    allocation: Allocation
    trace: ExchangeTrace
    instance: ProblemInstance
    fallbacks: int = 0


def reoptimize_general(
    P: ProblemInstance, x: Allocation, t_target: Sequence[int], d_target: int
) -> GeneralReoptimization:
    """Move an optimum for (t, d) to an optimum for (t', d') by unit steps.

    Order: all demand steps, then unit decreases of t in ascending element order,
    then unit increases in ascending element order.
    """
    t_target = tuple(t_target)
    if len(t_target) != P.size:
        raise DomainError(f"Target parameter has length {len(t_target)}, expected {P.size}")
    if any(v < 0 for v in t_target):
        raise DomainError(f"Target parameter entries must be nonnegative: {t_target}")
    if d_target < 0:
        raise DomainError(f"Target demand must be nonnegative, got {d_target}")
    _require_optimal(P, x)

    trace = ExchangeTrace()
    fallbacks = 0
    current = P

    def advance(result: Reoptimization) -> None:
        nonlocal fallbacks
        if result.step is not None:
            trace.record(result.step)
        fallbacks += result.fallback

    direction = 1 if d_target > P.d else -1
    while current.d != d_target:
        nxt = current.d + direction
        if not current.polytope.at_demand(nxt).is_nonempty_bound():
            raise InfeasibleError(f"Intermediate polytope B_f({nxt}) is empty")
        result = reoptimize_d(current, x, direction)
        advance(result)
        x, current = result.allocation, current.with_d(nxt)

    for e in range(P.size):
        while current.t[e] > t_target[e]:
            result = reoptimize_t_decrease(current, x, e)
            advance(result)
            x, current = result.allocation, current.with_t(apply_decrement(current.t, e))
    for e in range(P.size):
        while current.t[e] < t_target[e]:
            result = reoptimize_t_increase(current, x, e)
            advance(result)
            x, current = result.allocation, current.with_t(apply_increment(current.t, e))

    _gate(current, x, "general reoptimization")
    logger.info(f"Reoptimized in {len(trace)} steps ({fallbacks} fallbacks)")
    return GeneralReoptimization(x, trace, current, fallbacks)


# =============================================================================
# SPANNING-TREE PACKING
# =============================================================================


def tree_packing_instance(
    graph: nx.MultiGraph | Sequence[tuple[Any, Any, Any]],
    k: int,
    capacities: Mapping[Any, int] | Sequence[int],
) -> ProblemInstance:
    """Route k spanning trees through a network with M/M/1 edge delays.

    f is k times the graphic matroid rank, d = k(|V| - 1). Capacities u_e become
    the shared cost mm1(u) with u = max u_e and parameter t_e = u - u_e.
    Capacities are keyed by edge label. A positional list is only accepted with
    an ordered list of (u, v, label) triples, since a networkx graph iterates its
    edges grouped by endpoint rather than in insertion order.
    """
    f = rank_fns.graphic_matroid_rank(graph)
    scaled = rank_fns.scale(f, k) if k > 1 else f
    labels = f.ground.labels
    if isinstance(capacities, Mapping):
        missing = [label for label in labels if label not in capacities]
        if missing:
            raise DomainError(f"No capacity given for edges {missing}")
        caps = [capacities[label] for label in labels]
    elif isinstance(graph, nx.Graph):
        raise DomainError(
            "Positional capacities need an ordered edge list; key them by edge label instead"
        )
    else:
        caps = list(capacities)
    if len(caps) != len(labels):
        raise DomainError(f"Got {len(caps)} capacities for {len(labels)} edges")
    if any(c < 1 for c in caps):
        raise DomainError(f"Capacities must be positive: {caps}")
    u = max(caps)
    vertex_count = f.total + 1
    cost = mm1(u)
    return ProblemInstance(
        polytope=BasePolytope(scaled, k * (vertex_count - 1)),
        t=tuple(u - c for c in caps),
        costs=(cost,) * len(labels),
    )


def capacity_shift(P: ProblemInstance, e: int, change: int) -> tuple[int, ...]:
    """Parameter vector after changing the capacity of edge e by `change` units.

    Capacities above the common bound u are not representable by a parameter
    shift and raise DomainError.
    """
    t = list(P.t)
    t[e] -= change
    if t[e] < 0:
        raise DomainError(
            f"Capacity of element {e} would exceed the shared bound; rebuild the instance"
        )
    return tuple(t)


COST_SCOPE = {
    "objective": "sum of C_e(x_e; t_e) over every element, including C_e(0; t_e)",
    "loaded_cost": "sum over elements with x_e >= 1 only",
}


def objective_summary(P: ProblemInstance, x: Allocation) -> dict:
    """Objective over all elements next to the cost of the loaded elements alone.

    The two differ whenever C_e(0; t_e) != 0, e.g. mm1 where C(0; t) = 1/(u - t).
    """
    value = P.objective(x)
    return {
        "objective": format_exact(value),
        "loaded_cost": format_exact(P.loaded_cost(x)),
        "infinite_objective": is_infinite(value),
        "cost_scope": COST_SCOPE,
    }
