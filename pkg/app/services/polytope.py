"""Membership, exchange and slack machinery for integral base polytopes B_f(d)."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterable

from app.exceptions import DomainError, InvariantViolation, PreconditionError
from app.services.rank import GroundSet, RankFunction

logger = logging.getLogger(__name__)

Allocation = tuple[int, ...]


# =============================================================================
# ALLOCATION ARITHMETIC
# =============================================================================


def allocation(values: Iterable[int]) -> Allocation:
    """Validated allocation: a tuple of nonnegative integers."""
    result = tuple(values)
    for value in result:
        if isinstance(value, bool) or not isinstance(value, int) or value < 0:
            raise DomainError(f"Allocation entries must be nonnegative integers, got {result}")
    return result


def zero(m: int) -> Allocation:
    return (0,) * m


def unit_vector(m: int, e: int) -> Allocation:
    """chi_e in N^m."""
    if not 0 <= e < m:
        raise DomainError(f"Element {e} outside ground set of size {m}")
    return tuple(1 if i == e else 0 for i in range(m))


def support(x: Allocation) -> frozenset[int]:
    return frozenset(i for i, value in enumerate(x) if value > 0)


def l1_distance(x: Allocation, y: Allocation) -> int:
    if len(x) != len(y):
        raise DomainError(f"Allocations of different length: {len(x)} vs {len(y)}")
    return sum(abs(a - b) for a, b in zip(x, y))


def _shifted(x: Allocation, e: int, amount: int) -> Allocation:
    if not 0 <= e < len(x):
        raise DomainError(f"Element {e} outside allocation of length {len(x)}")
    if x[e] + amount < 0:
        raise DomainError(f"Cannot decrement element {e} below zero in {x}")
    return x[:e] + (x[e] + amount,) + x[e + 1 :]


def apply_exchange(x: Allocation, source: int, target: int) -> Allocation:
    """x - chi_source + chi_target; membership is not validated."""
    return _shifted(_shifted(x, source, -1), target, 1)


def apply_increment(x: Allocation, e: int) -> Allocation:
    return _shifted(x, e, 1)


def apply_decrement(x: Allocation, e: int) -> Allocation:
    return _shifted(x, e, -1)


# =============================================================================
# BASE POLYTOPE
# =============================================================================


@dataclass(frozen=True, eq=False)
class BasePolytope:
    """B_f(d) = {x in N^E : x(U) <= f(U) for all U, x(E) = d}."""

    f: RankFunction
    d: int

    def __post_init__(self) -> None:
        if isinstance(self.d, bool) or not isinstance(self.d, int) or self.d < 0:
            raise DomainError(f"Polytope rank must be a nonnegative integer, got {self.d}")

    @property
    def ground(self) -> GroundSet:
        return self.f.ground

    @property
    def size(self) -> int:
        return self.f.ground.size

    def at_demand(self, d: int) -> "BasePolytope":
        return BasePolytope(self.f, d)

    def is_nonempty_bound(self) -> bool:
        """d <= f(E), the rank condition for nonemptiness of a polymatroid base polytope."""
        return self.d <= self.f.total

    def check_indexing(self, x: Allocation) -> None:
        if len(x) != self.size:
            raise DomainError(
                f"Allocation of length {len(x)} does not match ground set of size {self.size}"
            )
        allocation(x)

    def subset_sums(self, x: Allocation) -> list[int]:
        """x(U) for every bitmask U."""
        sums = [0] * (1 << self.size)
        for mask in range(1, len(sums)):
            low = mask & -mask
            sums[mask] = sums[mask ^ low] + x[low.bit_length() - 1]
        return sums

    def member(self, x: Allocation) -> bool:
        """Exhaustive scan of all 2^|E| rank constraints plus x(E) = d."""
        self.check_indexing(x)
        if sum(x) != self.d:
            return False
        table = self.f.table
        sums = self.subset_sums(x)
        return all(s <= r for s, r in zip(sums, table))

    def require_member(self, x: Allocation) -> None:
        if not self.member(x):
            raise PreconditionError(f"Allocation {x} is not in B_f({self.d})")

    def tight_sets(self, x: Allocation) -> list[int]:
        """Non-empty bitmasks U with x(U) = f(U)."""
        table = self.f.table
        sums = self.subset_sums(x)
        return [mask for mask in range(1, len(sums)) if sums[mask] == table[mask]]

    def exchange_set(self, x: Allocation, e: int) -> tuple[int, ...]:
        """D_e(x) = {g != e : x + chi_g - chi_e in B}; empty when x_e = 0.

        A swap e -> g only breaks a constraint U that is tight at x, contains g
        and misses e, so the set is read off the tight sets.
        """
        self.require_member(x)
        if not 0 <= e < self.size:
            raise DomainError(f"Element {e} outside ground set of size {self.size}")
        if x[e] == 0:
            return ()
        blocked = 0
        bit = 1 << e
        for mask in self.tight_sets(x):
            if not mask & bit:
                blocked |= mask
        return tuple(g for g in range(self.size) if g != e and not blocked >> g & 1)

    def slack_set(self, x: Allocation) -> tuple[int, ...]:
        """S(x) = {e : x + chi_e in B_f(d+1)}: elements in no tight set."""
        self.require_member(x)
        blocked = 0
        for mask in self.tight_sets(x):
            blocked |= mask
        result = tuple(e for e in range(self.size) if not blocked >> e & 1)
        if not result and self.f.flags.submodular and self.d < self.f.total:
            raise InvariantViolation(
                f"Empty slack set at {x} although d={self.d} < f(E)={self.f.total} and f is submodular"
            )
        return result


def member(B: BasePolytope, x: Allocation) -> bool:
    return B.member(x)


def exchange_set(B: BasePolytope, x: Allocation, e: int) -> tuple[int, ...]:
    return B.exchange_set(x, e)


def slack_set(B: BasePolytope, x: Allocation) -> tuple[int, ...]:
    return B.slack_set(x)
