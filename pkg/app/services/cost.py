"""Two-parameter cost functions C(x; t) with exact values and regularity checks.

x is the load of the element itself, t the parameter (for games: the load of
all other players). Built-in families:

- mm1(u):               1/(u - t - x) below capacity, +inf at or above it
- scaled_congestion(c): c(x + t) * x
- matroid_binary(c):    0 at x = 0, c(1 + t) at x = 1, undefined for x >= 2
- polynomial(a):        sum_k a_k (x + t)^k, or sum_k a_k x^k when not in load
- custom_table(values): explicit (x, t) -> value map
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Any, Callable, Mapping, Optional, Sequence

from app.config import settings
from app.exceptions import ConstructionError, DomainError
from app.services.exact import INF, ExactValue, exact, format_exact, marginal

logger = logging.getLogger(__name__)


class CostFamily(str, Enum):
    MM1 = "mm1"
    SCALED_CONGESTION = "scaled_congestion"
    MATROID_BINARY = "matroid_binary"
    POLYNOMIAL = "polynomial"
    CUSTOM_TABLE = "custom_table"


class CongestionKind(str, Enum):
    POLYNOMIAL = "polynomial"
    HINGE = "hinge"
    TABLE = "table"


# =============================================================================
# ONE-PARAMETER CONGESTION FUNCTIONS c: N -> Q
# =============================================================================


@dataclass(frozen=True)
class Congestion:
    """Congestion function c(y) of the aggregate load y.

    polynomial: sum_k coefficients[k] * y^k
    hinge:      max(0, slope * y + offset)
    table:      values[y], extended linearly with the last slope
    """

    kind: CongestionKind
    coefficients: tuple[Fraction, ...] = ()
    slope: Fraction = Fraction(0)
    offset: Fraction = Fraction(0)
    values: tuple[Fraction, ...] = ()

    @classmethod
    def polynomial(cls, coefficients: Sequence[Any]) -> "Congestion":
        coeffs = tuple(_finite(value) for value in coefficients)
        if not coeffs:
            raise ConstructionError("Polynomial needs at least one coefficient")
        return cls(CongestionKind.POLYNOMIAL, coefficients=coeffs)

    @classmethod
    def constant(cls, value: Any) -> "Congestion":
        return cls.polynomial([value])

    @classmethod
    def linear(cls, slope: Any, offset: Any = 0) -> "Congestion":
        return cls.polynomial([offset, slope])

    @classmethod
    def hinge(cls, slope: Any, offset: Any) -> "Congestion":
        return cls(CongestionKind.HINGE, slope=_finite(slope), offset=_finite(offset))

    @classmethod
    def table(cls, values: Sequence[Any]) -> "Congestion":
        vals = tuple(_finite(value) for value in values)
        if not vals:
            raise ConstructionError("Congestion table must be non-empty")
        return cls(CongestionKind.TABLE, values=vals)

    def __call__(self, y: int) -> Fraction:
        if y < 0:
            raise DomainError(f"Congestion evaluated at negative load {y}")
        if self.kind == CongestionKind.POLYNOMIAL:
            return sum((a * y**k for k, a in enumerate(self.coefficients)), Fraction(0))
        if self.kind == CongestionKind.HINGE:
            return max(Fraction(0), self.slope * y + self.offset)
        if y < len(self.values):
            return self.values[y]
        last_slope = self.values[-1] - self.values[-2] if len(self.values) > 1 else Fraction(0)
        return self.values[-1] + last_slope * (y - len(self.values) + 1)

    def describe(self) -> dict:
        if self.kind == CongestionKind.POLYNOMIAL:
            return {"kind": self.kind.value, "coefficients": [format_exact(a) for a in self.coefficients]}
        if self.kind == CongestionKind.HINGE:
            return {
                "kind": self.kind.value,
                "slope": format_exact(self.slope),
                "offset": format_exact(self.offset),
            }
        return {"kind": self.kind.value, "values": [format_exact(v) for v in self.values]}


def _finite(value: Any) -> Fraction:
    parsed = exact(value)
    if parsed is INF:
        raise ConstructionError("Congestion coefficients must be finite")
    return parsed


def _congestion_shape(c: Congestion, y_max: int) -> tuple[bool, bool, bool]:
    """(nonnegative, nondecreasing, convex) on 0..y_max."""
    values = [c(y) for y in range(y_max + 2)]
    nonnegative = all(v >= 0 for v in values)
    steps = [b - a for a, b in zip(values, values[1:])]
    nondecreasing = all(s >= 0 for s in steps)
    convex = all(a <= b for a, b in zip(steps, steps[1:]))
    return nonnegative, nondecreasing, convex


# =============================================================================
# TWO-PARAMETER COSTS
# =============================================================================


@dataclass(frozen=True, eq=False)
class CostFunction:
    """C(x; t) -> ExactValue with discrete derivatives.

    `x_limit` bounds the admissible x (1 for matroid_binary); evaluation beyond it
    is a domain error. `declaration` is the instance-file payload.
    """

    family: CostFamily
    evaluator: Callable[[int, int], ExactValue] = field(repr=False)
    declaration: dict = field(default_factory=dict)
    x_limit: Optional[int] = None

    def __call__(self, x: int, t: int) -> ExactValue:
        if x < 0 or t < 0:
            raise DomainError(f"Cost evaluated at negative argument (x={x}, t={t})")
        if self.x_limit is not None and x > self.x_limit:
            raise DomainError(
                f"{self.family.value} cost is only defined for x <= {self.x_limit}, got x={x}"
            )
        return self.evaluator(x, t)

    def left_derivative(self, x: int, t: int) -> ExactValue:
        """C^-(x; t) = C(x; t) - C(x - 1; t), defined for x >= 1."""
        if x < 1:
            raise DomainError(f"Left derivative needs x >= 1, got x={x}")
        return marginal(self(x, t), self(x - 1, t))

    def right_derivative(self, x: int, t: int) -> ExactValue:
        """C^+(x; t) = C(x + 1; t) - C(x; t); +inf past x_limit."""
        if self.x_limit is not None and x + 1 > self.x_limit:
            return INF
        return marginal(self(x + 1, t), self(x, t))

    def admits(self, x: int) -> bool:
        return self.x_limit is None or x <= self.x_limit


def left_derivative(C: CostFunction, x: int, t: int) -> ExactValue:
    return C.left_derivative(x, t)


def right_derivative(C: CostFunction, x: int, t: int) -> ExactValue:
    return C.right_derivative(x, t)


@dataclass(frozen=True)
class RegularityCheck:
    regular: bool
    witness: Optional[tuple[int, int]] = None
    condition: Optional[str] = None

    def __bool__(self) -> bool:
        return self.regular


def is_regular(C: CostFunction, x_max: int, t_max: int) -> RegularityCheck:
    """Check C^-(x;t) <= C^-(x;t+1) and C^-(x;t+1) <= C^-(x+1;t) on the box.

    The box is 1 <= x <= x_max, 0 <= t <= t_max, scanned x-major. The first
    violated point is returned together with the name of the failed inequality
    ("marginal_in_t" or "parameter_vs_load"). Binary costs are only probed
    where x + 1 stays admissible.
    """
    for x in range(1, x_max + 1):
        if not C.admits(x):
            break
        for t in range(0, t_max + 1):
            here = C.left_derivative(x, t)
            bumped = C.left_derivative(x, t + 1)
            if here > bumped:
                return RegularityCheck(False, (x, t), "marginal_in_t")
            if C.admits(x + 1) and bumped > C.left_derivative(x + 1, t):
                return RegularityCheck(False, (x, t), "parameter_vs_load")
    return RegularityCheck(True)


def is_discrete_convex(C: CostFunction, x_max: int, t_max: int) -> bool:
    """C^-(x;t) <= C^+(x;t) on the box."""
    for x in range(1, x_max + 1):
        if not C.admits(x + 1):
            break
        for t in range(0, t_max + 1):
            if C.left_derivative(x, t) > C.right_derivative(x, t):
                return False
    return True


# =============================================================================
# BUILT-IN FAMILIES
# =============================================================================


def mm1(u: int) -> CostFunction:
    """M/M/1 delay with capacity u: 1/(u - t - x) if x + t < u, else +inf."""
    if isinstance(u, bool) or not isinstance(u, int) or u < 1:
        raise ConstructionError(f"mm1 capacity must be a positive integer, got {u!r}")

    def delay(x: int, t: int) -> ExactValue:
        headroom = u - t - x
        return Fraction(1, headroom) if headroom > 0 else INF

    return CostFunction(CostFamily.MM1, delay, {"family": CostFamily.MM1.value, "u": u})


def scaled_congestion(c: Congestion) -> CostFunction:
    """C(x; t) = c(x + t) * x for a nonnegative, nondecreasing, convex c."""
    nonnegative, nondecreasing, convex = _congestion_shape(c, settings.COST_SAMPLE_MAX)
    if not (nonnegative and nondecreasing and convex):
        raise ConstructionError(
            f"scaled_congestion needs c nonnegative, nondecreasing and convex on "
            f"0..{settings.COST_SAMPLE_MAX}: {c.describe()}"
        )
    return CostFunction(
        CostFamily.SCALED_CONGESTION,
        lambda x, t: c(x + t) * x,
        {"family": CostFamily.SCALED_CONGESTION.value, "c": c.describe()},
    )


def matroid_binary(c: Congestion) -> CostFunction:
    """C(0; t) = 0 and C(1; t) = c(1 + t); x >= 2 is outside the domain."""
    nonnegative, nondecreasing, _ = _congestion_shape(c, settings.COST_SAMPLE_MAX)
    if not (nonnegative and nondecreasing):
        raise ConstructionError(
            f"matroid_binary needs c nonnegative and nondecreasing: {c.describe()}"
        )
    return CostFunction(
        CostFamily.MATROID_BINARY,
        lambda x, t: c(1 + t) if x == 1 else Fraction(0),
        {"family": CostFamily.MATROID_BINARY.value, "c": c.describe()},
        x_limit=1,
    )


def polynomial(coefficients: Sequence[Any], in_load: bool = True) -> CostFunction:
    """C(x; t) = sum_k a_k y^k with y = x + t (in_load) or y = x."""
    poly = Congestion.polynomial(coefficients)
    nonnegative, nondecreasing, _ = _congestion_shape(poly, settings.COST_SAMPLE_MAX)
    if not (nonnegative and nondecreasing):
        raise ConstructionError(
            f"polynomial cost must be nonnegative and nondecreasing: {list(coefficients)}"
        )
    if in_load:
        evaluator = lambda x, t: poly(x + t)  # noqa: E731
    else:
        evaluator = lambda x, t: poly(x)  # noqa: E731
    return CostFunction(
        CostFamily.POLYNOMIAL,
        evaluator,
        {
            "family": CostFamily.POLYNOMIAL.value,
            "coefficients": poly.describe()["coefficients"],
            "in_load": in_load,
        },
    )


def custom_table(values: Mapping[tuple[int, int], Any], extension: str = "error") -> CostFunction:
    """Explicit C(x; t) table; points outside raise (`error`) or cost +inf (`inf`)."""
    if extension not in ("error", "inf"):
        raise ConstructionError(f"Unknown table extension {extension!r}; use 'error' or 'inf'")
    table: dict[tuple[int, int], ExactValue] = {}
    for (x, t), value in values.items():
        if x < 0 or t < 0:
            raise ConstructionError(f"Table point ({x}, {t}) has a negative coordinate")
        parsed = exact(value)
        if parsed < 0:
            raise ConstructionError(f"Table value at ({x}, {t}) is negative: {value}")
        table[(x, t)] = parsed

    def lookup(x: int, t: int) -> ExactValue:
        if (x, t) in table:
            return table[(x, t)]
        if extension == "inf":
            return INF
        raise DomainError(f"Custom cost table has no value at (x={x}, t={t})")

    return CostFunction(
        CostFamily.CUSTOM_TABLE,
        lookup,
        {
            "family": CostFamily.CUSTOM_TABLE.value,
            "values": [
                {"x": x, "t": t, "value": format_exact(value)}
                for (x, t), value in sorted(table.items())
            ],
            "extension": extension,
        },
    )
