"""Exact cost values: arbitrary-precision rationals plus a single +inf."""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Union

from app.exceptions import ExactArithmeticError, InputError


class Infinity:
    """The distinguished value +inf. Greater than every rational, equal only to itself."""

    _instance: "Infinity | None" = None

    def __new__(cls) -> "Infinity":
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __reduce__(self):
        return (Infinity, ())

    def __repr__(self) -> str:
        return "INF"

    def __str__(self) -> str:
        return "inf"

    def __hash__(self) -> int:
        return hash("inf")

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Infinity)

    def __lt__(self, other: object) -> bool:
        _require_exact(other)
        return False

    def __le__(self, other: object) -> bool:
        _require_exact(other)
        return isinstance(other, Infinity)

    def __gt__(self, other: object) -> bool:
        _require_exact(other)
        return not isinstance(other, Infinity)

    def __ge__(self, other: object) -> bool:
        _require_exact(other)
        return True

    def __add__(self, other: object) -> "Infinity":
        _require_exact(other)
        return self

    __radd__ = __add__

    def __sub__(self, other: object) -> "Infinity":
        _require_exact(other)
        if isinstance(other, Infinity):
            raise ExactArithmeticError("inf - inf is undefined")
        return self

    def __rsub__(self, other: object) -> "Infinity":
        raise ExactArithmeticError("finite - inf is not representable")


INF = Infinity()

ExactValue = Union[Fraction, Infinity]


def _require_exact(value: object) -> None:
    if isinstance(value, (bool, float)) or not isinstance(value, (int, Fraction, Infinity)):
        raise TypeError(f"Not an exact value: {value!r}")


def is_infinite(value: ExactValue) -> bool:
    """True for +inf."""
    return isinstance(value, Infinity)


def exact(value: int | str | Fraction | Infinity) -> ExactValue:
    """Parse an int, a Fraction, "p/q", "p" or "inf" into an ExactValue.

    Floats are rejected; nothing in the cost path is ever floating point.
    """
    if isinstance(value, Infinity):
        return value
    if isinstance(value, bool) or isinstance(value, float):
        raise InputError(f"Floating point value not allowed: {value!r}")
    if isinstance(value, (int, Fraction)):
        return Fraction(value)
    if isinstance(value, str):
        text = value.strip()
        if text.lower() in ("inf", "+inf"):
            return INF
        if "." in text or "e" in text.lower():
            raise InputError(f"Exact values are written as 'p/q', not decimals: {value!r}")
        try:
            return Fraction(text)
        except (ValueError, ZeroDivisionError) as e:
            raise InputError(f"Invalid exact value {value!r}: {e}") from e
    raise InputError(f"Invalid exact value: {value!r}")


def format_exact(value: ExactValue) -> str:
    """Serialize as "p/q", "p" or "inf"."""
    if isinstance(value, Infinity):
        return "inf"
    return str(Fraction(value))


def exact_sum(values: Iterable[ExactValue]) -> ExactValue:
    """Sum that short-circuits to +inf."""
    total: ExactValue = Fraction(0)
    for value in values:
        if isinstance(value, Infinity):
            return INF
        total = total + value
    return total


def marginal(upper: ExactValue, lower: ExactValue) -> ExactValue:
    """Discrete derivative upper - lower.

    An infinite upper point gives +inf even when the lower point is infinite too,
    so a cost that stays at +inf beyond capacity has infinite marginals. A finite
    value following +inf is not representable and raises.
    """
    if isinstance(upper, Infinity):
        return INF
    if isinstance(lower, Infinity):
        raise ExactArithmeticError("cost decreases from inf to a finite value")
    return upper - lower
