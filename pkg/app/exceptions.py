"""Error hierarchy shared by the services and the command line.

Every error carries the process exit code the CLI reports for it.
"""


class PolymatroidError(Exception):
    """Base class for all domain errors."""

    exit_code = 2


class InputError(PolymatroidError, ValueError):
    """Malformed or invalid input."""

    exit_code = 2


class DomainError(InputError):
    """Argument outside the domain of an operation."""


class ConstructionError(InputError):
    """Invalid parameters passed to a constructor."""


class NonSubmodularError(InputError):
    """A submodular rank function was required."""

    def __init__(self, message: str, witness=None):
        super().__init__(message)
        self.witness = witness


class PreconditionError(InputError):
    """An allocation does not satisfy an operation's precondition."""


class CapacityError(InputError):
    """Enumeration cap or oracle budget exceeded."""


class ExactArithmeticError(InputError, ArithmeticError):
    """Undefined operation on exact values (for example inf - inf)."""


class InfeasibleError(PolymatroidError):
    """Empty base polytope, or no pure Nash equilibrium exists."""

    exit_code = 1


class InvariantViolation(PolymatroidError, AssertionError):
    """A runtime certificate failed; signals an implementation bug, never bad input."""

    exit_code = 3
