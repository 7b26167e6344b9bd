"""Command implementations behind the polygame entry point."""

from app.cli.commands import (
    cmd_check,
    cmd_counterexample,
    cmd_pne,
    cmd_reopt,
    cmd_selftest,
    cmd_solve,
    parse_shift,
)
from app.cli.ledger import AssertionLedger

__all__ = [
    "AssertionLedger",
    "cmd_check",
    "cmd_counterexample",
    "cmd_pne",
    "cmd_reopt",
    "cmd_selftest",
    "cmd_solve",
    "parse_shift",
]
