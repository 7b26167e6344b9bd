"""Helper for collecting the assertions checked while a command runs."""

from typing import Any, List

from app.schemas.reports import AssertionRecord, ReportStatus


class AssertionLedger:
    """Builds the assertion checklist embedded in every report."""

    def __init__(self):
        self.records: List[AssertionRecord] = []

    def record(self, name: str, passed: bool, detail: str = "") -> bool:
        """Record a checked claim and return whether it held."""
        self.records.append(AssertionRecord(name=name, passed=bool(passed), detail=detail))
        return bool(passed)

    def record_bound(self, name: str, value: Any, bound: Any) -> bool:
        """Record value <= bound."""
        return self.record(name, value <= bound, f"{value} <= {bound}")

    def record_equal(self, name: str, value: Any, expected: Any) -> bool:
        return self.record(name, value == expected, f"{value} == {expected}")

    @property
    def all_passed(self) -> bool:
        return all(r.passed for r in self.records)

    def status(self, default: ReportStatus = ReportStatus.OK) -> ReportStatus:
        """FAILED as soon as one assertion failed, else `default`."""
        return default if self.all_passed else ReportStatus.FAILED

    def to_list(self) -> List[AssertionRecord]:
        return list(self.records)
