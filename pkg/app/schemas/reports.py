"""Pydantic schemas for command reports."""

from enum import Enum
from typing import Any, Optional

from pydantic import BaseModel, Field, model_validator

from app.config import settings


class ReportStatus(str, Enum):
    """Outcome of a command."""

    OK = "ok"
    INFEASIBLE = "infeasible"
    ABSENT = "absent"
    FAILED = "failed"


class AssertionRecord(BaseModel):
    """One checked claim of a run."""

    name: str
    passed: bool
    detail: str = ""


class Report(BaseModel):
    """Deterministic command output; exact values are strings."""

    schema_version: int = Field(default_factory=lambda: settings.REPORT_SCHEMA_VERSION)
    command: str
    arguments: dict[str, Any] = Field(default_factory=dict)
    input_digest: Optional[str] = None
    status: ReportStatus = ReportStatus.OK
    result: dict[str, Any] = Field(default_factory=dict)
    assertions: list[AssertionRecord] = Field(default_factory=list)
    trace: Optional[Any] = None
    wall_time_ms: Optional[int] = None

    @model_validator(mode="after")
    def ok_needs_passing_assertions(self) -> "Report":
        failed = [a.name for a in self.assertions if not a.passed]
        if self.status == ReportStatus.OK and failed:
            raise ValueError(f"Report claims success with failed assertions {failed}")
        return self

    @property
    def failed_assertions(self) -> list[AssertionRecord]:
        return [a for a in self.assertions if not a.passed]

    def to_json(self) -> str:
        unset = {
            name for name in ("input_digest", "trace", "wall_time_ms") if getattr(self, name) is None
        }
        return self.model_dump_json(indent=2, exclude=unset)
