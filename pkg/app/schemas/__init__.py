"""Pydantic schemas package."""

from app.schemas.instances import (
    CostDeclaration,
    GameFile,
    InstanceFile,
    PlayerDeclaration,
    ProblemFile,
    RankDeclaration,
)
from app.schemas.reports import AssertionRecord, Report, ReportStatus

__all__ = [
    # Instances
    "CostDeclaration",
    "GameFile",
    "InstanceFile",
    "PlayerDeclaration",
    "ProblemFile",
    "RankDeclaration",
    # Reports
    "AssertionRecord",
    "Report",
    "ReportStatus",
]
