"""Application configuration using pydantic-settings."""

import logging

from pydantic import Field, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Application settings loaded from environment variables."""

    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
    )

    # Enumeration caps
    ENUMERATION_CAP: int = Field(
        default=20, description="Largest ground set for exhaustive subset scans"
    )
    ORACLE_MAX_GROUND: int = Field(
        default=6, description="Largest ground set the brute-force oracles accept"
    )
    ORACLE_MAX_DEMAND: int = Field(
        default=6, description="Largest demand the brute-force oracles accept"
    )
    ORACLE_MAX_POINTS: int = Field(
        default=1_000_000, description="Maximum enumerated points or profiles per oracle call"
    )
    COST_SAMPLE_MAX: int = Field(
        default=32,
        description="Sampled domain 0..N for monotonicity/convexity checks of congestion functions",
    )

    # Self-test sweep
    SELFTEST_INSTANCES: int = Field(default=500, description="Random instances for solve sweeps")
    SELFTEST_SHIFT_SCENARIOS: int = Field(
        default=300, description="Random shift scenarios for reoptimization sweeps"
    )
    SELFTEST_GAMES: int = Field(default=200, description="Random games for the PNE sweep")
    SELFTEST_NONSUBMODULAR: int = Field(
        default=20, description="Random non-submodular rank functions for the counterexample sweep"
    )
    DEFAULT_SEED: int = Field(default=0, description="Default seed for randomized sweeps")
    MAX_CONCURRENT_INSTANCES: int = Field(
        default=4, description="Maximum instances checked concurrently by the self-test"
    )

    # Application Settings
    LOG_LEVEL: str = Field(default="WARNING", description="Logging level")
    LOG_JSON: bool = Field(default=True, description="Render logs as JSON lines")

    # File formats
    REPORT_SCHEMA_VERSION: int = Field(default=1, description="Version stamped on reports")
    INSTANCE_SCHEMA_VERSION: int = Field(
        default=1, description="Accepted `schema` value of instance files"
    )

    @field_validator("LOG_LEVEL", mode="before")
    @classmethod
    def normalize_log_level(cls, v: str) -> str:
        """Upper-case the level name and reject unknown names."""
        level = str(v).upper()
        if not isinstance(logging.getLevelName(level), int):
            raise ValueError(f"Unknown log level: {v}")
        return level

    @property
    def oracle_budget(self):
        """Return the default enumeration budget of the brute-force oracles."""
        from app.services.oracle import EnumerationBudget

        return EnumerationBudget(
            max_ground=self.ORACLE_MAX_GROUND,
            max_demand=self.ORACLE_MAX_DEMAND,
            max_points=self.ORACLE_MAX_POINTS,
        )


# Create settings instance
settings = Settings()
