"""
Configuration management for the dependent doors toolkit
Uses Pydantic Settings for environment variable management
"""
from typing import Optional
from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """
    Application settings loaded from environment variables
    """
    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore"
    )

    # ============================================
    # Application Settings
    # ============================================
    APP_NAME: str = "Dependent Doors"
    APP_VERSION: str = "1.0.0"
    LOG_LEVEL: str = "WARNING"
    LOG_FILE: Optional[str] = None

    # ============================================
    # Tolerances
    # ============================================
    DEFAULT_TOL: float = Field(
        default=1e-12,
        gt=0,
        description="Default absolute tolerance for sums and independent evaluation"
    )
    CASCADING_TOL: float = Field(
        default=1e-9,
        gt=0,
        description="Default tolerance for the cascading / DAG evaluator"
    )

    # ============================================
    # Evaluation Limits
    # ============================================
    HORIZON_CAP: int = Field(default=1_000_000, ge=1)
    STATE_SPACE_CAP: int = Field(default=2_000_000, ge=1)
    DAG_TRANSITION_CAP: int = Field(
        default=10_000_000,
        ge=1,
        description="Joint-state transitions the DAG evaluator may process per horizon"
    )
    TWO_DOOR_HORIZON_CAP: int = Field(default=50_000_000, ge=1)

    # ============================================
    # Two-Door Solver
    # ============================================
    GOLDEN_SECTION_TOL: float = Field(default=1e-12, gt=0)
    GOLDEN_SECTION_MAX_ITER: int = Field(default=500, ge=10)
    DENSE_SCAN_POINTS: int = Field(default=100_000, ge=100)
    VALUE_ITERATION_GRID: int = Field(default=100_000, ge=1_000)
    VALUE_ITERATION_TOL: float = Field(default=1e-10, gt=0)
    VALUE_ITERATION_MAX_ITER: int = Field(default=200_000, ge=1)

    # ============================================
    # Simulation
    # ============================================
    SIMULATION_BLOCK_SIZE: int = Field(default=65_536, ge=1)
    DEFAULT_TRIALS: int = Field(default=100_000, ge=1)
    DEFAULT_SEED: int = 0

    # ============================================
    # Output
    # ============================================
    OUTPUT_PRECISION: int = Field(default=9, ge=1, le=17)

    # ============================================
    # Computed Properties
    # ============================================

    @property
    def float_format(self) -> str:
        """printf-style format for floats in CLI output"""
        return f"%.{self.OUTPUT_PRECISION}g"


# ============================================
# Global Settings Instance
# ============================================

settings = Settings()
