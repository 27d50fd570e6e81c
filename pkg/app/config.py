"""
Configuration Management for the Covariant Quantization Toolkit
Uses Pydantic Settings for type-safe configuration with environment variable support
"""

from functools import lru_cache
from pathlib import Path
from typing import Any, Dict, Optional, Union

import yaml
from pydantic import BaseModel, ConfigDict, Field, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict


class Tolerances(BaseModel):
    """
    Numerical tolerances used by every operation

    Passed explicitly into library calls; the defaults come from Settings.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    herm_tol: float = 1e-10
    psd_tol: float = 1e-9
    trace_tol: float = 1e-9
    unitary_tol: float = 1e-8
    planar_unitary_tol: float = 1e-6
    dom_tol: float = 1e-6
    qc_tol: float = 1e-6
    mass_tol: float = 1e-6
    recovery_tol: float = 1e-6

    @field_validator("*")
    @classmethod
    def validate_nonnegative(cls, v: float) -> float:
        """Tolerances are nonnegative finite numbers"""
        if not v >= 0.0 or v == float("inf"):
            raise ValueError(f"Tolerance must be a nonnegative finite number, got {v}")
        return v

    def with_overrides(self, overrides: Union[Dict[str, Any], str, Path, None]) -> "Tolerances":
        """
        Return a copy with selected tolerances replaced

        Args:
            overrides: mapping of field -> value, or path to a JSON/YAML file

        Returns:
            New validated Tolerances instance
        """
        if overrides is None:
            return self
        if isinstance(overrides, (str, Path)):
            with open(overrides, "r", encoding="utf-8") as fh:
                overrides = yaml.safe_load(fh) or {}
        if not isinstance(overrides, dict):
            raise ValueError("Tolerance overrides must be a mapping")
        return Tolerances.model_validate({**self.model_dump(), **overrides})


class Settings(BaseSettings):
    """Main application settings with validation"""

    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore"
    )

    # ============================================
    # Application Settings
    # ============================================
    app_name: str = Field(default="Covariant Quantization Toolkit")
    app_version: str = Field(default="1.0.0")
    environment: str = Field(default="development")
    debug: bool = Field(default=False)
    log_level: str = Field(default="INFO")
    log_file: Optional[str] = Field(default=None)

    # Server
    host: str = Field(default="0.0.0.0")
    port: int = Field(default=8000)
    workers: int = Field(default=1)
    reload: bool = Field(default=False)

    # ============================================
    # Numerical Tolerances
    # ============================================
    herm_tol: float = Field(default=1e-10)
    psd_tol: float = Field(default=1e-9)
    trace_tol: float = Field(default=1e-9)
    unitary_tol: float = Field(default=1e-8)
    planar_unitary_tol: float = Field(default=1e-6)
    dom_tol: float = Field(default=1e-6)
    qc_tol: float = Field(default=1e-6)
    mass_tol: float = Field(default=1e-6)
    recovery_tol: float = Field(default=1e-6)

    # ============================================
    # Planar Grid Defaults
    # ============================================
    planar_fock_dim: int = Field(default=40)
    planar_half_extent: float = Field(default=6.0)
    planar_step: float = Field(default=0.1)
    # Fock levels on which truncation effects are below the quadrature tolerances
    planar_trusted_dim: int = Field(default=6)

    # ============================================
    # Performance & Limits
    # ============================================
    weyl_cache_capacity: int = Field(default=4096)
    sweep_chunk_size: int = Field(default=256)
    sweep_workers: int = Field(default=1)
    max_dim: int = Field(default=2000)

    # ============================================
    # Reproducibility
    # ============================================
    default_seed: int = Field(default=42)

    # ============================================
    # Validators
    # ============================================
    @field_validator("environment")
    @classmethod
    def validate_environment(cls, v: str) -> str:
        """Ensure environment is valid"""
        allowed = ["development", "staging", "production"]
        if v not in allowed:
            raise ValueError(f"Environment must be one of {allowed}")
        return v

    @field_validator("log_level")
    @classmethod
    def validate_log_level(cls, v: str) -> str:
        """Ensure log level is valid"""
        allowed = ["TRACE", "DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"]
        v_upper = v.upper()
        if v_upper not in allowed:
            raise ValueError(f"Log level must be one of {allowed}")
        return v_upper

    @field_validator("planar_fock_dim", "planar_trusted_dim", "weyl_cache_capacity",
                     "sweep_chunk_size", "sweep_workers")
    @classmethod
    def validate_positive(cls, v: int) -> int:
        """Sizes and counts must be positive"""
        if v < 1:
            raise ValueError(f"Expected a positive integer, got {v}")
        return v

    # ============================================
    # Helper Methods
    # ============================================
    def tolerances(self) -> Tolerances:
        """Build the Tolerances value object from the flat settings"""
        return Tolerances(
            herm_tol=self.herm_tol,
            psd_tol=self.psd_tol,
            trace_tol=self.trace_tol,
            unitary_tol=self.unitary_tol,
            planar_unitary_tol=self.planar_unitary_tol,
            dom_tol=self.dom_tol,
            qc_tol=self.qc_tol,
            mass_tol=self.mass_tol,
            recovery_tol=self.recovery_tol,
        )


@lru_cache()
def get_settings() -> Settings:
    """
    Get cached settings instance
    Use this function throughout the application to access settings

    Example:
        from app.config import get_settings
        settings = get_settings()
        print(settings.planar_fock_dim)
    """
    return Settings()


def default_tolerances() -> Tolerances:
    """Tolerances from the cached settings"""
    return get_settings().tolerances()
