"""
Process-wide settings read from the environment (and a local .env file).

Experiment parameters live in ExperimentConfig; this module only holds the
knobs that belong to the machine the code runs on.
"""
import os
from functools import lru_cache
from pathlib import Path
from typing import List, Optional

from dotenv import load_dotenv
from pydantic import BaseModel, Field

from app.core.errors import ConfigurationError

load_dotenv()


class Settings(BaseModel):
    """Runtime settings shared by the CLI, the HTTP service and the tests."""
    threads: int = Field(..., ge=1, description="Workers for group transforms and experiment pools")
    oversampling: float = Field(2.0, ge=1.25, description="Oversampling factor of the FFT grid")
    window_cutoff: int = Field(6, ge=2, description="Window half-width m in grid points")
    window: str = Field("kaiser_bessel", description="Window family: kaiser_bessel or gaussian")
    transform_method: str = Field("auto", description="auto, direct or fast")
    output_dir: Path = Field(Path("results"), description="Default directory for result files")
    log_level: str = Field("INFO", description="Root logging level")
    census_csv: Optional[Path] = Field(None, description="User-supplied census CSV")
    allowed_origins: List[str] = Field(default_factory=list, description="CORS origins")


def _env_int(name: str, default: int) -> int:
    raw = os.getenv(name)
    if raw is None or raw == "":
        return default
    try:
        return int(raw)
    except ValueError:
        raise ConfigurationError(f"{name} must be an integer, got {raw!r}")


def _env_float(name: str, default: float) -> float:
    raw = os.getenv(name)
    if raw is None or raw == "":
        return default
    try:
        return float(raw)
    except ValueError:
        raise ConfigurationError(f"{name} must be a number, got {raw!r}")


def default_threads() -> int:
    return max(1, min(os.cpu_count() or 1, 8))


@lru_cache(maxsize=1)
def get_settings() -> Settings:
    window = os.getenv("ANOVA_WINDOW", "kaiser_bessel")
    if window not in ("kaiser_bessel", "gaussian"):
        raise ConfigurationError(f"ANOVA_WINDOW must be kaiser_bessel or gaussian, got {window!r}")
    method = os.getenv("ANOVA_TRANSFORM_METHOD", "auto")
    if method not in ("auto", "direct", "fast"):
        raise ConfigurationError(f"ANOVA_TRANSFORM_METHOD must be auto, direct or fast, got {method!r}")
    census = os.getenv("ANOVA_CENSUS_CSV")
    origins = os.getenv("ALLOWED_ORIGINS", "http://localhost:3000")
    try:
        return Settings(
            threads=_env_int("ANOVA_THREADS", default_threads()),
            oversampling=_env_float("ANOVA_OVERSAMPLING", 2.0),
            window_cutoff=_env_int("ANOVA_WINDOW_CUTOFF", 6),
            window=window,
            transform_method=method,
            output_dir=Path(os.getenv("ANOVA_OUTPUT_DIR", "results")),
            log_level=os.getenv("ANOVA_LOG_LEVEL", "INFO"),
            census_csv=Path(census) if census else None,
            allowed_origins=[o.strip() for o in origins.split(",") if o.strip()],
        )
    except ValueError as e:
        raise ConfigurationError(f"Invalid environment settings: {e}")
