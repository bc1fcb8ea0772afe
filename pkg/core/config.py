"""
hardy_factor - Configuration
============================

Numerical tolerances and runtime settings.

Environment variables (all optional):
- HARDY_FACTOR_THREADS       cap for torus-sample parallelism (0 = serial)
- HARDY_FACTOR_TORUS_GRID    torus points per axis (default 8)
- HARDY_FACTOR_RANK_SAMPLES  local-rank sample count (default 64)
- HARDY_FACTOR_SEED          default seed (default 0)
- HARDY_FACTOR_LOG_LEVEL     logging level for main.py (default INFO)
"""

import logging
import os
from functools import lru_cache
from typing import Optional

from pydantic import BaseModel, Field

logger = logging.getLogger("hardy_factor")

HARDY_FACTOR_VERSION = "1.2.0"

# Window margin between input degrees and the computation window.
GUARD_MARGIN = 2


class Tolerances(BaseModel):
    """Numerical thresholds used across the pipeline."""

    # algorithmic cutoffs
    rank: float = Field(default=1e-8, gt=0)
    kernel: float = Field(default=1e-10, gt=0)
    local_rank: float = Field(default=1e-8, gt=0)
    chop: float = Field(default=1e-12, ge=0)

    # verdict tolerances
    orthonormality: float = Field(default=1e-10, gt=0)
    invariance: float = Field(default=1e-10, gt=0)
    identity: float = Field(default=1e-12, gt=0)
    commutator: float = Field(default=1e-8, gt=0)
    projection: float = Field(default=1e-8, gt=0)
    inner: float = Field(default=1e-10, gt=0)
    residual: float = Field(default=1e-10, gt=0)

    def override(self, tolerance: Optional[float]) -> "Tolerances":
        """Return a copy with the verdict tolerances replaced by ``tolerance``."""
        if tolerance is None:
            return self
        return self.model_copy(update={
            "commutator": tolerance,
            "projection": tolerance,
            "inner": tolerance,
            "residual": tolerance,
        })


DEFAULT_TOLERANCES = Tolerances()


def _env_int(name: str, default: Optional[int], minimum: int = 0) -> Optional[int]:
    raw = os.getenv(name)
    if raw is None or raw.strip() == "":
        return default
    try:
        value = int(raw)
    except ValueError:
        logger.warning(f"⚠️  {name}={raw!r} is not an integer, using {default}")
        return default
    if value < minimum:
        logger.warning(f"⚠️  {name}={value} below {minimum}, using {default}")
        return default
    return value


class Settings(BaseModel):
    """Runtime settings resolved from the environment."""

    threads: Optional[int] = None
    torus_grid: int = Field(default=8, ge=1)
    rank_samples: int = Field(default=64, ge=1)
    seed: int = 0
    log_level: str = "INFO"

    @classmethod
    def from_env(cls) -> "Settings":
        return cls(
            threads=_env_int("HARDY_FACTOR_THREADS", None),
            torus_grid=_env_int("HARDY_FACTOR_TORUS_GRID", 8, minimum=1),
            rank_samples=_env_int("HARDY_FACTOR_RANK_SAMPLES", 64, minimum=1),
            seed=_env_int("HARDY_FACTOR_SEED", 0),
            log_level=(os.getenv("HARDY_FACTOR_LOG_LEVEL") or "INFO").upper(),
        )


@lru_cache(maxsize=1)
def get_settings() -> Settings:
    return Settings.from_env()


def reset_settings() -> None:
    """Drop the cached settings so the environment is read again."""
    get_settings.cache_clear()
