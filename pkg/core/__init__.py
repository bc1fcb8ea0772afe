"""
Core configuration, error and verdict types
"""

from core.config import (
    DEFAULT_TOLERANCES,
    GUARD_MARGIN,
    HARDY_FACTOR_VERSION,
    Settings,
    Tolerances,
    get_settings,
    reset_settings,
)
from core.errors import HardyFactorError
from core.verdicts import Check

__all__ = [
    "Check",
    "DEFAULT_TOLERANCES",
    "GUARD_MARGIN",
    "HARDY_FACTOR_VERSION",
    "HardyFactorError",
    "Settings",
    "Tolerances",
    "get_settings",
    "reset_settings",
]
