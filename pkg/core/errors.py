"""
hardy_factor - Error types

Every failure raised by the library derives from HardyFactorError and names
the stage it came from. The CLI turns them into exit code 3 and still writes
the report carried by the error.
"""

from typing import Any, Dict, Optional


class HardyFactorError(Exception):
    """Base class for library failures."""

    stage = "library"

    def __init__(self, message: str, report: Any = None, stage: Optional[str] = None):
        super().__init__(message)
        self.message = message
        self.report = report
        if stage is not None:
            self.stage = stage

    def report_dict(self) -> Optional[Dict[str, Any]]:
        if self.report is None:
            return None
        if hasattr(self.report, "to_dict"):
            return self.report.to_dict()
        return dict(self.report)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "error": type(self).__name__,
            "stage": self.stage,
            "message": self.message,
            "report": self.report_dict(),
        }


class ShapeMismatchError(HardyFactorError, ValueError):
    stage = "shape"


class VariableIndexError(HardyFactorError, IndexError):
    stage = "shape"


class DomainError(HardyFactorError, ValueError):
    stage = "domain"


class WindowError(HardyFactorError, ValueError):
    stage = "window"


class NotSubmoduleError(HardyFactorError):
    stage = "submodule"


class NotDoublyCommutingError(HardyFactorError):
    stage = "doubly-commuting"


class NonBeurlingError(HardyFactorError):
    stage = "extract-inner"


class ContainmentError(HardyFactorError):
    stage = "wandering"


class ProblemParseError(HardyFactorError, ValueError):
    stage = "parse"


# ============================================================================
# Completion pipeline stages
# ============================================================================

class CompletionStageError(HardyFactorError):
    stage = "completion"


class LeftInverseError(CompletionStageError):
    stage = "left-inverse"


class KernelStageError(CompletionStageError):
    stage = "kernel"


class CommutingStageError(CompletionStageError):
    stage = "doubly-commuting"


class ExtractionStageError(CompletionStageError):
    stage = "extract-inner"


class RankNullityError(CompletionStageError):
    stage = "rank-nullity"


class AssemblyError(CompletionStageError):
    stage = "assemble-F"


class GammaSolveError(CompletionStageError):
    stage = "gamma-solve"


class ResidualError(CompletionStageError):
    stage = "residuals"
