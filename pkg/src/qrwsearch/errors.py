"""Exception hierarchy for the QRWS toolkit.

Every error carries the CLI exit code it maps to:
0 success, 1 validation, 2 numerical failure, 3 missing/unusable artifact.
"""

from __future__ import annotations
from typing import Any, Dict, Optional


class QRWSError(RuntimeError):
    """Base class for all toolkit errors."""
    exit_code = 1


class ConfigurationError(QRWSError):
    """Invalid experiment configuration (unknown keys, bad values, missing alpha_ml)."""
    exit_code = 1


class InvalidDimensionError(ConfigurationError, ValueError):
    """Coin size outside the supported range (m < 2)."""


class DomainError(QRWSError, ValueError):
    """Argument outside the mathematical domain of an operation."""
    exit_code = 1


class NumericalError(QRWSError):
    """Base class for numerical failures."""
    exit_code = 2


class InvariantError(NumericalError):
    """A probability or norm invariant was violated."""


class EmptyCurveError(NumericalError):
    """An analysis was requested on a curve without samples."""


class DegenerateNormalizationError(NumericalError):
    """A normalization point has (near) zero probability."""


class InsufficientResolutionError(NumericalError):
    """The grid is too coarse for the requested quantity."""


class ExtrapolationError(NumericalError):
    """A secondary fit produced non-positive Hill parameters."""


class FitFailure(NumericalError):
    """Least-squares fit did not converge."""

    def __init__(self, message: str, diagnostics: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}

    def __str__(self) -> str:
        base = super().__str__()
        if not self.diagnostics:
            return base
        details = ", ".join(f"{k}={v}" for k, v in sorted(self.diagnostics.items()))
        return f"{base} ({details})"


class MissingArtifactError(QRWSError):
    """An upstream artifact needed by a command does not exist."""
    exit_code = 3


class SchemaError(QRWSError):
    """An artifact exists but does not match the expected schema."""
    exit_code = 3
