"""
Error types for the spectral-analysis services.

Every numerical failure raised by a service derives from ComputationError,
so the command layer can map it to exit code 1 and a machine-readable
error object without knowing which service produced it.

WHY: One exception hierarchy keeps failure reporting uniform across
recurrences, eigenvalue searches, quadratures and evolutions.
"""

from typing import Any, Dict, Optional


class ComputationError(Exception):
    """Base class for failures of a numerical operation."""

    label = 'Computation Error'

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.message = message
        self.details = details or {}

    def to_dict(self) -> Dict[str, Any]:
        """
        Render the error as the standard failure payload.

        Returns:
            Dictionary with success flag, error label, message and details
        """
        return {
            'success': False,
            'error': self.label,
            'message': self.message,
            'details': self.details
        }


class HypothesisError(ComputationError):
    """A coefficient family or input violates a standing assumption."""

    label = 'Hypothesis Violation'


class ConvergenceError(ComputationError):
    """An iterative procedure did not converge below the configured caps."""

    label = 'Non-Convergence'


class BracketError(ComputationError):
    """A root search found no sign change or monotone bracket."""

    label = 'Bracket Failure'


class RegimeError(ComputationError):
    """Coupling outside the range where the asymptotic regimes separate."""

    label = 'Regime Error'


class QuadratureError(ComputationError):
    """Adaptive quadrature reported an unreliable result."""

    label = 'Quadrature Failure'


class DegenerateCircleError(ComputationError):
    """Extension samples are collinear; no limit circle can be fitted."""

    label = 'Degenerate Circle'


class CompletenessError(ComputationError):
    """Spectral synthesis window misses too much spectral weight."""

    label = 'Completeness Defect'


class FamilyDefinitionError(ValueError):
    """A family definition file or mapping is malformed."""


class UsageError(ValueError):
    """Command-line arguments are inconsistent."""
