"""Exception hierarchy for momentgap

Every error derives from the builtin the caller would naturally catch
(ValueError for bad input, RuntimeError for numerical failure), so
``except ValueError`` keeps working for library users.
"""

from typing import Any, Dict, Optional


class MomentGapError(Exception):
    """Base class for all momentgap errors."""


class ParameterError(MomentGapError, ValueError):
    """An exponent, constant, bias, tolerance or size is out of range."""


class NormalizationError(MomentGapError, ValueError):
    """A random variable does not satisfy ``||X||_2 = 1`` where required."""


class DegenerateInputError(MomentGapError, ValueError):
    """Input is degenerate (all-zero variable, constant cube function)."""


class DomainError(MomentGapError, ValueError):
    """Evaluation point lies on or too close to the boundary of the domain."""


class CapacityError(MomentGapError, ValueError):
    """Exact enumeration would exceed the supported size."""


class _DiagnosticError(MomentGapError, RuntimeError):
    """Numerical failure carrying solver diagnostics."""

    def __init__(self, message: str, diagnostics: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.diagnostics: Dict[str, Any] = dict(diagnostics or {})


class SolverError(_DiagnosticError):
    """Minimization did not converge within its iteration cap."""


class QuadratureError(_DiagnosticError):
    """Quadrature did not reach the requested tolerance."""


class IdentityError(_DiagnosticError):
    """A closed-form identity disagreed with direct evaluation."""
