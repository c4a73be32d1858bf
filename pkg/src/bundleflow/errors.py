"""Exception types shared across the package."""

from __future__ import annotations


class BundleFlowError(Exception):
    """Base class for all package errors."""


class ExprSyntaxError(BundleFlowError):
    """Raised when an expression string cannot be parsed.

    The byte offset of the offending token is kept in ``offset``.
    """

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at byte {offset})")
        self.offset = offset


class EvalDomainError(BundleFlowError):
    """Raised when an expression is evaluated outside its domain."""


class SingularMetricError(BundleFlowError):
    """Raised when the metric matrix is (numerically) singular at a point."""


class PurityError(BundleFlowError):
    """Raised when g(phi X, Y) = g(X, phi Y) fails beyond tolerance at a point."""


class ConstraintError(BundleFlowError):
    """Raised for states that violate the phi-unit bundle constraints."""


class ParameterError(BundleFlowError):
    """Raised when closed-form family parameters violate their constraints."""


class SignatureError(BundleFlowError):
    """Raised when Frenet analysis meets an indefinite restriction of the metric."""


class VerticalCurveError(BundleFlowError):
    """Raised when a projected curve is (numerically) stationary."""


class IntegrationBlowUp(BundleFlowError):
    """Raised when the integrator produces a non-finite state.

    Carries the last valid partial trajectory and the time it was reached.
    """

    def __init__(self, message: str, trajectory, time: float):
        super().__init__(message)
        self.trajectory = trajectory
        self.time = time


class UnknownEntryError(BundleFlowError):
    """Raised for unknown catalog or verification-suite names."""


class ScenarioError(BundleFlowError):
    """Raised for malformed scenario configuration."""
