"""Exception hierarchy.

The CLI maps these onto exit codes: validation/configuration problems
exit with 1, numerical failures with 2.
"""


class KerrOmitError(Exception):
    """Base class for all package errors."""


class ValidationError(KerrOmitError, ValueError):
    """A parameter value is out of its allowed range."""

    def __init__(self, field, message):
        self.field = field
        super().__init__(f"{field}: {message}")


class ConfigurationError(KerrOmitError, ValueError):
    """Inconsistent or malformed configuration (missing/duplicate/unknown keys)."""


class NumericalError(KerrOmitError, ArithmeticError):
    """A numerical procedure failed."""


class SingularityError(NumericalError):
    """A linear system or closed-form denominator is (near) singular."""

    def __init__(self, message, **context):
        self.context = context
        if context:
            detail = ", ".join(f"{k}={v!r}" for k, v in context.items())
            message = f"{message} ({detail})"
        super().__init__(message)


class BranchError(KerrOmitError, ValueError):
    """Requested steady-state branch does not exist (a policy error, not a numerical one)."""

    def __init__(self, requested, available):
        self.requested = requested
        self.available = tuple(available)
        super().__init__(
            f"branch {requested!r} not available; available branches: "
            + ", ".join(self.available)
        )


class StepSizeError(NumericalError):
    """Finite-difference stencil straddles a phase jump; use a smaller step."""


class ConvergenceError(NumericalError):
    """Time-domain demodulation did not settle within the window budget."""

    def __init__(self, message, metric, result=None):
        self.metric = metric
        self.result = result
        super().__init__(f"{message} (last metric {metric:.3e})")


class InstabilityError(NumericalError):
    """State blew up (NaN/overflow) during time integration."""


class UsageError(KerrOmitError, ValueError):
    """API misuse, e.g. comparing results computed for different parameters."""
