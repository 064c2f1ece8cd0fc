"""Exception types shared across the package."""


class PlapLabError(Exception):
    """Base class for all package errors."""


class DegenerateGradientError(PlapLabError):
    """Radial p-Laplacian formula is singular: v'(r) = 0 with p < 2."""


class OutOfTableError(PlapLabError):
    """Tabulated potential queried outside its radius grid."""


class ConditionViolationError(PlapLabError):
    """A potential-class precondition (Kato/Dini verdict) is not met."""


class QuadratureFailureError(PlapLabError):
    """Adaptive quadrature could not reach its error target."""


class PositivityLostError(PlapLabError):
    """ODE solution reached zero; the positive-solution contract broke.

    Carries the truncated solution in ``partial`` when available.
    """

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class StepFailureError(PlapLabError):
    """Adaptive stepper could not meet its tolerance."""


class BracketFailureError(PlapLabError):
    """Shooting could not bracket the boundary mismatch (no sign change)."""


class EnvelopeFailureError(PlapLabError):
    """No constant up to C_max certifies the sub/supersolution pair."""


class NotApplicableError(PlapLabError):
    """The requested diagnostic does not apply to this configuration."""


class DomainTooShortError(PlapLabError):
    """Too few tail samples toward the singular point for the estimate."""


class WindowNotFoundError(PlapLabError):
    """No radius window satisfies the three-spheres validity conditions."""


class ScenarioParseError(PlapLabError):
    """Malformed scenario file."""


class TaskError(PlapLabError):
    """A scenario task failed; carries the task index."""

    def __init__(self, message, task_index=None):
        super().__init__(message)
        self.task_index = task_index
