"""Exception types raised across the package."""


class ParameterDomainError(ValueError):
    """A scalar parameter lies outside its admissible domain."""


class InvalidOperatorError(ValueError):
    """An operator fails the structural property it is declared to have."""


class InvalidScheduleError(ValueError):
    """A relaxation or damping function takes a nonpositive value."""


class CapabilityError(ValueError):
    """A schedule or operator lacks a capability the caller needs."""


class StiffnessError(RuntimeError):
    """Adaptive integration needed a step below the configured minimum."""

    def __init__(self, t, step, min_step):
        super().__init__(
            f"step size {step:.3e} fell below min_step={min_step:.3e} at t={t:.6g}"
        )
        self.t = t
        self.step = step
        self.min_step = min_step


class PreconditionError(ValueError):
    """A diagnostic was called with inputs violating its precondition."""


class DegenerateFitError(ValueError):
    """A log-log fit was requested over nonpositive values."""


class AssumptionViolation(RuntimeError):
    """An experiment's schedule does not satisfy the assumption it relies on."""

    def __init__(self, report):
        super().__init__(report.describe())
        self.report = report


class RangeError(ValueError):
    """A requested time lies outside the recorded trajectory."""
