"""Exception types shared across the package."""


class CrowdflowError(Exception):
    """Base class for all crowdflow errors."""


class ConfigurationError(CrowdflowError):
    """A scenario or grid violates a model hypothesis or is malformed."""


class FieldEvaluationError(CrowdflowError):
    """A velocity or reaction expression produced a non-finite value."""


class ReactionDomainError(CrowdflowError):
    """Reaction evaluated outside the admissible density interval.

    This indicates a scheme bug (constraint slack exceeded), not a user
    input error.
    """


class StepSizeError(CrowdflowError):
    """An explicit step was requested with dt above the monotonicity bound."""


class ConvergenceError(CrowdflowError):
    """The complementarity solver exhausted its sweep budget."""

    def __init__(self, message, residual=None, sweeps=None):
        super().__init__(message)
        self.residual = residual
        self.sweeps = sweeps
