"""Exception hierarchy shared by the library and the command line."""


class LicsError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(LicsError, ValueError):
    """Invalid physical parameter, schedule, or configuration value."""


class IntegrationError(LicsError):
    """The integrator could not meet its tolerance."""

    def __init__(self, message, t=None):
        super().__init__(message)
        self.t = t


class StiffnessError(IntegrationError):
    """Step size fell below the floor; carries the time of failure in ``t``."""
