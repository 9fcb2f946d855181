# fourfold/errors.py


class FourfoldError(Exception):
    """
    <summary>
    Base class for every failure the solver suite reports on purpose. Each error carries
    the process exit code the command line maps it to, plus a human-readable detail.
    </summary>
    <param name="detail" type="str">Description of what went wrong.</param>
    <param name="exit_code" type="int | None">Overrides the class default exit code.</param>
    """
    exit_code = 1

    def __init__(self, detail: str, exit_code: int | None = None):
        super().__init__(detail)
        self.detail = detail
        if exit_code is not None:
            self.exit_code = exit_code


class ConfigError(FourfoldError):
    """Invalid or unreadable run configuration."""
    exit_code = 2


class ConvergenceError(FourfoldError):
    """A relaxation ended in `max_steps` or `diverged`."""
    exit_code = 3


class ValidationFailure(FourfoldError):
    """At least one property of the validation suite failed."""
    exit_code = 4


class DomainError(FourfoldError, ValueError):
    """Input values outside the range an admissible-class map accepts."""


class PreconditionError(FourfoldError, ValueError):
    """
    <summary>
    Raised when an operator is called on data it is not defined for: unequal far-field
    values under a periodic transform, a non-admissible profile, or a plan built for a
    different grid.
    </summary>
    """


class TailFitError(FourfoldError):
    """No stable algebraic window could be found in the tail."""
