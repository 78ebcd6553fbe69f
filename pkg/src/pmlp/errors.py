"""Exception types shared across the toolkit."""


class ToolkitError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(ToolkitError):
    """A precondition, invariant or configuration constraint was violated."""


class NumericError(ToolkitError):
    """A computation produced or encountered non-finite values."""


class FactorizationError(NumericError):
    """A damped normal-equation system could not be factorized accurately.

    Raised by the linear solver when the system matrix is numerically
    indefinite or too ill-conditioned for the requested accuracy; the
    fitting loop treats it as a signal to escalate the damping factor.
    """


class DataFormatError(ToolkitError):
    """A file (series, network, config) could not be parsed."""
