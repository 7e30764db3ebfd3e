"""Exception hierarchy.

Errors derived from :class:`ValidationError` describe bad input or bad
configuration; the command line maps them to exit status 2.  Everything
else derived from :class:`TpamtlError` is a runtime failure (exit 1).
"""


class TpamtlError(Exception):
    """Base class for all package errors."""


class ValidationError(TpamtlError, ValueError):
    """Invalid input data or configuration."""


class InvalidInterval(ValidationError):
    pass


class EmptyActivity(ValidationError):
    pass


class EmptyTrainingSet(ValidationError):
    pass


class EmptyFeatureSpace(TpamtlError):
    """Mining produced no frequent pattern, so there is nothing to train on."""


class ParseError(ValidationError):
    def __init__(self, message, lineno=None, path=None):
        self.lineno = lineno
        self.path = path
        if path is not None and lineno is not None:
            message = f"{path}:{lineno}: {message}"
        elif path is not None:
            message = f"{path}: {message}"
        elif lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)


class ShapeMismatch(ValidationError):
    pass


class SingleClass(ValidationError):
    pass


class TooFewSamples(ValidationError):
    pass


class LengthMismatch(ValidationError):
    pass


class NoOmega(TpamtlError):
    pass


class NonFiniteEncountered(TpamtlError, ArithmeticError):
    pass


class UnrealizableTemplate(ValidationError):
    pass


class DegenerateWeightsWarning(RuntimeWarning):
    """W was identically zero at the task-covariance step; I/M was used."""
