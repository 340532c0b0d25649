"""Exception types shared across the package."""


class StcsimError(Exception):
    """Base class for all package-specific errors."""


class ShapeError(StcsimError, ValueError):
    """An array argument has the wrong shape or an inconsistent dimension."""


class LengthError(StcsimError, ValueError):
    """A sequence argument has an invalid length (e.g. bits not a multiple of log2 M)."""


class DomainError(StcsimError, ValueError):
    """A scalar argument is outside the supported domain."""


class NonPositiveDefiniteError(StcsimError, ValueError):
    """A matrix required to be positive definite failed the Cholesky pivot test."""


class OverflowGuardError(StcsimError, ValueError):
    """An analytic evaluation would leave the range where log-space math is safe."""


class SearchSpaceTooLargeError(StcsimError, ValueError):
    """An exhaustive search was requested over more than 2**20 candidates."""


class RankDeficientError(StcsimError, ValueError):
    """A basis matrix expected to have full column rank does not."""


class SingularError(StcsimError, ValueError):
    """A matrix that must be invertible (numerically) is singular."""


class ConfigError(StcsimError, ValueError):
    """An experiment configuration is structurally valid but semantically wrong."""


class ParseError(StcsimError, ValueError):
    """A spec file could not be parsed; carries the offending line number."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
