"""Exception types shared across the package.

Every error carries an ``exit_code`` so the command-line front end can map
failures of a given class onto a stable process status.
"""


class PhdescError(Exception):
    exit_code = 1


class InputError(PhdescError, ValueError):
    """Malformed or non-finite user data."""

    exit_code = 2


class ParseError(InputError):
    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class ConfigurationError(PhdescError, ValueError):
    """Parameters that violate a precondition (cutoff too large, mismatched conventions)."""

    exit_code = 3


class ParameterError(ConfigurationError):
    pass


class InfeasibleError(ConfigurationError):
    pass


class DegenerateGeometryError(PhdescError, ValueError):
    exit_code = 4


class StructuralError(PhdescError):
    """A filtration that breaks the face-before-coface ordering."""

    exit_code = 5


class ShapeError(PhdescError, ValueError):
    """Grid specs or array shapes that do not match."""

    exit_code = 6


class SolverError(PhdescError, ArithmeticError):
    exit_code = 7


class UnsupportedOperationError(PhdescError):
    exit_code = 8


class FetchError(PhdescError, OSError):
    exit_code = 9

    def __init__(self, message, retryable=True):
        super().__init__(message)
        self.retryable = retryable
