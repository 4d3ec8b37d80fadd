"""Exception hierarchy. Each class carries the CLI exit code for its category."""


class UedynError(Exception):
    exit_code = 1
    category = "error"


class IOFailure(UedynError):
    exit_code = 3
    category = "io"


class ParseError(UedynError):
    exit_code = 4
    category = "parse"

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class ValidationError(UedynError):
    exit_code = 5
    category = "validation"


class InsufficientDataError(ValidationError):
    category = "insufficient-data"


class DegenerateHomeBaseError(InsufficientDataError):
    pass


class PresenceFilterError(InsufficientDataError):
    """A character is absent from the opening or closing stretch of the movie."""
