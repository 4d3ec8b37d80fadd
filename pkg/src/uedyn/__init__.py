"""Utterance emotion dynamics for time-ordered dialogue."""

__version__ = "0.1.0"

from uedyn.errors import (
    DegenerateHomeBaseError,
    InsufficientDataError,
    ParseError,
    UedynError,
    ValidationError,
)

__all__ = [
    "__version__",
    "DegenerateHomeBaseError",
    "InsufficientDataError",
    "ParseError",
    "UedynError",
    "ValidationError",
]
