"""
Exception hierarchy for DwellRec.

Every error raised on purpose by the library derives from DwellRecError and
carries the process exit code the CLI reports for it:

- 1: usage errors (bad flags, unknown subcommand)
- 2: data or configuration errors
- 3: numeric failures (NaN losses, shape mismatches, failed gradient checks)
"""

from typing import TYPE_CHECKING, Optional

if TYPE_CHECKING:
    from pydantic import ValidationError


class DwellRecError(Exception):
    """Base class for all DwellRec errors."""

    exit_code: int = 2

    def __init__(self, message: str, *, hint: Optional[str] = None) -> None:
        super().__init__(message)
        self.message = message
        self.hint = hint

    def __str__(self) -> str:
        if self.hint:
            return f"{self.message} (hint: {self.hint})"
        return self.message


class UsageError(DwellRecError):
    """Invalid command-line usage."""

    exit_code = 1


class ConfigError(DwellRecError):
    """Invalid configuration value, unknown key, or violated constraint."""

    def __init__(self, message: str, *, key: Optional[str] = None, hint: Optional[str] = None) -> None:
        super().__init__(f"{key}: {message}" if key else message, hint=hint)
        self.key = key


class DataFormatError(DwellRecError):
    """A log, catalog, store, or checkpoint file could not be parsed."""

    def __init__(self, message: str, *, path: Optional[str] = None, line: Optional[int] = None) -> None:
        location = ""
        if path is not None:
            location = f"{path}:{line}: " if line is not None else f"{path}: "
        elif line is not None:
            location = f"line {line}: "
        super().__init__(f"{location}{message}")
        self.path = path
        self.line = line


class InvalidInputError(DwellRecError):
    """An argument is outside the domain of the operation."""


class EmptyInputError(DwellRecError):
    """An operation that needs at least one element received none."""


class MissingNewsError(DwellRecError, KeyError):
    """A news id is not present in the embedding store."""

    def __init__(self, news_id: str) -> None:
        DwellRecError.__init__(self, f"news id not found in embedding store: {news_id!r}")
        self.news_id = news_id

    def __str__(self) -> str:
        return self.message


class RemoteFetchError(DwellRecError):
    """The remote embedding service failed."""

    def __init__(self, message: str, *, retryable: bool = True, attempts: int = 0) -> None:
        super().__init__(message)
        self.retryable = retryable
        self.attempts = attempts


class ShapeError(DwellRecError):
    """Tensor shapes are incompatible."""

    exit_code = 3

    def __init__(self, op: str, left: tuple, right: tuple) -> None:
        super().__init__(f"{op}: incompatible shapes {tuple(left)} and {tuple(right)}")
        self.left = tuple(left)
        self.right = tuple(right)


class NumericError(DwellRecError):
    """Non-finite values or a failed numeric check."""

    exit_code = 3


def config_error_from(exc: "ValidationError", section: str = "") -> ConfigError:
    """Turn the first pydantic validation error into a ConfigError naming the key."""
    first = exc.errors()[0]
    loc = ".".join(str(part) for part in first.get("loc", ()))
    key = ".".join(part for part in (section, loc) if part) or None
    return ConfigError(first.get("msg", "invalid value"), key=key)
