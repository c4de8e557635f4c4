from __future__ import annotations

import sys
from collections.abc import Iterator, Mapping
from contextlib import contextmanager
from typing import TextIO

from tabb import TabbError


@contextmanager
def reraise_as(
    error_type: type[OvqiteError],
    *source_types: type[Exception],
    prefix: str | None = None,
) -> Iterator[None]:
    """Context manager that converts low-level exceptions into ``error_type``."""
    try:
        yield

    except error_type:
        raise

    except source_types as error:
        message = str(error) if prefix is None else f"{prefix}: {error}"
        raise error_type(message) from error


class OvqiteError(TabbError):
    """Base class for errors the command line can show to the user."""

    exit_code = 1


class ConfigError(OvqiteError):
    """The experiment configuration could not be read or is invalid."""

    exit_code = 2


class DimensionError(OvqiteError, ValueError):
    """Qubit counts or vector lengths do not match."""


class ValidationError(OvqiteError, ValueError):
    pass


class CapabilityError(OvqiteError):
    """The request exceeds what the dense simulator can handle."""

    exit_code = 3


class IncompleteEstimatesError(OvqiteError, LookupError):
    def __init__(self, missing: str) -> None:
        super().__init__(f"Missing expectation value for Pauli string {missing!r}.")
        self.missing = missing


class SolverError(OvqiteError):
    """A linear solve failed.

    :param diagnostics: extra values describing the failure, shown after the
        message.
    """

    exit_code = 4

    def __init__(
        self, message: str, diagnostics: Mapping[str, object] | None = None
    ) -> None:
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})

    def format_message(self) -> str:
        if not self.diagnostics:
            return self.message

        details = ", ".join(f"{key}={value}" for key, value in self.diagnostics.items())
        return f"{self.message} ({details})"

    def show(self, file: TextIO = sys.stderr) -> None:
        print(f"Solver error: {self.format_message()}", file=file)


class DefinitenessError(SolverError):
    """The covariance of the residual is not positive definite."""
